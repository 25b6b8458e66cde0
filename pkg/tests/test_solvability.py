import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sector_bvp import (
    DidNotConverge,
    PerturbationOperators,
    PiecewiseWeight,
    check_condition,
    constants,
    make_operator,
    solve_full,
)
from sector_bvp.errors import EpsilonOutOfRange
from sector_bvp.solvability import margin_from_norms

W11 = PiecewiseWeight(1.0, 1.0)


def test_constants_examples():
    assert constants(0.0, 1.0, 1.0) == pytest.approx((1.0, 0.5, 1.0), abs=1e-12)
    assert constants(math.pi / 4, 1.0, 2.0) == pytest.approx((1.0, 1 / math.sqrt(2), 2.0), abs=1e-12)
    assert constants(math.pi / 3, 1.0, 1.0) == pytest.approx((math.sqrt(2), 1.0, math.sqrt(2)), abs=1e-12)
    with pytest.raises(EpsilonOutOfRange):
        constants(math.pi / 2, 1.0, 1.0)
    with pytest.raises(EpsilonOutOfRange):
        constants(-0.1, 1.0, 1.0)


def test_check_condition_examples():
    A = make_operator([1.0, 2.0])
    rep = check_condition(A, PerturbationOperators.zeros(2), W11)
    assert rep.margin == 0.0 and rep.verdict and rep.adopted_condition
    _, q = margin_from_norms(0.0, W11, (0.2, 0.2, 0.2))
    assert q == pytest.approx(0.5, abs=1e-15)
    _, q = margin_from_norms(0.0, W11, (1.2, 0.0, 0.0))
    assert q == pytest.approx(1.2) and not q < 1
    # B0 = A0 directly; here ||B0|| = 1.2 from a real operator
    rep = check_condition(make_operator([1.0]), PerturbationOperators(np.array([[1.2]]), np.zeros((1, 1)), np.zeros((1, 1))), W11)
    assert rep.margin == pytest.approx(1.2) and rep.verdict is False


def test_b_norms_use_inverse_powers():
    A = make_operator([2.0])
    P = PerturbationOperators(np.zeros((1, 1)), np.array([[0.4]]), np.array([[0.8]]))
    rep = check_condition(A, P, W11)
    assert rep.b_norms == pytest.approx((0.0, 0.2, 0.2), abs=1e-15)


def test_branch_continuity():
    e = math.pi / 4
    left = constants(np.nextafter(e, 0), 1.3, 0.7)
    at = constants(e, 1.3, 0.7)
    right = constants(np.nextafter(e, 1), 1.3, 0.7)
    for a, b, c in zip(left, at, right):
        assert abs(a - b) <= 1e-12 and abs(b - c) <= 1e-12


def test_forward_implication_example():
    A = make_operator([1.0])
    P = PerturbationOperators(np.array([[0.3]]), np.array([[0.2]]), np.array([[0.1]]))
    rep = check_condition(A, P, W11)
    assert rep.verdict
    sol = solve_full(A, W11, P, [1.0])
    assert sol.converged


def test_equal_weight_bound_not_uniform_in_scale():
    # A = (1), alpha = beta = 2, A0 = 2 has margin 0.5 yet the equation is u'' + 4u = 0
    # (no decaying solution), so the constant c0 = 1/min(alpha, beta)^2 cannot be a valid bound
    w = PiecewiseWeight(2.0, 2.0)
    P = PerturbationOperators(np.array([[2.0]]), np.zeros((1, 1)), np.zeros((1, 1)))
    rep = check_condition(make_operator([1.0]), P, w)
    assert rep.margin == pytest.approx(0.5) and rep.verdict
    with pytest.raises(DidNotConverge):
        solve_full(make_operator([1.0]), w, P, [1.0], max_iter=40)


eps = st.floats(0.0, 1.55)
pos = st.floats(0.05, 20.0)


@given(eps, eps, pos, pos)
def test_monotonicity(e1, e2, a, b):
    lo, hi = sorted((e1, e2))
    c_lo, c_hi = constants(lo, a, b), constants(hi, a, b)
    assert c_hi[1] >= c_lo[1] * (1 - 1e-15)
    if lo >= math.pi / 4:
        assert all(h >= l * (1 - 1e-15) for h, l in zip(c_hi, c_lo))


@given(eps, pos, pos, st.floats(0.1, 10.0))
def test_scale_law(e, a, b, s):
    c0, c1, c2 = constants(e, a, b)
    d0, d1, d2 = constants(e, s * a, s * b)
    assert d0 == pytest.approx(c0 / s**2, rel=1e-12)
    assert d1 == pytest.approx(c1 / s, rel=1e-12)
    assert d2 == pytest.approx(c2 / s, rel=1e-12)


@given(eps, pos, pos, st.lists(st.floats(0, 5), min_size=3, max_size=3))
def test_report_invariants(e, a, b, norms):
    c, q = margin_from_norms(e, PiecewiseWeight(a, b), norms)
    assert all(x > 0 for x in c) and q >= 0
