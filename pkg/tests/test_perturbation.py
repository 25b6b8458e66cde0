import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import admissible_perturbations, exact_full_solution
from sector_bvp import (
    DidNotConverge,
    ExpPoly,
    PerturbationOperators,
    PiecewiseWeight,
    apply_p1,
    check_condition,
    fd_solve_mode,
    full_residual,
    green_apply,
    make_operator,
    p0_inverse,
    random_operator,
    solve_full,
    solve_principal,
    source_term,
)
from sector_bvp.errors import EvaluationAtKink, NonDecayingSource
from sector_bvp.perturbation import GreenFunctionMode

W11 = PiecewiseWeight(1.0, 1.0)
A1 = make_operator([1.0])
T_POINTS = np.array([0.1, 0.5, 0.9, 1.3, 2.0, 4.0])


def scalar(c):
    return np.array([[complex(c)]])


def pert(n=1, A0=0.0, A1=0.0, A2=0.0):
    return PerturbationOperators(*(np.eye(n) * x for x in (A0, A1, A2)))


def test_source_term_examples():
    u0 = solve_principal(A1, W11, [1.0])
    assert np.abs(source_term(u0, pert()).evaluate(T_POINTS)).max() == 0.0
    g = source_term(u0, pert(A2=0.3))
    assert np.allclose(g.evaluate(T_POINTS)[:, 0], -0.3 * np.exp(-T_POINTS), atol=1e-14)
    g = source_term(u0, pert(A1=0.3))
    assert np.allclose(g.evaluate(T_POINTS)[:, 0], 0.3 * np.exp(-T_POINTS), atol=1e-14)


def test_green_apply_closed_form():
    f = ExpPoly.from_exponentials([[1.0]], [2.0])
    y = green_apply(1.0, W11, f)
    expect = (np.exp(-T_POINTS) - np.exp(-2 * T_POINTS)) / 3
    assert np.allclose(y.evaluate(T_POINTS)[:, 0], expect, atol=1e-14)
    assert y.evaluate(1.0)[0] == pytest.approx((math.exp(-1) - math.exp(-2)) / 3, abs=1e-14)
    res = green_apply(1.0, W11, ExpPoly.from_exponentials([[1.0]], [1.0]))
    assert np.allclose(res.evaluate(T_POINTS)[:, 0], T_POINTS / 2 * np.exp(-T_POINTS), atol=1e-13)
    assert res.evaluate(1.0)[0] == pytest.approx(math.exp(-1) / 2, abs=1e-14)
    zero = green_apply(1.0, W11, ExpPoly.from_exponentials([[0.0]], [2.0]))
    assert np.abs(zero.evaluate(T_POINTS)).max() == 0.0


def test_green_apply_quadrature_and_decay_check():
    y = green_apply(1.0, W11, lambda s: math.exp(-2 * s))
    expect = (np.exp(-T_POINTS) - np.exp(-2 * T_POINTS)) / 3
    assert np.allclose(y(T_POINTS), expect, atol=1e-9)
    with pytest.raises(NonDecayingSource):
        green_apply(1.0, W11, lambda s: 1.0)


def test_green_function_structure():
    w = PiecewiseWeight(0.7, 1.8)
    g = GreenFunctionMode(1.3 * np.exp(0.4j), w)
    t = np.linspace(0, 5, 23)
    W = g.conjunct(t)
    assert np.abs(W - W[0]).max() <= 1e-10 * abs(W[0])
    assert g.y_left(0.0) == 0
    for f in (g.y_left, g.y_right):
        for order in (0, 1):
            below, above = f(1 - 1e-13, order), f(1.0, order)
            assert abs(below - above) <= 1e-10 * max(1.0, abs(above))


def test_green_agrees_with_fd():
    # y = G f for f = e^{-2t} vs finite differences of the inhomogeneous mode problem
    from scipy.linalg import solve_banded

    w = PiecewiseWeight(0.8, 1.5)
    lam = 1.2
    y = green_apply(lam, w, ExpPoly.from_exponentials([[1.0]], [2.0]))
    errs = []
    for h in (0.02, 0.01, 0.005):
        N = round(25 / h)
        t = h * np.arange(N + 1)
        rho = np.where(t < 1, w.alpha**2, w.beta**2)
        rho[round(1 / h)] = 0.5 * (w.alpha**2 + w.beta**2)
        ab = np.zeros((3, N))
        ab[1, : N - 1] = 2 / h**2 + rho[1:N] * lam**2
        ab[0, 1:] = -1 / h**2
        ab[2, : N - 1] = -1 / h**2
        ab[1, N - 1], ab[2, N - 2] = 1 / h + w.beta * lam, -1 / h
        rhs = np.r_[np.exp(-2 * t[1:N]), 0.0]
        fd = np.r_[0.0, solve_banded((1, 1), ab, rhs)]
        errs.append(np.abs(fd - y.evaluate(t)[:, 0]).max())
    order = np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])
    assert all(1.8 <= o <= 2.2 for o in order)


def test_p0_inverse_diagonal():
    A = make_operator([1.0, 2.0])
    g = ExpPoly.from_exponentials([[1.0], [0.0]], [2.0])
    v = p0_inverse(A, W11, g)
    out = v.evaluate(T_POINTS)
    assert np.allclose(out[:, 0], (np.exp(-T_POINTS) - np.exp(-2 * T_POINTS)) / 3, atol=1e-14)
    assert np.abs(out[:, 1]).max() <= 1e-15
    zero = p0_inverse(A, W11, ExpPoly.from_exponentials([[0.0], [0.0]], [2.0]))
    assert np.abs(zero.evaluate(T_POINTS)).max() == 0.0


def test_p0_inverse_satisfies_ode():
    rng = np.random.default_rng(5)
    A = random_operator(3, np.pi / 4, rng)
    w = PiecewiseWeight(0.6, 2.1)
    g = ExpPoly.from_exponentials(rng.standard_normal((3, 2)) + 0j, [1.5, 0.7 + 0.3j], basis=A.eigenbasis)
    v = p0_inverse(A, w, g)
    t = np.array([0.2, 0.7, 1.4, 3.3])
    lhs = -v.evaluate(t, 2) + np.asarray(w(t))[:, None] * (v.evaluate(t) @ A.power_matrix(2).T)
    assert np.abs(lhs - g.evaluate(t)).max() <= 1e-8 * np.abs(g.evaluate(t)).max()
    assert np.abs(v.evaluate(0.0)).max() <= 1e-12


def test_apply_p1_examples():
    u = ExpPoly.from_exponentials([[1.0]], [1.0])
    assert np.abs(apply_p1(pert(), u).evaluate(T_POINTS)).max() == 0.0
    assert np.allclose(apply_p1(pert(A2=1.0), u).evaluate(T_POINTS), u.evaluate(T_POINTS), atol=1e-15)
    assert np.allclose(apply_p1(pert(A0=1.0), u).evaluate(T_POINTS)[:, 0], np.exp(-T_POINTS), atol=1e-15)


def test_solve_full_zero_perturbation():
    rng = np.random.default_rng(1)
    A = random_operator(4, np.pi / 6, rng)
    phi = rng.standard_normal(4) + 0j
    sol = solve_full(A, W11, PerturbationOperators.zeros(4), phi)
    u0 = solve_principal(A, W11, phi)
    assert np.abs(sol.evaluate(T_POINTS) - u0.evaluate(T_POINTS)).max() <= 1e-14
    scale = np.abs(u0.evaluate(T_POINTS, 2)).max()
    assert full_residual(sol, T_POINTS).max() <= 1e-10 * scale


def test_closed_form_a2():
    sol = solve_full(A1, W11, pert(A2=0.1), [1.0], tol=1e-12)
    assert sol.evaluate(1.0)[0].real == pytest.approx(math.exp(-math.sqrt(1.1)), abs=1e-8)
    assert np.allclose(sol.evaluate(T_POINTS)[:, 0], np.exp(-math.sqrt(1.1) * T_POINTS), atol=1e-9)
    assert full_residual(sol, 0.5) <= 1e-9


def test_closed_form_a1():
    r = (0.1 - math.sqrt(4.01)) / 2
    sol = solve_full(A1, W11, pert(A1=0.1), [1.0], tol=1e-12)
    assert sol.evaluate(1.0)[0].real == pytest.approx(math.exp(r), abs=1e-8)


def test_initial_iterate_residual_identity():
    # with v = 0 the full residual equals ||A0 u0'' + A1 u0' + A2 u0||
    rng = np.random.default_rng(3)
    A = random_operator(2, 0.0, rng)
    P = admissible_perturbations(A, W11, 0.5, rng)
    sol = solve_full(A, W11, P, [1.0, 0.5], max_iter=0, tol=1e10)
    u0 = solve_principal(A, W11, [1.0, 0.5])
    expect = np.linalg.norm(apply_p1(P, u0.function).evaluate(T_POINTS), axis=1)
    assert np.allclose(full_residual(sol, T_POINTS), expect, rtol=1e-10)


def test_full_residual_kink():
    sol = solve_full(A1, W11, pert(A2=0.1), [1.0])
    with pytest.raises(EvaluationAtKink):
        full_residual(sol, 1.0)


def test_divergence_reported():
    # A0 = 2 gives u'' + u = 0 for A = (1), alpha = beta = 1: no decaying solution
    with pytest.raises(DidNotConverge) as info:
        solve_full(A1, W11, pert(A0=2.0), [1.0], max_iter=40)
    assert info.value.solution is not None
    assert info.value.contraction_ratio is None or info.value.contraction_ratio >= 1.0 - 1e-6


def test_agrees_with_exact_oracle():
    rng = np.random.default_rng(11)
    A = random_operator(3, np.pi / 6, rng, modulus=(0.5, 4.0))
    w = PiecewiseWeight(1.0, 1.0)
    P = admissible_perturbations(A, w, 0.5, rng)
    phi = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    sol = solve_full(A, w, P, phi, tol=1e-12)
    u = exact_full_solution(A, w, P, phi)
    t = np.array([0.05, 0.4, 0.99, 1.01, 2.5, 6.0])
    for order in (0, 1):
        assert np.abs(sol.evaluate(t, order) - u(t, order)).max() <= 1e-8 * np.abs(phi).max()


seeds = st.integers(0, 2**32 - 1)
eps_choice = st.sampled_from([0.0, np.pi / 6, np.pi / 4, np.pi / 3])


@settings(max_examples=15)
@given(seeds, st.integers(1, 4), eps_choice, st.floats(0.05, 0.7))
def test_contraction_and_trace(seed, n, eps, q):
    rng = np.random.default_rng(seed)
    A = random_operator(n, eps, rng, modulus=(0.5, 4.0))
    P = admissible_perturbations(A, W11, q, rng)
    assert check_condition(A, P, W11).margin == pytest.approx(q, rel=1e-9)
    phi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    sol = solve_full(A, W11, P, phi, max_iter=300)
    tail = sol.ratios[2:]
    if tail:
        assert max(tail) <= q + 0.1
    assert np.abs(sol.v.evaluate(0.0)).max() <= 1e-10 * max(1.0, np.abs(phi).max())
    assert np.linalg.norm(sol.evaluate(0.0) - phi) <= 1e-10 * np.linalg.norm(phi)
    hist = sol.residuals[1:]
    assert all(b <= a * (1 + 1e-6) + 1e-14 for a, b in zip(hist, hist[1:]))


@given(seeds, st.integers(1, 4))
def test_p0_inverse_linearity(seed, n):
    rng = np.random.default_rng(seed)
    A = random_operator(n, np.pi / 4, rng)
    w = PiecewiseWeight(*rng.uniform(0.25, 4, 2))
    rates = [1.1, 0.6 + 0.2j]
    g1, g2 = (
        ExpPoly.from_exponentials(rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2)), rates, A.eigenbasis)
        for _ in range(2)
    )
    x, y = 0.3 - 1.1j, 2.0
    lhs = p0_inverse(A, w, g1 * x + g2 * y).evaluate(T_POINTS)
    rhs = x * p0_inverse(A, w, g1).evaluate(T_POINTS) + y * p0_inverse(A, w, g2).evaluate(T_POINTS)
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(1.0, np.abs(rhs).max())
