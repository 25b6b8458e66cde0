import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import admissible_perturbations
from sector_bvp import (
    ExpPoly,
    PerturbationOperators,
    PiecewiseWeight,
    coercive_check,
    commutator_defect,
    empirical_constant,
    interior_estimate,
    make_operator,
    random_operator,
    solve_full,
)
from sector_bvp.compactness import (
    CutoffProduct,
    VectorBump,
    apply_full_operator,
    coercivity_constant,
    sample_boundary_data,
    smooth_step,
)
from sector_bvp.errors import BadOrdering, ZeroDenominator

QUAD = (0.5, 1.0, 2.0, 3.0)
W11 = PiecewiseWeight(1.0, 1.0)
A1 = make_operator([1.0])
RATIO = math.sqrt(math.exp(-2) - math.exp(-4)) / math.sqrt(math.exp(-1) - math.exp(-6))


def exp1(amp=1.0):
    return ExpPoly.from_exponentials([[amp]], [1.0])


def test_cutoff_examples():
    from sector_bvp import make_cutoff

    c = make_cutoff(*QUAD)
    assert c(1.5) == 1.0 and c(0.5) == 0.0 and c(3.0) == 0.0
    assert c(0.75) == pytest.approx(0.5, abs=1e-15)
    assert c(2.5) == pytest.approx(0.5, abs=1e-15)
    plateau = np.linspace(1.0, 2.0, 21)
    assert np.all(c(plateau, 1) == 0) and np.all(c(plateau, 2) == 0)
    with pytest.raises(BadOrdering):
        make_cutoff(0.5, 0.4, 2.0, 3.0)
    with pytest.raises(BadOrdering):
        make_cutoff(0.0, 1.0, 2.0, 3.0)


def test_cutoff_regularity():
    from sector_bvp import make_cutoff

    c = make_cutoff(0.3, 0.9, 1.7, 2.2)
    t = np.linspace(0, 3, 3001)
    v = c(t)
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(v[t <= 0.3] == 0) and np.all(v[t >= 2.2] == 0)
    # analytic derivatives against central differences of the lower order
    h = 1e-5
    s = np.linspace(0.31, 2.19, 97)
    for order in (1, 2):
        fd = (c(s + h, order - 1) - c(s - h, order - 1)) / (2 * h)
        assert np.abs(fd - c(s, order)).max() <= 1e-4 * max(1.0, np.abs(c(s, order)).max())
    assert smooth_step(0.5) == pytest.approx(0.5)


def test_interior_estimate_examples():
    assert interior_estimate(exp1(), QUAD, A1) == pytest.approx(RATIO, abs=1e-10)
    assert interior_estimate(exp1(10.0), QUAD, A1) == pytest.approx(RATIO, abs=1e-10)
    with pytest.raises(ZeroDenominator):
        interior_estimate(exp1(0.0), QUAD, A1)


def test_empirical_constant_scalar_rank_one():
    rep = empirical_constant(A1, W11, PerturbationOperators.zeros(1), QUAD, 20, seed=3)
    assert np.allclose(rep.ratios, RATIO, atol=1e-10)
    assert rep.constant == max(rep.ratios)
    sv = np.asarray(rep.singular_values)
    assert sv[0] > 0 and np.all(sv[1:] <= 1e-6 * sv[0])
    assert rep.adopted_condition and not rep.failures


def test_empirical_constant_single_sample():
    rep = empirical_constant(make_operator([1.0, 3.0]), W11, PerturbationOperators.zeros(2), QUAD, 1, seed=7)
    assert rep.constant == rep.ratios[0]


def test_singular_values_decrease():
    A = make_operator([1.0, 2.0, 4.0, 8.0])
    rep = empirical_constant(A, W11, PerturbationOperators.zeros(4), QUAD, 100)
    sv = np.asarray(rep.singular_values)
    assert np.all(np.diff(sv) <= 0)
    assert np.all(np.diff(sv[:4]) < 0)
    assert sv[4:].max() <= 1e-6 * sv[0]


def test_rescaling_bound():
    A = make_operator([1.0, 2.0])
    rep = empirical_constant(A, W11, PerturbationOperators.zeros(2), QUAD, 10, M=1e-3)
    assert rep.bound == pytest.approx(1e-3)
    # Gram diagonal is the squared W21(a1, b1) norm, which is below the admission bound
    total = sum(s**2 for s in rep.singular_values)
    assert total <= 10 * (1e-3) ** 2 * (1 + 1e-9)


def test_boundary_data_unit_trace_norm():
    rng = np.random.default_rng(0)
    A = random_operator(5, np.pi / 3, rng)
    phi = sample_boundary_data(A, 50, rng)
    norms = np.linalg.norm(A.to_modal(phi) * A.eigenvalues**1.5, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-12)


def test_coercive_check_examples():
    from sector_bvp import make_cutoff

    w = VectorBump(make_cutoff(*QUAD), [1.0])
    k = coercive_check(w, A1, W11, PerturbationOperators.zeros(1))
    assert 0 < k <= math.sqrt(2)
    assert coercive_check(VectorBump(make_cutoff(*QUAD), [-7.5j]), A1, W11, PerturbationOperators.zeros(1)) == pytest.approx(k, rel=1e-12)


def test_coercivity_constant_stable():
    rng = np.random.default_rng(4)
    A = random_operator(3, np.pi / 6, rng, modulus=(0.5, 4.0))
    P = admissible_perturbations(A, W11, 0.4, rng)
    k100 = coercivity_constant(A, W11, P, 100, seed=1)
    k200 = coercivity_constant(A, W11, P, 200, seed=1)
    assert k100 > 0 and k200 > 0
    assert abs(k200 - k100) <= 0.2 * k100


def _solved(seed, q=0.4):
    rng = np.random.default_rng(seed)
    A = random_operator(3, np.pi / 6, rng, modulus=(0.5, 4.0))
    P = admissible_perturbations(A, W11, q, rng)
    phi = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    return A, P, solve_full(A, W11, P, phi, tol=1e-12)


def test_commutator_identity_and_support():
    from sector_bvp import make_cutoff

    A, P, sol = _solved(0)
    c = make_cutoff(*QUAD)
    t = np.array([0.6, 0.8, 0.95, 1.2, 1.5, 2.2, 2.6, 2.9])
    scale = np.abs(sol.evaluate(t, 2)).max() + np.abs(sol.evaluate(t) @ A.power_matrix(2).T).max()
    assert commutator_defect(c, sol.u, t, A, W11, P).max() <= 1e-8 * scale
    outside = np.array([0.1, 0.3, 0.5, 3.0, 3.5, 7.0])
    vals = apply_full_operator(CutoffProduct(c, sol.u), outside, A, W11, P)
    assert np.abs(vals).max() <= 1e-10


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
def test_ratio_homogeneity(seed, s):
    A, P, sol = _solved(seed)
    r = interior_estimate(sol.u, QUAD, A)
    assert np.isfinite(r) and r >= 0
    assert interior_estimate(_Scaled(sol.u, s), QUAD, A) == pytest.approx(r, rel=1e-10)


class _Scaled:
    def __init__(self, u, s):
        self.u, self.s = u, s
        self.breakpoints = (1.0,)

    @property
    def n(self):
        return self.u.n

    def panel_width(self):
        return self.u.panel_width()

    def evaluate(self, t, order=0):
        return self.s * self.u.evaluate(t, order)


def test_constant_stable_under_doubling():
    rng = np.random.default_rng(8)
    A = random_operator(3, np.pi / 6, rng, modulus=(0.5, 4.0))
    P = admissible_perturbations(A, W11, 0.3, rng)
    r1 = empirical_constant(A, W11, P, QUAD, 30, seed=2)
    r2 = empirical_constant(A, W11, P, QUAD, 60, seed=2)
    assert not r1.failures and not r2.failures
    assert abs(r2.constant - r1.constant) <= 0.25 * r1.constant
