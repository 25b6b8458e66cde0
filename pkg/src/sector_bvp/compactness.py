"""Empirical interior-compactness diagnostics.

A smooth cutoff localises a regular solution of the homogeneous equation to
(a, b).  The harness measures the interior ratio

    r(u) = ||u||_{W22(a1, b1)} / ||u||_{W21(a, b)}

over sampled solutions, the singular values of the sample Gram matrix in
W21(a1, b1), and coercivity quotients ``||P(d/dt) w||_{L2} / ||w||_{W22}``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BadOrdering, SectorBVPError, ZeroDenominator
from .perturbation import solve_full
from .sobolev import integrate_squared, w21_gram, w21_norm, w22_norm
from .spectral import PerturbationOperators, PiecewiseWeight, SectorNormalOperator, apply


def _h(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _h_derivs(x):
    """h, h', h'' for h(x) = exp(-1/x) (zero for x <= 0)."""
    x = np.asarray(x, dtype=float)
    h0 = _h(x)
    h1 = np.zeros_like(x)
    h2 = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    h1[pos] = h0[pos] / xp**2
    h2[pos] = h0[pos] * (1.0 / xp**4 - 2.0 / xp**3)
    return h0, h1, h2


def smooth_step(x, order=0):
    """``s(x) = h(x) / (h(x) + h(1 - x))`` and its first two derivatives."""
    x = np.asarray(x, dtype=float)
    f, f1, f2 = _h_derivs(x)
    g, g1, g2 = _h_derivs(1.0 - x)
    # d/dx h(1-x) = -h'(1-x)
    g1, g2 = -g1, g2
    S = f + g
    if order == 0:
        return f / S
    N = f1 * g - f * g1
    if order == 1:
        return N / S**2
    S1 = f1 + g1
    N1 = f2 * g - f * g2
    return (N1 * S - 2.0 * N * S1) / S**3


@dataclass(frozen=True)
class CutoffFunction:
    """Scalar bump: 0 outside (a, b), 1 on [a1, b1], smooth ramps in between."""

    a: float
    a1: float
    b1: float
    b: float

    def __call__(self, t, order=0):
        if order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        up = (t > self.a) & (t < self.a1)
        down = (t > self.b1) & (t < self.b)
        wu = self.a1 - self.a
        wd = self.b - self.b1
        out[up] = smooth_step((t[up] - self.a) / wu, order) / wu**order
        out[down] = (-1.0 / wd) ** order * smooth_step((self.b - t[down]) / wd, order)
        if order == 0:
            out[(t >= self.a1) & (t <= self.b1)] = 1.0
        return out if out.ndim else float(out)

    @property
    def quad(self):
        return (self.a, self.a1, self.b1, self.b)


def make_cutoff(a, a1, b1, b) -> CutoffFunction:
    if not (0.0 < a < a1 < b1 < b < math.inf):
        raise BadOrdering(f"need 0 < a < a1 < b1 < b < inf, got {(a, a1, b1, b)}")
    return CutoffFunction(float(a), float(a1), float(b1), float(b))


class CutoffProduct:
    """``phi(t) u(t)`` for a cutoff ``phi`` and a vector function ``u`` (Leibniz rule)."""

    domain = (0.0, np.inf)

    def __init__(self, cutoff: CutoffFunction, u):
        self.cutoff = cutoff
        self.u = u
        self.breakpoints = tuple(sorted(set((1.0,) + cutoff.quad)))

    @property
    def n(self):
        return self.u.n

    def panel_width(self):
        c = self.cutoff
        own = min(c.a1 - c.a, c.b - c.b1) / 8.0
        w = getattr(self.u, "panel_width", None)
        return min(own, w()) if callable(w) else own

    def evaluate(self, t, order=0):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        c = self.cutoff
        out = np.zeros((t.size, self.n), dtype=complex)
        inside = (t > c.a) & (t < c.b)
        ti = t[inside]
        if ti.size:
            binom = [(1,), (1, 1), (1, 2, 1)][order]
            acc = 0.0
            for k, coef in enumerate(binom):
                acc = acc + coef * c(ti, k)[:, None] * self.u.evaluate(ti, order - k)
            out[inside] = acc
        return out

    __call__ = evaluate


class VectorBump:
    """``phi(t) x`` for a cutoff ``phi`` and a fixed vector ``x``."""

    domain = (0.0, np.inf)

    def __init__(self, cutoff: CutoffFunction, x):
        self.cutoff = cutoff
        self.x = np.asarray(x, dtype=complex).reshape(-1)
        self.breakpoints = tuple(sorted(set((1.0,) + cutoff.quad)))

    @property
    def n(self):
        return self.x.size

    def panel_width(self):
        c = self.cutoff
        return min(c.a1 - c.a, c.b - c.b1) / 8.0

    def evaluate(self, t, order=0):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.cutoff(t, order)[:, None] * self.x[None, :]

    __call__ = evaluate


def interior_estimate(u, quad, A: SectorNormalOperator) -> float:
    """``||u||_{W22(a1, b1)} / ||u||_{W21(a, b)}``."""
    a, a1, b1, b = quad
    den = w21_norm(u, (a, b), A)
    if den == 0.0:
        raise ZeroDenominator("W21 norm on (a, b) vanishes")
    return w22_norm(u, (a1, b1), A) / den


def apply_full_operator(w, t, A: SectorNormalOperator, weight: PiecewiseWeight, P: PerturbationOperators):
    """Pointwise ``-w'' + rho A^2 w + A0 w'' + A1 w' + A2 w``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    u, d1, d2 = (w.evaluate(t, m) for m in range(3))
    rho = np.asarray(weight(t))[..., None]
    return -d2 + rho * apply(A, 2, u) + d2 @ P.A0.T + d1 @ P.A1.T + u @ P.A2.T


class _Applied:
    """``P(d/dt) w`` as a sampled vector function (for L2 norms)."""

    domain = (0.0, np.inf)

    def __init__(self, w, A, weight, P):
        self.w, self.A, self.weight, self.P = w, A, weight, P
        self.breakpoints = getattr(w, "breakpoints", (1.0,))
        self.n = A.n

    def panel_width(self):
        return self.w.panel_width()

    def evaluate(self, t, order=0):
        return apply_full_operator(self.w, t, self.A, self.weight, self.P)


def _support_interval(w):
    c = getattr(w, "cutoff", None)
    return (0.0, c.b) if c is not None else (0.0, np.inf)


def coercive_check(w, A: SectorNormalOperator, weight: PiecewiseWeight, P: PerturbationOperators) -> float:
    """``||P(d/dt) w||_{L2} / ||w||_{W22}`` for a zero-trace, compactly supported ``w``."""
    interval = _support_interval(w)
    den = w22_norm(w, interval, A)
    if den == 0.0:
        raise ZeroDenominator("W22 norm of w vanishes")
    num = math.sqrt(integrate_squared(_Applied(w, A, weight, P), interval))
    return num / den


def random_bumps(n, count, rng, span=(0.1, 6.0)):
    """Random cutoffs times random complex vectors, all with support in ``span``."""
    out = []
    lo, hi = span
    for _ in range(count):
        pts = np.sort(rng.uniform(lo, hi, 4))
        while np.min(np.diff(pts)) < 0.05:
            pts = np.sort(rng.uniform(lo, hi, 4))
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        out.append(VectorBump(make_cutoff(*pts), x))
    return out


def coercivity_constant(A, weight, P, count, seed=0):
    """Minimum coercivity quotient over ``count`` random bumps."""
    rng = np.random.default_rng(seed)
    return min(coercive_check(w, A, weight, P) for w in random_bumps(A.n, count, rng))


def commutator_terms(cutoff: CutoffFunction, u, t, P: PerturbationOperators):
    """``-phi'' u - 2 phi' u' + A0 (phi'' u + 2 phi' u') + A1 phi' u`` at ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    p1 = cutoff(t, 1)[:, None]
    p2 = cutoff(t, 2)[:, None]
    u0, u1 = u.evaluate(t, 0), u.evaluate(t, 1)
    inner = p2 * u0 + 2.0 * p1 * u1
    return -inner + inner @ P.A0.T + (p1 * u0) @ P.A1.T


def commutator_defect(cutoff, u, t, A, weight, P):
    """Pointwise ``||P(d/dt)(phi u) - commutator terms||`` for a regular solution ``u``."""
    lhs = apply_full_operator(CutoffProduct(cutoff, u), t, A, weight, P)
    return np.linalg.norm(lhs - commutator_terms(cutoff, u, t, P), axis=-1)


# --- empirical constant ----------------------------------------------------


@dataclass
class CompactnessReport:
    quad: tuple
    sample_size: int
    ratios: list
    constant: float
    singular_values: list
    bound: float
    seed: int
    failures: list = field(default_factory=list)
    adopted_condition: bool = True

    def to_dict(self):
        return asdict(self)


def sample_boundary_data(A: SectorNormalOperator, count, rng):
    """Unit vectors of the trace norm: ``A^{-3/2} z / ||z||`` with complex Gaussian ``z``."""
    z = rng.standard_normal((count, A.n)) + 1j * rng.standard_normal((count, A.n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return apply(A, -1.5, z)


def _threads():
    try:
        return max(1, int(os.environ.get("SECTOR_BVP_THREADS", "1")))
    except ValueError:
        return 1


def empirical_constant(A, weight, P, quad, sample_size, M=1.0, seed=0, tol=1e-10) -> CompactnessReport:
    """Sample regular solutions and measure the interior estimate.

    Each solution is rescaled so that its W21(a, b) norm is at most ``M``.
    Solver failures are recorded in ``failures`` and the sample is skipped.
    """
    a, a1, b1, b = make_cutoff(*quad).quad
    rng = np.random.default_rng(seed)
    data = sample_boundary_data(A, sample_size, rng)

    def one(i):
        try:
            sol = solve_full(A, weight, P, data[i], tol=tol)
            u = sol.u
            nrm = w21_norm(u, (a, b), A)
            s = min(1.0, M / nrm) if nrm > 0 else 1.0
            return i, u, s, interior_estimate(u, quad, A), None
        except SectorBVPError as exc:
            return i, None, None, None, f"{type(exc).__name__}: {exc}"

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(sample_size)))
    else:
        results = [one(i) for i in range(sample_size)]

    ratios, funcs, scales, failures = [], [], [], []
    for i, u, s, r, err in results:
        if err is not None:
            failures.append({"index": i, "error": err})
            continue
        ratios.append(float(r))
        funcs.append(u)
        scales.append(s)
    sv = []
    if funcs:
        G = w21_gram(funcs, (a1, b1), A)
        S = np.asarray(scales)
        G = S[:, None] * G * S[None, :]
        ev = np.linalg.eigvalsh(0.5 * (G + G.conj().T))[::-1]
        sv = [float(math.sqrt(max(e, 0.0))) for e in ev]
    return CompactnessReport(
        quad=(a, a1, b1, b),
        sample_size=int(sample_size),
        ratios=ratios,
        constant=max(ratios) if ratios else float("nan"),
        singular_values=sv,
        bound=float(M),
        seed=int(seed),
        failures=failures,
    )
