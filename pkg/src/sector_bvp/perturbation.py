"""Full problem by reduction to the principal part.

Writing ``u = u0 + v`` with ``u0`` the principal solution, ``v`` has zero trace
and solves ``P0 v + P1 v = g`` with ``g = -P1 u0``, where
``P0 = -d^2/dt^2 + rho A^2`` and ``P1 = A0 d^2/dt^2 + A1 d/dt + A2``.  The
iteration ``v <- P0^{-1}(g - P1 v)`` is a Neumann series for
``(I + P1 P0^{-1})^{-1}``.

``P0^{-1}`` acts mode by mode.  For closed-form sources the inverse is computed
exactly (undetermined coefficients plus the same 3x3 matching as the principal
problem); for arbitrary callables it falls back to quadrature against the
Green's function ``G(t, s) = y_L(min) y_R(max) / W``.  The fixed-point loop
keeps its iterates on a Gauss-Legendre panel grid and applies the same Green's
function there (:func:`sector_bvp.nodal.nodal_green`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .errors import (
    DidNotConverge,
    DimensionMismatch,
    EvaluationAtKink,
    MissingDerivativeData,
    NonDecayingSource,
)
from .functions import FAMILIES, ExpPoly, GridFunction, _merge_rates
from .nodal import NodalFunction, PanelGrid, _scaled_fundamentals, nodal_green
from .principal import PrincipalSolution, apply_principal, solve_matching, solve_principal
from .sobolev import w22_norm
from .spectral import PerturbationOperators, PiecewiseWeight, SectorNormalOperator, apply

RESONANCE_TOL = 1e-8
BLOWUP = 1e30


# --- scalar Green's function ---------------------------------------------


@dataclass(frozen=True)
class GreenFunctionMode:
    """Fundamental solutions of ``-y'' + rho lam^2 y = 0`` for one mode.

    ``y_L`` starts at ``y_L(0) = 0, y_L'(0) = 1``; ``y_R`` is the solution that
    decays at infinity, normalised by ``y_R(1) = 1``.
    """

    lam: complex
    weight: PiecewiseWeight

    @property
    def kappa(self):
        return self.weight.alpha * self.lam

    @property
    def mu(self):
        return self.weight.beta * self.lam

    def _split(self, t, inner, outer):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape, dtype=complex)
        m = t < 1.0
        out[m] = inner(t[m])
        out[~m] = outer(t[~m] - 1.0)
        return out if out.ndim else out[()]

    def y_left(self, t, order=0):
        k, m = self.kappa, self.mu
        s1, c1 = np.sinh(k) / k, np.cosh(k)
        inner = [
            lambda t: np.sinh(k * t) / k,
            lambda t: np.cosh(k * t),
            lambda t: k * np.sinh(k * t),
        ][order]
        outer = [
            lambda x: s1 * np.cosh(m * x) + c1 * np.sinh(m * x) / m,
            lambda x: s1 * m * np.sinh(m * x) + c1 * np.cosh(m * x),
            lambda x: m * m * (s1 * np.cosh(m * x) + c1 * np.sinh(m * x) / m),
        ][order]
        return self._split(t, inner, outer)

    def y_right(self, t, order=0):
        k, m = self.kappa, self.mu
        inner = [
            lambda t: np.cosh(k * (t - 1)) - (m / k) * np.sinh(k * (t - 1)),
            lambda t: k * np.sinh(k * (t - 1)) - m * np.cosh(k * (t - 1)),
            lambda t: k * k * (np.cosh(k * (t - 1)) - (m / k) * np.sinh(k * (t - 1))),
        ][order]
        outer = [
            lambda x: np.exp(-m * x),
            lambda x: -m * np.exp(-m * x),
            lambda x: m * m * np.exp(-m * x),
        ][order]
        return self._split(t, inner, outer)

    def conjunct(self, t=0.0):
        """``W = y_L' y_R - y_L y_R'`` (constant in t)."""
        return self.y_left(t, 1) * self.y_right(t) - self.y_left(t) * self.y_right(t, 1)

    def kernel(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        lo, hi = np.minimum(t, s), np.maximum(t, s)
        return self.y_left(lo) * self.y_right(hi) / self.conjunct()


class QuadratureModeSolution:
    """``y = int G(t, s) f(s) ds`` for a scalar callable source, by adaptive quadrature."""

    def __init__(self, green: GreenFunctionMode, f):
        self.green = green
        self.f = f
        self.W = complex(green.conjunct())

    def _integrals(self, t):
        g, f = self.green, self.f
        left = lambda s: complex(g.y_left(s) * f(s))
        right = lambda s: complex(g.y_right(s) * f(s))
        opts = dict(complex_func=True, limit=200, epsabs=1e-13, epsrel=1e-11)
        if t <= 1.0:
            il = scipy.integrate.quad(left, 0.0, t, **opts)[0] if t > 0 else 0.0
            ir = scipy.integrate.quad(right, t, 1.0, **opts)[0] + scipy.integrate.quad(right, 1.0, np.inf, **opts)[0]
        else:
            il = scipy.integrate.quad(left, 0.0, 1.0, **opts)[0] + scipy.integrate.quad(left, 1.0, t, **opts)[0]
            ir = scipy.integrate.quad(right, t, np.inf, **opts)[0]
        return il, ir

    def __call__(self, t, order=0):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t_arr.shape, dtype=complex)
        g = self.green
        for i, ti in enumerate(t_arr):
            il, ir = self._integrals(float(ti))
            y = (g.y_right(ti) * il + g.y_left(ti) * ir) / self.W
            if order == 0:
                out[i] = y
            elif order == 1:
                out[i] = (g.y_right(ti, 1) * il + g.y_left(ti, 1) * ir) / self.W
            else:
                out[i] = g.weight(ti) * g.lam**2 * y - self.f(ti)
        return out if np.ndim(t) else out[0]


def _check_callable_decay(f):
    probe = [abs(complex(f(s))) for s in (0.0, 0.5, 2.0, 25.0, 50.0, 100.0)]
    head = max(probe[:3])
    decaying = probe[-1] <= 1e-6 * head or probe[-1] < 0.5 * probe[-3]
    if not np.all(np.isfinite(probe)) or not decaying:
        raise NonDecayingSource("source does not decay on the half-line")


# --- closed-form zero-trace inverse --------------------------------------


def _particular(c, nu, kappa):
    """Coefficients ``r`` with ``-r'' + 2 nu r' + (kappa^2 - nu^2) r = p`` per (k, j).

    ``c`` is (n, J, D); resonant pairs (nu = +-kappa) gain one degree.
    """
    n, J, D = c.shape
    out = np.zeros((n, J, D + 1), dtype=complex)
    if J == 0:
        return out
    K = kappa[:, None]
    V = np.broadcast_to(nu[None, :], (n, J))
    scale = np.maximum(1.0, np.abs(K))
    res = (np.abs(V - K) < RESONANCE_TOL * scale) | (np.abs(V + K) < RESONANCE_TOL * scale)
    diff = np.where(res, 1.0, K**2 - V**2)
    # non-resonant: descending recurrence, degree D-1
    r = np.zeros((n, J, D + 2), dtype=complex)
    for i in range(D - 1, -1, -1):
        r[:, :, i] = (c[:, :, i] + (i + 1) * (i + 2) * r[:, :, i + 2] - 2 * V * (i + 1) * r[:, :, i + 1]) / diff
    # resonant: w = r' solves -w' + 2 nu w = p
    w = np.zeros((n, J, D + 1), dtype=complex)
    two_nu = np.where(res, 2 * V, 1.0)
    for i in range(D - 1, -1, -1):
        w[:, :, i] = (c[:, :, i] + (i + 1) * w[:, :, i + 1]) / two_nu
    rr = np.zeros((n, J, D + 1), dtype=complex)
    rr[:, :, 1:] = w[:, :, :D] / np.arange(1, D + 1)
    out[:] = np.where(res[:, :, None], rr, r[:, :, : D + 1])
    return out


def _traces(fn: ExpPoly):
    """Modal values: y(0), y(1-), y'(1-), y(1+), y'(1+)."""
    d = fn.derivative(1)
    zero, one = np.array([0.0]), np.array([1.0])
    y0 = (fn._family_values("L", zero) + fn._family_values("R", one))[0]
    yl = (fn._family_values("L", one) + fn._family_values("R", zero))[0]
    dl = (d._family_values("L", one) + d._family_values("R", zero))[0]
    yr = fn._family_values("E", zero)[0]
    dr = d._family_values("E", zero)[0]
    return y0, yl, dl, yr, dr


def _green_closed_form(lam, weight: PiecewiseWeight, g: ExpPoly, boundary=None) -> ExpPoly:
    """Solve ``-y'' + rho lam_k^2 y = g_k`` with ``y(0) = boundary`` and decay, per mode."""
    live = np.any(g.coef["E"] != 0, axis=(0, 2))
    if np.any(g.rates["E"][live].real <= 0):
        raise NonDecayingSource("exterior part of the source does not decay")
    kI = weight.alpha * lam
    kE = weight.beta * lam
    coef = {
        "L": _particular(g.coef["L"], g.rates["L"], kI),
        "R": _particular(g.coef["R"], g.rates["R"], kI),
        "E": _particular(g.coef["E"], g.rates["E"], kE),
    }
    part = ExpPoly(g.basis, g.rates, coef)
    y0, yl, dl, yr, dr = _traces(part)
    bval = np.zeros_like(y0) if boundary is None else boundary
    rhs = np.stack([bval - y0, yr - yl, (dr - dl) / lam], axis=-1)
    abc = solve_matching(lam, weight, rhs)

    n = g.n
    rates, coef = {}, {}
    hom_rates = {"L": kI, "R": kI, "E": kE}
    for col, f in enumerate(FAMILIES):
        merged, idx = _merge_rates(part.rates[f], hom_rates[f])
        c = np.zeros((n, merged.size, part.coef[f].shape[2]), dtype=complex)
        c[:, : part.rates[f].size] = part.coef[f]
        c[np.arange(n), idx, 0] += abc[:, col]
        rates[f], coef[f] = merged, c
    return ExpPoly(g.basis, rates, coef).trim()


def green_apply(lam, weight: PiecewiseWeight, f):
    """Zero-trace decaying solution of ``-y'' + rho lam^2 y = f`` for one mode.

    ``f`` is either a scalar :class:`ExpPoly` (solved exactly, returns ExpPoly) or
    a callable (solved by quadrature, returns a callable ``y(t, order=0)``).
    """
    lam = complex(lam)
    if isinstance(f, ExpPoly):
        if f.n != 1:
            raise DimensionMismatch("green_apply takes a scalar (one-mode) source")
        return _green_closed_form(np.array([lam]), weight, f)
    _check_callable_decay(f)
    return QuadratureModeSolution(GreenFunctionMode(lam, weight), f)


def p0_inverse(A: SectorNormalOperator, weight: PiecewiseWeight, g):
    """Apply the zero-trace inverse of ``-d^2/dt^2 + rho A^2`` to ``g``."""
    if isinstance(g, ExpPoly):
        if g.n != A.n:
            raise DimensionMismatch("source and operator dimensions differ")
        if not np.allclose(g.basis, A.eigenbasis, rtol=0, atol=1e-14):
            g = g.rebase(A.eigenbasis)
        return _green_closed_form(A.eigenvalues, weight, g)
    if isinstance(g, NodalFunction):
        if g.n != A.n:
            raise DimensionMismatch("source and operator dimensions differ")
        f = g.values[0] @ (A.eigenbasis.conj().T @ g.basis).T
        return NodalFunction(g.grid, A.eigenbasis, nodal_green(A, weight, g.grid, f), weight.beta * A.eigenvalues)
    return _QuadratureInverse(A, weight, g)


class _QuadratureInverse:
    """Vector version of :class:`QuadratureModeSolution` for callable sources ``g(t)``."""

    domain = (0.0, np.inf)
    breakpoints = (1.0,)

    def __init__(self, A, weight, g):
        self.A = A
        self.n = A.n
        self.modes = []
        for k, lam in enumerate(A.eigenvalues):
            fk = lambda s, k=k: A.to_modal(np.asarray(g(s), dtype=complex).reshape(-1))[k]
            _check_callable_decay(fk)
            self.modes.append(QuadratureModeSolution(GreenFunctionMode(lam, weight), fk))

    def evaluate(self, t, order=0):
        cols = [np.atleast_1d(m(t, order)) for m in self.modes]
        out = self.A.from_modal(np.stack(cols, axis=-1))
        return out if np.ndim(t) else out[0]

    __call__ = evaluate


# --- perturbation terms --------------------------------------------------


def apply_p1(P: PerturbationOperators, v):
    """``A0 v'' + A1 v' + A2 v``."""
    if isinstance(v, ExpPoly):
        if v.n != P.n:
            raise DimensionMismatch("function and perturbation dimensions differ")
        return v.derivative(2).mix(P.A0) + v.derivative(1).mix(P.A1) + v.mix(P.A2)
    if isinstance(v, NodalFunction):
        if v.n != P.n:
            raise DimensionMismatch("function and perturbation dimensions differ")
        U = v.basis
        Ah = [U.conj().T @ M @ U for M in (P.A0, P.A1, P.A2)]
        vals = v.values[2] @ Ah[0].T + v.values[1] @ Ah[1].T + v.values[0] @ Ah[2].T
        # only samples of the result itself are available
        return NodalFunction(v.grid, U, [vals, np.full_like(vals, np.nan), np.full_like(vals, np.nan)], v.tail_rates)
    if isinstance(v, GridFunction):
        if len(v.data) < 3:
            raise MissingDerivativeData("apply_p1 needs samples of v, v' and v''")
        vals = v.data[2] @ P.A0.T + v.data[1] @ P.A1.T + v.data[0] @ P.A2.T
        return GridFunction(v.t, vals, breakpoints=v.breakpoints)
    raise MissingDerivativeData(f"cannot differentiate object of type {type(v).__name__}")


def source_term(u0: PrincipalSolution, P: PerturbationOperators) -> ExpPoly:
    """``g = -A0 u0'' - A1 u0' - A2 u0``."""
    P.check_against(u0.operator)
    return -apply_p1(P, u0.function)


def full_operator(A, weight, P, u: ExpPoly) -> ExpPoly:
    """Closed-form left-hand side of the full equation applied to ``u``."""
    return apply_principal(A, weight, u) + apply_p1(P, u)


# --- fixed-point solve ---------------------------------------------------


class SumFunction:
    """Pointwise sum of a closed-form part and a nodal part."""

    domain = (0.0, np.inf)
    breakpoints = (1.0,)

    def __init__(self, closed: ExpPoly, nodal: NodalFunction):
        self.closed = closed
        self.nodal = nodal

    @property
    def n(self) -> int:
        return self.closed.n

    def panel_width(self) -> float:
        return min(self.closed.panel_width(), self.nodal.panel_width())

    def evaluate(self, t, order=0, differentiate=False):
        return self.closed.evaluate(t, order) + self.nodal.evaluate(t, order, differentiate)

    __call__ = evaluate


@dataclass(frozen=True, eq=False)
class FullSolution:
    """``u = u0 + v`` plus the iteration record.

    ``v`` is stored on a composite Gauss-Legendre panel grid.  ``residuals[m]``
    is ``||P(d/dt)(u0 + v_m)||_{L2} / ||u0||_{W22}``, integrated on the grid.
    """

    u0: PrincipalSolution
    v: NodalFunction
    perturbations: PerturbationOperators
    residuals: tuple
    converged: bool
    tol: float
    scale: float
    u: SumFunction = field(repr=False)

    @property
    def iterations(self) -> int:
        return len(self.residuals) - 1

    @property
    def ratios(self):
        r = self.residuals
        return tuple(r[i + 1] / r[i] for i in range(len(r) - 1) if r[i] > 0)

    @property
    def contraction_ratio(self):
        """Latest ratio of successive residuals (None before two iterates exist)."""
        rs = self.ratios
        return rs[-1] if rs else None

    def evaluate(self, t, order=0):
        return self.u.evaluate(t, order)

    def v_grid(self, t):
        """Samples of ``v``, ``v'``, ``v''`` on the grid ``t``."""
        return GridFunction(t, self.v.evaluate(t), [self.v.evaluate(t, 1), self.v.evaluate(t, 2)])


def solve_full(A, weight, P, phi, tol=1e-10, max_iter=200, grid: PanelGrid | None = None) -> FullSolution:
    """Solve the full problem by the Neumann iteration on the zero-trace correction.

    Iterates until the relative L2 residual of the full equation drops below
    ``tol``.  Raises :class:`DidNotConverge` (carrying the partial solution)
    when ``max_iter`` is reached or the iterates blow up.
    """
    P.check_against(A)
    u0 = solve_principal(A, weight, phi)
    base = u0.function
    scale = w22_norm(base, (0.0, np.inf), A)
    grid = grid or PanelGrid.for_problem(A, weight)
    U = A.eigenbasis
    Ah = [U.conj().T @ M @ U for M in (P.A0, P.A1, P.A2)]
    lam2 = A.eigenvalues**2
    rho = np.where(grid.nodes < 1.0, weight.alpha**2, weight.beta**2)[..., None]
    t = grid.nodes.ravel()
    shape = grid.nodes.shape + (A.n,)
    b = [base.rebase(U).evaluate_modal(t, m).reshape(shape) for m in range(3)]

    def p1(d):
        return d[2] @ Ah[0].T + d[1] @ Ah[1].T + d[0] @ Ah[2].T

    g = -p1(b)
    w = grid.weights[..., None]

    def relres(d):
        if scale == 0.0:
            return 0.0
        r = -d[2] + rho * lam2 * d[0] + p1(d)
        return math.sqrt(float(np.sum(w * np.abs(r) ** 2))) / scale

    fund = _scaled_fundamentals(A.eigenvalues, weight, grid)
    v = [np.zeros(shape, dtype=complex) for _ in range(3)]
    history = [relres(b)]
    converged = history[0] <= tol
    while not converged and len(history) <= max_iter:
        v = list(nodal_green(A, weight, grid, g - p1(v), fund))
        history.append(relres([bm + vm for bm, vm in zip(b, v)]))
        if not math.isfinite(history[-1]) or history[-1] > BLOWUP * max(history[0], 1e-300):
            break
        converged = history[-1] <= tol
    vf = NodalFunction(grid, U, v, weight.beta * A.eigenvalues)
    sol = FullSolution(u0, vf, P, tuple(history), converged, tol, scale, SumFunction(base, vf))
    if not converged:
        raise DidNotConverge(
            f"residual {history[-1]:.3e} after {len(history) - 1} iterations (tol {tol:g})",
            solution=sol,
            contraction_ratio=sol.contraction_ratio,
        )
    return sol


def full_residual(sol: FullSolution, t, differentiate=True):
    """Pointwise norm of ``-u'' + rho A^2 u + A0 u'' + A1 u' + A2 u``.

    By default ``v''`` is taken from the derivative of the interpolant of ``v'``
    rather than from the ODE identity, so the residual checks the computed
    correction independently.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t == 1.0):
        raise EvaluationAtKink("residuals are defined for t > 0, t != 1")
    A, P, w = sol.u0.operator, sol.perturbations, sol.u0.weight
    u, d1 = sol.u.evaluate(t, 0), sol.u.evaluate(t, 1)
    d2 = sol.u.evaluate(t, 2, differentiate)
    rho = np.asarray(w(t))[..., None]
    r = -d2 + rho * apply(A, 2, u) + d2 @ P.A0.T + d1 @ P.A1.T + u @ P.A2.T
    return np.linalg.norm(r, axis=-1)
