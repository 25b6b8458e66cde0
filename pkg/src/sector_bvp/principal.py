"""Exact solution of the principal problem ``-u'' + rho(t) A^2 u = 0, u(0) = phi``.

In each eigen-coordinate the solution is

    y(t) = c1 exp(-alpha lam t) + c2 exp(-alpha lam (1 - t)),   0 < t < 1
    y(t) = c3 exp(-beta lam (t - 1)),                           t > 1

with (c1, c2, c3) fixed by the boundary value and C^1 matching at t = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EvaluationAtKink, IllConditionedMode, InvalidOrder, ZeroDenominator
from .functions import ExpPoly
from .sobolev import h_theta_norm, w22_norm
from .spectral import PiecewiseWeight, SectorNormalOperator, apply


def mode_determinant(lam, weight: PiecewiseWeight):
    """Determinant ``(alpha + beta) - q**2 (beta - alpha)``, ``q = exp(-alpha lam)``."""
    lam = np.asarray(lam, dtype=complex)
    q = np.exp(-weight.alpha * lam)
    return (weight.alpha + weight.beta) - q**2 * (weight.beta - weight.alpha)


def mode_matrix(lam, weight: PiecewiseWeight):
    """Stack of 3x3 matching matrices ``[[1, q, 0], [q, 1, -1], [-a q, a, b]]``."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    a, b = weight.alpha, weight.beta
    q = np.exp(-a * lam)
    M = np.zeros(lam.shape + (3, 3), dtype=complex)
    M[..., 0, 0] = 1.0
    M[..., 0, 1] = q
    M[..., 1, 0] = q
    M[..., 1, 1] = 1.0
    M[..., 1, 2] = -1.0
    M[..., 2, 0] = -a * q
    M[..., 2, 1] = a
    M[..., 2, 2] = b
    return M


def solve_matching(lam, weight: PiecewiseWeight, rhs):
    """Solve the per-mode matching systems; ``rhs`` has shape (n, 3)."""
    det = mode_determinant(lam, weight)
    bad = np.abs(det) < 1e-14 * (weight.alpha + weight.beta)
    if np.any(bad):
        raise IllConditionedMode(f"matching determinant vanishes for modes {np.flatnonzero(bad).tolist()}")
    return np.linalg.solve(mode_matrix(lam, weight), np.asarray(rhs, dtype=complex)[..., None])[..., 0]


@dataclass(frozen=True)
class ModeCoefficients:
    lam: complex
    c1: complex
    c2: complex
    c3: complex


@dataclass(frozen=True, eq=False)
class PrincipalSolution:
    operator: SectorNormalOperator
    weight: PiecewiseWeight
    modes: tuple
    phi: np.ndarray
    function: ExpPoly

    def evaluate(self, t, order=0):
        return evaluate(self, t, order)


def principal_rates(A: SectorNormalOperator, weight: PiecewiseWeight):
    lam = A.eigenvalues
    return {"L": weight.alpha * lam, "R": weight.alpha * lam, "E": weight.beta * lam}


def solve_principal(A: SectorNormalOperator, weight: PiecewiseWeight, phi) -> PrincipalSolution:
    """Solve the principal problem for boundary datum ``phi`` (H-coordinates)."""
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    if phi.size != A.n:
        raise DimensionMismatch(f"phi has length {phi.size}, operator has size {A.n}")
    phi_hat = A.to_modal(phi)
    rhs = np.zeros((A.n, 3), dtype=complex)
    rhs[:, 0] = phi_hat
    c = solve_matching(A.eigenvalues, weight, rhs)
    n = A.n
    coef = {}
    for f, col in zip("LRE", range(3)):
        arr = np.zeros((n, n, 1), dtype=complex)
        arr[np.arange(n), np.arange(n), 0] = c[:, col]
        coef[f] = arr
    fn = ExpPoly(A.eigenbasis, principal_rates(A, weight), coef)
    modes = tuple(ModeCoefficients(complex(l), *map(complex, row)) for l, row in zip(A.eigenvalues, c))
    phi = phi.copy()
    phi.setflags(write=False)
    return PrincipalSolution(A, weight, modes, phi, fn)


def evaluate(sol: PrincipalSolution, t, order=0):
    """``u0``, ``u0'`` or ``u0''`` at ``t``; at t = 1 second derivatives are right limits."""
    if order not in (0, 1, 2):
        raise InvalidOrder(f"order must be 0, 1 or 2, got {order}")
    return sol.function.evaluate(t, order)


def evaluate_one_sided(fn: ExpPoly, t, order, side):
    """Left or right limit of a closed-form function at the kink t = 1."""
    if side == "right":
        return fn.evaluate(t, order)
    g = fn.derivative(order)
    x = np.atleast_1d(np.asarray(t, dtype=float))
    vals = g._family_values("L", x) + g._family_values("R", 1.0 - x)
    return vals @ fn.basis.T


def apply_principal(A: SectorNormalOperator, weight: PiecewiseWeight, u: ExpPoly) -> ExpPoly:
    """Closed-form ``-u'' + rho A^2 u`` (in A's eigenbasis)."""
    if not np.allclose(u.basis, A.eigenbasis, rtol=0, atol=1e-14):
        u = u.rebase(A.eigenbasis)
    lam2 = A.eigenvalues**2
    return u.scale_modes(weight.alpha**2 * lam2, weight.beta**2 * lam2) - u.derivative(2)


def _check_off_kink(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t == 1.0):
        raise EvaluationAtKink("residuals are defined for t > 0, t != 1")
    return t


def residual(sol: PrincipalSolution, t):
    """Euclidean norm of ``-u0'' + rho A^2 u0`` at ``t`` (scalar or array)."""
    t = _check_off_kink(t)
    A = sol.operator
    u = sol.function.evaluate(t, 0)
    d2 = sol.function.evaluate(t, 2)
    rho = sol.weight(t)
    r = -d2 + np.asarray(rho)[..., None] * apply(A, 2, u)
    return np.linalg.norm(r, axis=-1)


def trace_error(sol: PrincipalSolution, phi):
    """``||A^{3/2} (u0(0) - phi)||``."""
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    if phi.size != sol.operator.n:
        raise DimensionMismatch("phi length does not match the operator")
    return float(np.linalg.norm(apply(sol.operator, 1.5, sol.function.evaluate(0.0) - phi)))


def regularity_ratio(A: SectorNormalOperator, weight: PiecewiseWeight, phi) -> float:
    """``||u0||_{W22(0, inf)} / ||phi||_{3/2}`` for the principal solution with datum ``phi``."""
    den = h_theta_norm(phi, A)
    if den == 0.0:
        raise ZeroDenominator("datum has zero trace norm")
    return w22_norm(solve_principal(A, weight, phi).function, (0.0, np.inf), A) / den
