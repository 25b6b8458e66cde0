"""Second-order finite differences on a truncated half-line.

Independent brute-force cross-check for the closed-form and fixed-point
solvers.  The node at ``t = 1`` uses the averaged weight ``(alpha^2 + beta^2)/2``;
the far end uses the one-sided outflow condition ``(y_N - y_{N-1})/h = -beta A y_N``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonPositiveError, SingularSystem, TruncationTooSmall
from .spectral import PerturbationOperators, PiecewiseWeight, SectorNormalOperator

MAX_STEP = 0.1
# decay factor exp(-min(alpha, beta) Re(lam) T) tolerated at the cut
TRUNCATION_DECAY = 1e-8


@dataclass(frozen=True)
class FdGrid:
    """Grid solution: ``values[i]`` is the solution at ``t[i] = i h``."""

    T: float
    h: float
    t: np.ndarray
    values: np.ndarray

    def at(self, t):
        """Values at grid points ``t`` (looked up, not interpolated)."""
        idx = np.rint(np.asarray(t, dtype=float) / self.h).astype(int)
        if np.any(np.abs(idx * self.h - t) > 1e-9 * max(1.0, self.T)):
            raise ValueError("requested points are not grid nodes")
        return self.values[idx]


def _steps(T, h):
    T, h = float(T), float(h)
    if T <= 2.0:
        raise TruncationTooSmall(f"truncation T = {T} must exceed 2")
    if not 0.0 < h <= MAX_STEP + 1e-15:
        raise ValueError(f"step h = {h} must lie in (0, {MAX_STEP}]")
    per_unit = round(1.0 / h)
    N = round(T / h)
    if abs(per_unit * h - 1.0) > 1e-9 or abs(N * h - T) > 1e-9 * T:
        raise ValueError("1/h and T/h must be integers so that t = 1 is a grid node")
    return N, per_unit


def _check_decay(real_parts, weight, T):
    slow = min(weight.alpha, weight.beta) * float(np.min(real_parts))
    if slow <= 0.0 or math.exp(-slow * T) >= TRUNCATION_DECAY:
        raise TruncationTooSmall(
            f"exp(-min(alpha, beta) Re(lam) T) = {math.exp(-slow * T):.2e} is not below {TRUNCATION_DECAY:g}"
        )


def _node_weights(weight, N, per_unit):
    rho = np.empty(N + 1)
    rho[:per_unit] = weight.alpha**2
    rho[per_unit] = 0.5 * (weight.alpha**2 + weight.beta**2)
    rho[per_unit + 1 :] = weight.beta**2
    return rho


def fd_solve_mode(lam, weight: PiecewiseWeight, phi_k, T, h) -> FdGrid:
    """Central differences for ``-y'' + rho lam^2 y = 0``, ``y(0) = phi_k``, one mode."""
    lam = complex(lam)
    N, per_unit = _steps(T, h)
    _check_decay([lam.real], weight, T)
    rho = _node_weights(weight, N, per_unit)
    # unknowns y_1..y_N; rows 1..N-1 interior, row N outflow
    m = N
    ab = np.zeros((3, m), dtype=complex)
    ab[1, : m - 1] = 2.0 / h**2 + rho[1:N] * lam**2
    ab[0, 1:] = -1.0 / h**2
    ab[2, : m - 1] = -1.0 / h**2
    # outflow row: (y_N - y_{N-1})/h + beta lam y_N = 0
    ab[1, m - 1] = 1.0 / h + weight.beta * lam
    ab[2, m - 2] = -1.0 / h
    rhs = np.zeros(m, dtype=complex)
    rhs[0] = complex(phi_k) / h**2
    y = scipy.linalg.solve_banded((1, 1), ab, rhs)
    values = np.concatenate([[complex(phi_k)], y])
    return FdGrid(float(T), float(h), h * np.arange(N + 1), values)


def fd_solve_full(A: SectorNormalOperator, weight: PiecewiseWeight, P: PerturbationOperators, phi, T, h) -> FdGrid:
    """Block finite differences for the full equation with centred first derivatives.

    ``values`` has shape (N + 1, n) in H-coordinates.
    """
    P.check_against(A)
    n = A.n
    N, per_unit = _steps(T, h)
    _check_decay(A.eigenvalues.real, weight, T)
    rho = _node_weights(weight, N, per_unit)
    phi = np.asarray(phi, dtype=complex).reshape(n)
    eye = np.eye(n)
    A2 = A.power_matrix(2)
    C2 = P.A0 - eye  # coefficient of u''
    lower = C2 / h**2 - P.A1 / (2 * h)
    upper = C2 / h**2 + P.A1 / (2 * h)
    diag_base = -2.0 * C2 / h**2 + P.A2

    # rows 0..N-2: interior nodes 1..N-1; row N-1: outflow condition at t = T
    interior = np.r_[np.ones(N - 1), 0.0]
    outflow = np.r_[np.zeros(N - 1), 1.0]
    M = (
        sp.kron(sp.diags(interior), diag_base)
        + sp.kron(sp.diags(interior * np.r_[rho[1:N], 0.0]), A2)
        + sp.kron(sp.diags(interior[1:], -1), lower)
        + sp.kron(sp.diags(interior[:-1], 1), upper)
        + sp.kron(sp.diags(outflow), eye / h + weight.beta * A.matrix)
        + sp.kron(sp.diags(outflow[1:], -1), -eye / h)
    ).tocsc()
    rhs = np.zeros((N, n), dtype=complex)
    rhs[0] = -lower @ phi
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            lu = spla.splu(M)
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            raise SingularSystem(f"finite-difference system is singular: {exc}", condition_estimate=np.inf) from exc
    y = lu.solve(rhs.ravel())
    if not np.all(np.isfinite(y)):
        inv = spla.LinearOperator(M.shape, matvec=lu.solve, dtype=complex)
        cond = spla.norm(M, 1) * spla.onenormest(inv)
        raise SingularSystem("finite-difference solution is not finite", condition_estimate=float(cond))
    values = np.vstack([phi[None, :], y.reshape(N, n)])
    return FdGrid(float(T), float(h), h * np.arange(N + 1), values)


def convergence_order(errors) -> float:
    """Mean of ``log2(e_h / e_{h/2})`` over consecutive error measurements."""
    e = np.asarray(errors, dtype=float)
    if e.ndim != 1 or e.size < 2:
        raise ValueError("need at least two error measurements")
    if np.any(~(e > 0)):
        raise NonPositiveError("errors must be positive")
    return float(np.mean(np.log2(e[:-1] / e[1:])))
