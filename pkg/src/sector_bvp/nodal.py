"""Panel-grid representation of iterates and the nodal zero-trace inverse.

Functions live on composite 16-point Gauss-Legendre panels covering
[0, 1] and [1, T].  The zero-trace inverse of ``-d^2/dt^2 + rho lam^2`` is
applied mode by mode through the Green's function written in scaled form:

    y   = (yR^ S_J + yL^ S_K) / W
    y'  = (yR1^ S_J + yL1^ S_K) / W
    y'' = rho lam^2 y - f

with ``y_L = exp(Phi) yL^``, ``y_R = exp(-Phi) yR^`` and ``Phi`` the piecewise
linear phase ``kappa t`` / ``kappa + mu (t - 1)``.  The running integrals

    S_J(t) = int_0^t exp(Phi(s) - Phi(t)) yL^(s) f(s) ds
    S_K(t) = int_t^T exp(Phi(t) - Phi(s)) yR^(s) f(s) ds

only ever multiply by decaying exponentials, so nothing overflows however
long the half-line truncation is.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.signal
from numpy.polynomial import legendre

from .errors import DimensionMismatch
from .spectral import PiecewiseWeight, SectorNormalOperator

NODES = 16
_TAU, _WTS = legendre.leggauss(NODES)


def _integration_matrix():
    # Q[i, j] = int_{-1}^{tau_i} l_j(tau) dtau for the Lagrange basis on the GL nodes
    V = legendre.legvander(_TAU, NODES - 1)
    coeffs = np.linalg.inv(V)
    Q = np.empty((NODES, NODES))
    for j in range(NODES):
        Q[:, j] = legendre.legval(_TAU, legendre.legint(coeffs[:, j], lbnd=-1))
    return Q


def _differentiation_matrix():
    V = legendre.legvander(_TAU, NODES - 1)
    coeffs = np.linalg.inv(V)
    Dm = np.empty((NODES, NODES))
    for j in range(NODES):
        Dm[:, j] = legendre.legval(_TAU, legendre.legder(coeffs[:, j]))
    return Dm


_Q = _integration_matrix()
_D = _differentiation_matrix()
_BARY = np.array([1.0 / np.prod(_TAU[j] - np.delete(_TAU, j)) for j in range(NODES)])
_BARY /= np.abs(_BARY).max()


class PanelGrid:
    """Uniform panels of width ``h`` on [0, 1] followed by width-``h`` panels on [1, T]."""

    def __init__(self, per_unit: int, truncation: float):
        if per_unit < 1:
            raise ValueError("need at least one panel per unit interval")
        self.h = 1.0 / per_unit
        n_ext = max(1, math.ceil((truncation - 1.0) / self.h - 1e-9))
        self.T = 1.0 + n_ext * self.h
        self.edges = np.concatenate([np.linspace(0.0, 1.0, per_unit + 1), 1.0 + self.h * np.arange(1, n_ext + 1)])
        self.n_int = per_unit
        left = self.edges[:-1]
        self.nodes = left[:, None] + 0.5 * self.h * (_TAU[None, :] + 1.0)
        self.weights = np.broadcast_to(0.5 * self.h * _WTS, self.nodes.shape)

    @classmethod
    def for_problem(cls, A: SectorNormalOperator, weight: PiecewiseWeight, truncation=None, resolution=1.2):
        """Grid resolving every mode's rate with ``rate * h <= resolution``.

        The default truncation keeps ``exp(-slowest exterior rate * (T - 1))``
        below ``exp(-60)``.
        """
        lam = A.eigenvalues
        fastest = max(weight.alpha, weight.beta) * float(np.abs(lam).max())
        per_unit = max(4, math.ceil(fastest / resolution))
        if truncation is None:
            slowest = weight.beta * float(lam.real.min())
            truncation = 1.0 + 60.0 / slowest
        return cls(per_unit, truncation)

    @property
    def n_panels(self) -> int:
        return self.edges.size - 1

    @property
    def interior(self):
        return slice(0, self.n_int)

    @property
    def exterior(self):
        return slice(self.n_int, self.n_panels)


class NodalFunction:
    """Modal samples of a function and its first two derivatives on a :class:`PanelGrid`.

    Beyond ``T`` each mode is continued by ``exp(-tail_rate_k (t - T))``.
    """

    domain = (0.0, np.inf)
    breakpoints = (1.0,)

    def __init__(self, grid: PanelGrid, basis, values, tail_rates):
        self.grid = grid
        self.basis = np.asarray(basis, dtype=complex)
        self.values = [np.asarray(v, dtype=complex) for v in values]
        self.tail_rates = np.asarray(tail_rates, dtype=complex)
        shape = grid.nodes.shape + (self.basis.shape[0],)
        for v in self.values:
            if v.shape != shape:
                raise DimensionMismatch(f"nodal samples have shape {v.shape}, expected {shape}")

    @classmethod
    def zeros(cls, grid, basis, tail_rates):
        n = np.asarray(basis).shape[0]
        z = np.zeros(grid.nodes.shape + (n,), dtype=complex)
        return cls(grid, basis, [z, z, z], tail_rates)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    def panel_width(self) -> float:
        return self.grid.h

    def differentiated(self, order):
        """Nodal samples of d/dt of the interpolant of the ``order``-th derivative."""
        return np.einsum("ij,pjk->pik", _D, self.values[order]) * (2.0 / self.grid.h)

    def evaluate_modal(self, t, order=0, differentiate=False):
        """Interpolated modal values.

        With ``differentiate=True`` the ``order``-th derivative is obtained by
        differentiating the interpolant of derivative ``order - 1`` instead of
        using the stored samples.
        """
        if order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        data = self.differentiated(order - 1) if differentiate and order > 0 else self.values[order]
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.zeros((t.size, self.n), dtype=complex)
        g = self.grid
        inside = t <= g.T
        ti = t[inside]
        if ti.size:
            p = np.clip(np.searchsorted(g.edges, ti, side="right") - 1, 0, g.n_panels - 1)
            tau = 2.0 * (ti - g.edges[p]) / g.h - 1.0
            diff = tau[:, None] - _TAU[None, :]
            exact = np.abs(diff) < 1e-15
            with np.errstate(divide="ignore", invalid="ignore"):
                c = _BARY[None, :] / diff
            hit = exact.any(axis=1)
            c[hit] = exact[hit].astype(float)
            c /= c.sum(axis=1, keepdims=True)
            out[inside] = np.einsum("qj,qjk->qk", c, data[p])
        te = t[~inside]
        if te.size:
            last = data[-1, -1]
            out[~inside] = last[None, :] * np.exp(-np.outer(te - g.nodes[-1, -1], self.tail_rates))
        return out[0] if scalar else out

    def evaluate(self, t, order=0, differentiate=False):
        return self.evaluate_modal(t, order, differentiate) @ self.basis.T

    __call__ = evaluate

    def quadrature_nodes(self, a, b):
        """Native nodes and weights when (a, b) is a union of panels, else None."""
        g = self.grid
        if np.isinf(b):
            b = g.T
        ia = np.flatnonzero(np.abs(g.edges - a) < 1e-12)
        ib = np.flatnonzero(np.abs(g.edges - b) < 1e-12)
        if ia.size == 0 or ib.size == 0:
            return None
        sl = slice(int(ia[0]), int(ib[0]))
        return g.nodes[sl].ravel(), g.weights[sl].ravel()

    def nodal_values(self, order=0):
        """H-coordinate samples of shape (panels, nodes, n)."""
        return self.values[order] @ self.basis.T


def _scaled_fundamentals(lam, weight: PiecewiseWeight, grid: PanelGrid):
    """Scaled fundamental solutions and phase slopes at every node, modes last."""
    a, b = weight.alpha, weight.beta
    kap = a * lam
    mu = b * lam
    t = grid.nodes[..., None]
    yL = np.empty(grid.nodes.shape + (lam.size,), dtype=complex)
    yL1, yR, yR1 = (np.empty_like(yL) for _ in range(3))

    ti = t[grid.interior]
    e = np.exp(-2.0 * kap * ti)
    yL[grid.interior] = (1.0 - e) / (2.0 * kap)
    yL1[grid.interior] = (1.0 + e) / 2.0
    z = np.exp(2.0 * kap * (ti - 1.0))
    yR[grid.interior] = (1.0 + z) / 2.0 - (mu / kap) * (z - 1.0) / 2.0
    yR1[grid.interior] = kap * (z - 1.0) / 2.0 - mu * (z + 1.0) / 2.0

    x = t[grid.exterior] - 1.0
    e2 = np.exp(-2.0 * mu * x)
    q2 = np.exp(-2.0 * kap)
    sa = (1.0 - q2) / (2.0 * kap)
    cb = (1.0 + q2) / 2.0
    yL[grid.exterior] = sa * (1.0 + e2) / 2.0 + cb * (1.0 - e2) / (2.0 * mu)
    yL1[grid.exterior] = sa * mu * (1.0 - e2) / 2.0 + cb * (1.0 + e2) / 2.0
    yR[grid.exterior] = 1.0
    yR1[grid.exterior] = -mu

    W = (1.0 + q2) / 2.0 + (mu / kap) * (1.0 - q2) / 2.0
    slope = np.empty((grid.n_panels, lam.size), dtype=complex)
    slope[grid.interior] = kap
    slope[grid.exterior] = mu
    return yL, yL1, yR, yR1, W, slope


def _forward_sweep(g, slope, h):
    """S(t) = int_0^t exp(-slope (t - s)) g(s) ds at every node (slope constant per panel)."""
    P, m, n = g.shape
    s_loc = 0.5 * h * (_TAU + 1.0)
    grow = np.exp(slope[:, None, :] * s_loc[None, :, None])
    gg = grow * g
    within = 0.5 * h * (_Q @ gg)
    whole = 0.5 * h * (_WTS @ gg)
    decay = np.exp(-slope * h)
    start = np.zeros((P, n), dtype=complex)
    # start[p+1] = decay[p] * (start[p] + whole[p]); decay is constant on each piece
    cuts = np.flatnonzero(np.any(slope[1:] != slope[:-1], axis=1)) + 1
    carry = np.zeros(n, dtype=complex)
    for i, j in zip(np.r_[0, cuts], np.r_[cuts, P]):
        d = decay[i]
        powers = np.exp(-np.outer(h * np.arange(1, j - i + 1), slope[i]))
        for k in range(n):
            out = scipy.signal.lfilter([d[k]], [1.0, -d[k]], whole[i:j, k]) + carry[k] * powers[:, k]
            start[i, k] = carry[k]
            start[i + 1 : j, k] = out[:-1]
            carry[k] = out[-1]
    return np.exp(-slope[:, None, :] * s_loc[None, :, None]) * (start[:, None, :] + within)


def nodal_green(A: SectorNormalOperator, weight: PiecewiseWeight, grid: PanelGrid, f_modal, fundamentals=None):
    """Zero-trace decaying solution per mode for nodal modal source ``f_modal``.

    ``fundamentals`` may hold a cached ``_scaled_fundamentals`` result for the
    same operator, weight and grid.  Returns modal samples ``(y, y', y'')``.
    """
    lam = A.eigenvalues
    if fundamentals is None:
        fundamentals = _scaled_fundamentals(lam, weight, grid)
    yL, yL1, yR, yR1, W, slope = fundamentals
    h = grid.h
    SJ = _forward_sweep(yL * f_modal, slope, h)
    # backward sweep: reflect the grid so the same recurrence applies
    SK = _forward_sweep((yR * f_modal)[::-1, ::-1], slope[::-1], h)[::-1, ::-1]
    y = (yR * SJ + yL * SK) / W
    y1 = (yR1 * SJ + yL1 * SK) / W
    rho = np.where(grid.nodes < 1.0, weight.alpha**2, weight.beta**2)[..., None]
    y2 = rho * lam**2 * y - f_modal
    return y, y1, y2
