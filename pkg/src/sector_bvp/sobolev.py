"""Norms of vector functions: L2, W_2^1, W_2^2 on intervals and the trace norm.

Integrals use composite 16-point Gauss-Legendre quadrature.  Panels never
straddle a breakpoint of the function (t = 1 for solutions).  On half-line
intervals the integration proceeds in unit chunks until a certified tail bound
drops below ``TAIL_RTOL`` of the accumulated integral.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch, EmptyInterval
from .spectral import SectorNormalOperator, apply

GL_ORDER = 16
TAIL_RTOL = 1e-14
MAX_HALF_LINE = 1.0e4
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


def gauss_panels(lo, hi, width, breakpoints=()):
    """Nodes and weights of composite Gauss-Legendre on [lo, hi]."""
    cuts = [lo] + [b for b in sorted(breakpoints) if lo < b < hi] + [hi]
    xs, ws = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = max(1, math.ceil((b - a) / width - 1e-9))
        edges = np.linspace(a, b, m + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        xs.append((mid[:, None] + half[:, None] * _GL_X[None, :]).ravel())
        ws.append((half[:, None] * _GL_W[None, :]).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def _pairwise_sum(v):
    # fixed-order reduction keeps results bit-reproducible
    return float(np.add.reduce(np.asarray(v, dtype=float)))


def _integrand(u, t, terms, A):
    total = np.zeros(t.size)
    for order, power in terms:
        vals = u.evaluate(t, order)
        if power:
            vals = apply(A, power, vals)
        total += np.sum(np.abs(vals) ** 2, axis=-1)
    return total


def _width(u):
    w = getattr(u, "panel_width", None)
    return min(0.25, w()) if callable(w) else 0.25


def integrate_squared(u, interval, terms=((0, 0),), A: SectorNormalOperator | None = None):
    """``sum over (order, power) of int ||A^power u^(order)||^2 dt`` on ``interval``."""
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise EmptyInterval(f"interval ({a}, {b}) is empty")
    if any(p for _, p in terms) and A is None:
        raise ValueError("an operator is required for A-weighted terms")
    if A is not None and getattr(u, "n", A.n) != A.n:
        raise DimensionMismatch("function and operator dimensions differ")
    lo_dom, hi_dom = getattr(u, "domain", (0.0, np.inf))
    if a < lo_dom - 1e-12 or b > hi_dom + 1e-12:
        raise ValueError(f"interval ({a}, {b}) leaves the function's domain {lo_dom, hi_dom}")
    bps = getattr(u, "breakpoints", (1.0,))
    width = _width(u)
    if np.isfinite(b):
        t, w = gauss_panels(a, b, width, bps)
        return _pairwise_sum(w * _integrand(u, t, terms, A))

    # half-line: accumulate unit chunks past the last breakpoint
    start = max(a, max((p for p in bps if p > a), default=a), 1.0)
    acc = 0.0
    if start > a:
        t, w = gauss_panels(a, start, width, bps)
        acc = _pairwise_sum(w * _integrand(u, t, terms, A))
    tail = getattr(u, "tail_bound", None)
    norm_a = max(np.abs(A.eigenvalues)) if A is not None else 1.0
    lo = start
    quiet = 0
    while lo < MAX_HALF_LINE:
        hi = lo + 1.0
        t, w = gauss_panels(lo, hi, width)
        piece = _pairwise_sum(w * _integrand(u, t, terms, A))
        acc += piece
        lo = hi
        if callable(tail):
            bound = sum(tail(lo, order, norm_a ** (2 * power)) for order, power in terms)
            if bound <= TAIL_RTOL * acc or bound == 0.0:
                break
        else:
            quiet = quiet + 1 if piece <= TAIL_RTOL * acc else 0
            if quiet >= 3:
                break
    return acc


def l2_norm(u, interval) -> float:
    return math.sqrt(integrate_squared(u, interval, ((0, 0),)))


def w22_norm(u, interval, A: SectorNormalOperator) -> float:
    """``(||u''||^2 + ||A^2 u||^2)^{1/2}`` on ``interval``."""
    return math.sqrt(integrate_squared(u, interval, ((2, 0), (0, 2)), A))


def w21_norm(u, interval, A: SectorNormalOperator, weighted=True) -> float:
    """``(||u'||^2 + ||A u||^2)^{1/2}``; with ``weighted=False`` ``(||u'||^2 + ||u||^2)^{1/2}``."""
    terms = ((1, 0), (0, 1)) if weighted else ((1, 0), (0, 0))
    return math.sqrt(integrate_squared(u, interval, terms, A))


def h_theta_norm(phi, A: SectorNormalOperator, theta=1.5) -> float:
    """Trace-space norm ``||A^theta phi||``."""
    return float(np.linalg.norm(apply(A, theta, np.asarray(phi, dtype=complex))))


def w21_gram(functions, interval, A: SectorNormalOperator, weighted=True):
    """Gram matrix of ``functions`` in the W_2^1(interval) inner product."""
    a, b = interval
    width = min(_width(u) for u in functions)
    t, w = gauss_panels(a, b, width, (1.0,))
    rows = []
    for u in functions:
        d1 = u.evaluate(t, 1)
        d0 = apply(A, 1, u.evaluate(t, 0)) if weighted else u.evaluate(t, 0)
        rows.append(np.concatenate([d1.ravel(), d0.ravel()]))
    F = np.array(rows)
    ww = np.concatenate([np.repeat(w, A.n), np.repeat(w, A.n)])
    return (F * ww) @ F.conj().T
