"""Vector-valued functions on the half-line.

Two representations are provided:

``ExpPoly``
    closed form.  Each eigen-coordinate is a finite sum of
    ``p(x) exp(-nu x)`` terms, with ``x = t`` or ``x = 1 - t`` on (0, 1) and
    ``x = t - 1`` on (1, inf).  The class is closed under differentiation,
    matrix mixing and the zero-trace inverse of the principal operator, so
    the principal solution, the source term and single Green applications are
    exact.  Repeated inversion is not: the polynomial degree grows with each
    application and cross-mode particular solutions cancel catastrophically,
    which is why the fixed-point iterates live on a panel grid instead
    (see :mod:`sector_bvp.nodal`).

``GridFunction``
    samples on a strictly increasing grid, interpolated by panel-wise cubics.
"""

from __future__ import annotations

import numpy as np
import scipy.interpolate
import scipy.special

from .errors import DimensionMismatch, InvalidOrder, MissingDerivativeData

FAMILIES = ("L", "R", "E")
# d/dt = sign * d/dx for the local variable of each family
_SIGN = {"L": 1.0, "R": -1.0, "E": 1.0}
_INTERIOR = ("L", "R")


def _merge_rates(a, b, rtol=1e-14):
    """Union of two rate arrays; returns (union, index of each b entry)."""
    merged = list(a)
    idx = []
    for v in b:
        hit = None
        for i, w in enumerate(merged):
            if abs(v - w) <= rtol * max(1.0, abs(w)):
                hit = i
                break
        if hit is None:
            merged.append(v)
            hit = len(merged) - 1
        idx.append(hit)
    return np.asarray(merged, dtype=complex), np.asarray(idx, dtype=int)


class ExpPoly:
    """Closed-form piecewise exponential-polynomial vector function.

    Attributes:
        basis: unitary matrix mapping eigen-coordinates to H-coordinates.
        rates: dict family -> (J,) complex decay rates ``nu``.
        coef: dict family -> (n, J, D) complex polynomial coefficients in the
            local variable, lowest degree first.
    """

    def __init__(self, basis, rates, coef):
        self.basis = np.asarray(basis, dtype=complex)
        self.rates = {f: np.asarray(rates[f], dtype=complex) for f in FAMILIES}
        self.coef = {f: np.asarray(coef[f], dtype=complex) for f in FAMILIES}
        n = self.basis.shape[0]
        for f in FAMILIES:
            c = self.coef[f]
            if c.ndim != 3 or c.shape[0] != n or c.shape[1] != self.rates[f].shape[0]:
                raise DimensionMismatch(f"family {f}: coefficient shape {c.shape} inconsistent")
        self._derivs = {0: self}

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, basis, rates=None):
        basis = np.asarray(basis, dtype=complex)
        n = basis.shape[0]
        rates = rates or {f: np.zeros(0, dtype=complex) for f in FAMILIES}
        coef = {f: np.zeros((n, len(rates[f]), 1), dtype=complex) for f in FAMILIES}
        return cls(basis, rates, coef)

    @classmethod
    def from_exponentials(cls, amplitudes, rates, basis=None):
        """Sum of ``a_k exp(-r_j t)`` over the whole half-line.

        Args:
            amplitudes: (n, J) array; entry (k, j) multiplies ``exp(-r_j t)``
                in eigen-coordinate k.
            rates: (J,) rates ``r_j``.
        """
        amp = np.atleast_2d(np.asarray(amplitudes, dtype=complex))
        r = np.atleast_1d(np.asarray(rates, dtype=complex))
        n = amp.shape[0]
        basis = np.eye(n, dtype=complex) if basis is None else basis
        coef = {
            "L": amp[:, :, None],
            "R": np.zeros((n, 0, 1), dtype=complex),
            "E": (amp * np.exp(-r))[:, :, None],
        }
        return cls(basis, {"L": r, "R": np.zeros(0, dtype=complex), "E": r}, coef)

    # shape --------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def degree(self) -> int:
        return max(self.coef[f].shape[2] for f in FAMILIES) - 1

    domain = (0.0, np.inf)
    breakpoints = (1.0,)

    def max_rate(self) -> float:
        mags = [np.abs(self.rates[f]) for f in FAMILIES if self.rates[f].size]
        return float(max((m.max() for m in mags), default=0.0))

    def min_decay(self) -> float:
        """Smallest real part among exterior rates carrying nonzero coefficients."""
        c = self.coef["E"]
        live = np.any(c != 0, axis=(0, 2))
        if not np.any(live):
            return np.inf
        return float(self.rates["E"][live].real.min())

    # algebra ------------------------------------------------------------

    def _with(self, coef, rates=None):
        return ExpPoly(self.basis, rates or self.rates, coef)

    def _aligned(self, other):
        if other.n != self.n:
            raise DimensionMismatch("functions of different dimension")
        if not np.allclose(other.basis, self.basis, rtol=0, atol=1e-14):
            other = other.rebase(self.basis)
        rates, a, b = {}, {}, {}
        for f in FAMILIES:
            merged, idx = _merge_rates(self.rates[f], other.rates[f])
            D = max(self.coef[f].shape[2], other.coef[f].shape[2])
            ca = np.zeros((self.n, merged.size, D), dtype=complex)
            cb = np.zeros_like(ca)
            ca[:, : self.rates[f].size, : self.coef[f].shape[2]] = self.coef[f]
            np.add.at(cb, (slice(None), idx, slice(0, other.coef[f].shape[2])), other.coef[f])
            rates[f], a[f], b[f] = merged, ca, cb
        return rates, a, b

    def __add__(self, other):
        rates, a, b = self._aligned(other)
        return ExpPoly(self.basis, rates, {f: a[f] + b[f] for f in FAMILIES})

    def __sub__(self, other):
        rates, a, b = self._aligned(other)
        return ExpPoly(self.basis, rates, {f: a[f] - b[f] for f in FAMILIES})

    def __neg__(self):
        return self._with({f: -self.coef[f] for f in FAMILIES})

    def __mul__(self, s):
        return self._with({f: s * self.coef[f] for f in FAMILIES})

    __rmul__ = __mul__

    def mix_modal(self, M):
        """Left-multiply eigen-coordinates by the matrix ``M``."""
        M = np.asarray(M, dtype=complex)
        return self._with({f: np.einsum("kl,ljd->kjd", M, self.coef[f]) for f in FAMILIES})

    def mix(self, M):
        """Apply an H-coordinate matrix ``M`` pointwise."""
        U = self.basis
        return self.mix_modal(U.conj().T @ np.asarray(M, dtype=complex) @ U)

    def scale_modes(self, interior, exterior):
        """Multiply eigen-coordinate k by ``interior[k]`` on (0,1) and ``exterior[k]`` on (1,inf)."""
        interior = np.asarray(interior, dtype=complex)[:, None, None]
        exterior = np.asarray(exterior, dtype=complex)[:, None, None]
        return self._with({
            "L": interior * self.coef["L"],
            "R": interior * self.coef["R"],
            "E": exterior * self.coef["E"],
        })

    def rebase(self, basis):
        basis = np.asarray(basis, dtype=complex)
        T = basis.conj().T @ self.basis
        out = ExpPoly(basis, self.rates, self.coef).mix_modal(T)
        return out

    def derivative(self, order=1):
        if order < 0 or int(order) != order:
            raise InvalidOrder(f"derivative order must be a non-negative integer, got {order}")
        order = int(order)
        if order in self._derivs:
            return self._derivs[order]
        prev = self.derivative(order - 1)
        coef = {}
        for f in FAMILIES:
            c = prev.coef[f]
            dc = np.zeros_like(c)
            if c.shape[2] > 1:
                dc[:, :, :-1] = c[:, :, 1:] * np.arange(1, c.shape[2])
            dc -= prev.rates[f][None, :, None] * c
            coef[f] = _SIGN[f] * dc
        out = ExpPoly(self.basis, self.rates, coef)
        self._derivs[order] = out
        return out

    def trim(self, rtol=1e-18):
        """Drop trailing polynomial degrees whose contribution is below ``rtol``.

        The bound for coefficient ``c`` of ``x**i exp(-nu x)`` is its maximum over
        the family's range of ``x``.
        """
        sizes = {}
        bounds = {}
        for f in FAMILIES:
            c = np.abs(self.coef[f])
            if c.size == 0:
                bounds[f] = np.zeros((0,))
                continue
            i = np.arange(c.shape[2])
            re = self.rates[f].real[None, :, None]
            if f == "E":
                with np.errstate(divide="ignore", invalid="ignore"):
                    xs = np.where(re > 0, i / np.where(re > 0, re, 1.0), np.inf)
                    peak = np.where(
                        np.isfinite(xs),
                        np.where(i == 0, 1.0, np.exp(i * np.log(np.maximum(xs, 1e-300)) - re * xs)),
                        np.inf,
                    )
            else:
                peak = np.maximum(1.0, np.exp(-re)) * np.ones_like(i, dtype=float)
            bounds[f] = np.where(c > 0, c * peak, 0.0).max(axis=(0, 1))
        scale = max((b.max() for b in bounds.values() if b.size), default=0.0)
        if scale == 0.0:
            return self._with({f: self.coef[f][:, :, :1] for f in FAMILIES})
        coef = {}
        for f in FAMILIES:
            b = bounds[f]
            keep = np.flatnonzero(b > rtol * scale) if b.size else np.array([], dtype=int)
            D = int(keep[-1]) + 1 if keep.size else 1
            sizes[f] = D
            coef[f] = self.coef[f][:, :, :D]
        return self._with(coef)

    # evaluation ---------------------------------------------------------

    def _family_values(self, f, x):
        c = self.coef[f]
        nu = self.rates[f]
        if c.shape[1] == 0 or x.size == 0:
            return np.zeros((x.size, self.n), dtype=complex)
        acc = np.zeros((x.size,) + c.shape[:2], dtype=complex)
        xb = x[:, None, None]
        for d in range(c.shape[2] - 1, -1, -1):
            acc = acc * xb + c[None, :, :, d]
        return np.einsum("tkj,tj->tk", acc, np.exp(-np.outer(x, nu)))

    def evaluate_modal(self, t, order=0):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        if np.any(t < 0):
            raise ValueError("functions are defined for t >= 0 only")
        g = self.derivative(order)
        out = np.zeros((t.size, self.n), dtype=complex)
        inner = t < 1.0
        ti = t[inner]
        if ti.size:
            out[inner] = g._family_values("L", ti) + g._family_values("R", 1.0 - ti)
        te = t[~inner]
        if te.size:
            out[~inner] = g._family_values("E", te - 1.0)
        return out[0] if scalar else out

    def evaluate(self, t, order=0):
        """Values of the ``order``-th derivative in H-coordinates; t = 1 gives the right limit."""
        return self.evaluate_modal(t, order) @ self.basis.T

    __call__ = evaluate

    def panel_width(self) -> float:
        return min(0.25, 8.0 / max(2.0 * self.max_rate(), 1e-300))

    def tail_bound(self, X, order=0, power_scale=1.0):
        """Upper bound for the tail integral of ``||u^(order)||**2`` over (X, inf).

        ``power_scale`` multiplies the bound (pass ``||A||**(2p)`` for ``A**p``-weighted
        integrands).
        """
        if X < 1.0:
            raise ValueError("tail bound is defined for X >= 1")
        g = self.derivative(order)
        c = np.abs(g.coef["E"])
        if not np.any(c):
            return 0.0
        re = g.rates["E"].real
        y = X - 1.0
        i = np.arange(c.shape[2])
        with np.errstate(divide="ignore", invalid="ignore"):
            cc = 2.0 * re[:, None]
            m = 2 * i[None, :]
            logq = np.log(scipy.special.gammaincc(m + 1, np.maximum(cc, 0) * y))
            log_int = scipy.special.gammaln(m + 1) + logq - (m + 1) * np.log(np.where(cc > 0, cc, 1.0))
            root = np.where(cc > 0, np.exp(0.5 * log_int), np.inf)
        live = c > 0
        per_mode = np.where(live, c * root[None], 0.0).sum(axis=(1, 2))
        return float(power_scale * np.sum(per_mode**2))


class GridFunction:
    """Sampled vector function with panel-wise cubic interpolation.

    ``derivatives[m-1]`` holds samples of the m-th derivative.  Where the derivative
    of the requested order is sampled too, cubic Hermite interpolation is used,
    otherwise a cubic spline on each segment between breakpoints.
    """

    def __init__(self, t, values, derivatives=(), breakpoints=(1.0,)):
        t = np.asarray(t, dtype=float)
        if t.ndim != 1 or t.size < 4 or np.any(np.diff(t) <= 0):
            raise ValueError("grid must be strictly increasing with at least 4 points")
        data = [np.asarray(values, dtype=complex)] + [np.asarray(d, dtype=complex) for d in derivatives]
        data = [d[:, None] if d.ndim == 1 else d for d in data]
        for d in data:
            if d.shape[0] != t.size:
                raise DimensionMismatch("sample arrays must match the grid length")
        self.t = t
        self.data = data
        self.domain = (float(t[0]), float(t[-1]))
        self.breakpoints = tuple(b for b in breakpoints if t[0] < b < t[-1])
        self._interp = {}

    @property
    def n(self) -> int:
        return self.data[0].shape[1]

    def _segments(self):
        cuts = [0]
        for b in self.breakpoints:
            j = int(np.searchsorted(self.t, b))
            if j < self.t.size and abs(self.t[j] - b) < 1e-12:
                cuts.append(j)
        cuts.append(self.t.size - 1)
        return [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]

    def _build(self, order):
        if order >= len(self.data):
            raise MissingDerivativeData(f"no samples for derivative order {order}")
        pieces = []
        for lo, hi in self._segments():
            ts = self.t[lo : hi + 1]
            ys = self.data[order][lo : hi + 1]
            if order + 1 < len(self.data):
                spl = scipy.interpolate.CubicHermiteSpline(ts, ys, self.data[order + 1][lo : hi + 1], axis=0)
            else:
                spl = scipy.interpolate.CubicSpline(ts, ys, axis=0)
            pieces.append((ts[0], ts[-1], spl))
        return pieces

    def evaluate(self, t, order=0):
        if order not in self._interp:
            self._interp[order] = self._build(order)
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.zeros((t.size, self.n), dtype=complex)
        pieces = self._interp[order]
        for i, (lo, hi, spl) in enumerate(pieces):
            last = i == len(pieces) - 1
            mask = (t >= lo) & ((t <= hi) if last else (t < hi))
            if np.any(mask):
                out[mask] = spl(t[mask])
        return out[0] if scalar else out

    __call__ = evaluate

    def panel_width(self) -> float:
        return float(np.min(np.diff(self.t)))
