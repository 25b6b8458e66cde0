"""Finite-dimensional normal operators with sector spectrum.

The operator ``A`` is stored through its eigendecomposition
``A = U diag(lambda) U*`` with ``U`` unitary.  Fractional powers use the
principal branch of ``lambda**s``; since every eigenvalue lies in the open
right half-plane the branch cut never meets the spectrum, and the powers
form a semigroup.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    NonNormalMatrix,
    NonUnitaryBasis,
    SectorViolation,
    ZeroEigenvalue,
)

UNITARY_TOL = 1e-12
ZERO_EIGENVALUE_TOL = 1e-12
NORMALITY_TOL = 1e-10
# slack on the argument test so eigenvalues placed exactly on the sector edge pass
_ARG_SLACK = 1e-12


def _as_matrix(M, n=None, name="matrix"):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    if n is not None and M.shape[0] != n:
        raise DimensionMismatch(f"{name} has size {M.shape[0]}, expected {n}")
    return M


@dataclass(frozen=True, eq=False)
class SectorNormalOperator:
    """Normal operator ``U diag(eigenvalues) U*`` with ``|arg lambda| <= epsilon``.

    Build instances through :func:`make_operator` or :func:`operator_from_matrix`,
    which validate the invariants.
    """

    eigenvalues: np.ndarray
    eigenbasis: np.ndarray
    epsilon: float
    _matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=complex).copy()
        U = np.asarray(self.eigenbasis, dtype=complex).copy()
        lam.setflags(write=False)
        U.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenbasis", U)
        M = (U * lam) @ U.conj().T
        M.setflags(write=False)
        object.__setattr__(self, "_matrix", M)

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def power_matrix(self, power) -> np.ndarray:
        U = self.eigenbasis
        return (U * _principal_power(self.eigenvalues, power)) @ U.conj().T

    def to_modal(self, x):
        """Coordinates of ``x`` (last axis) in the eigenbasis."""
        return np.asarray(x) @ self.eigenbasis.conj()

    def from_modal(self, y):
        return np.asarray(y) @ self.eigenbasis.T


def _principal_power(lam, power):
    if power == 0:
        return np.ones_like(lam)
    if power == 1:
        return lam
    return np.exp(power * np.log(lam))


def make_operator(eigenvalues, eigenbasis=None, epsilon=0.0) -> SectorNormalOperator:
    """Validate and build a :class:`SectorNormalOperator`.

    Args:
        eigenvalues: complex eigenvalues, one per dimension.
        eigenbasis: matrix whose columns are orthonormal eigenvectors;
            identity when omitted.
        epsilon: sector half-angle in radians, ``0 <= epsilon < pi/2``.

    Raises:
        DimensionMismatch, NonUnitaryBasis, ZeroEigenvalue, SectorViolation
    """
    lam = np.atleast_1d(np.asarray(eigenvalues, dtype=complex))
    if lam.ndim != 1 or lam.size == 0:
        raise DimensionMismatch("eigenvalues must be a non-empty 1-d sequence")
    n = lam.size
    U = np.eye(n, dtype=complex) if eigenbasis is None else _as_matrix(eigenbasis, n, "eigenbasis")
    epsilon = float(epsilon)
    if not 0.0 <= epsilon < np.pi / 2:
        raise SectorViolation(f"sector half-angle {epsilon} outside [0, pi/2)")

    defect = np.linalg.norm(U.conj().T @ U - np.eye(n), 2)
    if defect > UNITARY_TOL:
        raise NonUnitaryBasis(f"||U*U - I|| = {defect:.3e} exceeds {UNITARY_TOL:g}")
    small = np.abs(lam) <= ZERO_EIGENVALUE_TOL
    if np.any(small):
        raise ZeroEigenvalue(f"eigenvalue(s) at index {np.flatnonzero(small).tolist()} vanish")
    args = np.abs(np.angle(lam))
    bad = args > epsilon + _ARG_SLACK
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise SectorViolation(f"|arg lambda_{k}| = {args[k]:.6g} exceeds epsilon = {epsilon:.6g}")
    return SectorNormalOperator(lam, U, epsilon)


def operator_from_matrix(M, epsilon=0.0) -> SectorNormalOperator:
    """Build the operator from a raw normal matrix via complex Schur form."""
    M = _as_matrix(M)
    departure = np.linalg.norm(M.conj().T @ M - M @ M.conj().T, 2)
    if departure > NORMALITY_TOL:
        raise NonNormalMatrix(f"||M*M - MM*|| = {departure:.3e} exceeds {NORMALITY_TOL:g}")
    T, Z = scipy.linalg.schur(M, output="complex")
    return make_operator(np.diag(T).copy(), Z, epsilon)


def random_operator(n, epsilon, rng, modulus=(0.5, 8.0), unitary=True) -> SectorNormalOperator:
    """Random operator with log-uniform eigenvalue moduli and arguments in the sector."""
    lo, hi = modulus
    r = np.exp(rng.uniform(np.log(lo), np.log(hi), size=n))
    theta = rng.uniform(-epsilon, epsilon, size=n) if epsilon > 0 else np.zeros(n)
    if unitary:
        Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        Q, R = np.linalg.qr(Z)
        Q = Q * (np.diag(R) / np.abs(np.diag(R)))
    else:
        Q = np.eye(n)
    return make_operator(r * np.exp(1j * theta), Q, epsilon)


def apply(A: SectorNormalOperator, power, x):
    """Return ``A**power x`` (principal branch).

    ``x`` may be a vector of length ``n`` or an array whose last axis has
    length ``n``.
    """
    x = np.asarray(x, dtype=complex)
    if x.shape[-1:] != (A.n,):
        raise DimensionMismatch(f"vector of length {x.shape[-1:]} for operator of size {A.n}")
    return A.from_modal(A.to_modal(x) * _principal_power(A.eigenvalues, power))


def operator_norm(M) -> float:
    """Largest singular value of a square matrix."""
    M = _as_matrix(M)
    return float(np.linalg.norm(M, 2))


@dataclass(frozen=True, eq=False)
class PerturbationOperators:
    """Lower-order coefficients ``A0``, ``A1``, ``A2`` of the full equation."""

    A0: np.ndarray
    A1: np.ndarray
    A2: np.ndarray

    def __post_init__(self):
        mats = [np.array(getattr(self, k), dtype=complex) for k in ("A0", "A1", "A2")]
        mats = [np.atleast_2d(m) for m in mats]
        n = mats[0].shape[0]
        for name, m in zip(("A0", "A1", "A2"), mats):
            _as_matrix(m, n, name)
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @property
    def n(self) -> int:
        return self.A0.shape[0]

    @classmethod
    def zeros(cls, n):
        z = np.zeros((n, n), dtype=complex)
        return cls(z, z, z)

    def is_zero(self) -> bool:
        return not (np.any(self.A0) or np.any(self.A1) or np.any(self.A2))

    def check_against(self, A: SectorNormalOperator):
        if self.n != A.n:
            raise DimensionMismatch(f"perturbations have size {self.n}, operator has size {A.n}")


def compute_bj_norms(A: SectorNormalOperator, P: PerturbationOperators):
    """Return ``(||A0||, ||A1 A^-1||, ||A2 A^-2||)``."""
    P.check_against(A)
    b0 = operator_norm(P.A0)
    b1 = operator_norm(P.A1 @ A.power_matrix(-1))
    b2 = operator_norm(P.A2 @ A.power_matrix(-2))
    return b0, b1, b2


@dataclass(frozen=True)
class PiecewiseWeight:
    """The coefficient ``rho(t)``: ``alpha**2`` on (0, 1), ``beta**2`` on (1, inf)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"alpha and beta must be positive, got {self.alpha}, {self.beta}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))

    def __call__(self, t):
        """Evaluate rho; t = 1 takes the right value."""
        t = np.asarray(t, dtype=float)
        return np.where(t < 1.0, self.alpha**2, self.beta**2)
