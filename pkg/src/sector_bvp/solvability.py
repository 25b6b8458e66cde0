"""Regular-solvability constants and the sufficient condition built from them.

The condition checked is ``c0 ||B0|| + c1 ||B1|| + c2 ||B2|| < 1`` with
``B_j = A_j A^{-j}``.  The weighted-sum form is an adopted reading of the
condition, not a derived one.  Reports always carry ``adopted_condition = True``
so the verdict is never mistaken for a necessary condition.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import EpsilonOutOfRange
from .spectral import PerturbationOperators, PiecewiseWeight, SectorNormalOperator, compute_bj_norms

ADOPTED_CONDITION_NOTE = (
    "verdict uses the adopted sufficient condition c0*||B0|| + c1*||B1|| + c2*||B2|| < 1; "
    "it is not a necessary condition"
)


def constants(epsilon, alpha, beta):
    """Return ``(c0, c1, c2)`` for sector half-angle ``epsilon`` and weights ``alpha``, ``beta``."""
    epsilon = float(epsilon)
    if not 0.0 <= epsilon < math.pi / 2:
        raise EpsilonOutOfRange(f"epsilon = {epsilon} outside [0, pi/2)")
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    lo, hi = min(alpha, beta), max(alpha, beta)
    wide = 1.0 / (math.sqrt(2.0) * math.cos(epsilon))
    c0 = (1.0 if epsilon < math.pi / 4 else wide) / lo**2
    c1 = 1.0 / (2.0 * math.cos(epsilon) * lo)
    c2 = hi / lo**2 * (1.0 if epsilon <= math.pi / 4 else wide)
    return c0, c1, c2


@dataclass(frozen=True)
class SolvabilityReport:
    epsilon: float
    alpha: float
    beta: float
    c0: float
    c1: float
    c2: float
    b_norms: tuple
    margin: float
    verdict: bool
    adopted_condition: bool = True
    note: str = ADOPTED_CONDITION_NOTE

    def to_dict(self):
        d = asdict(self)
        d["b_norms"] = list(self.b_norms)
        return d


def margin_from_norms(epsilon, weight: PiecewiseWeight, b_norms):
    c = constants(epsilon, weight.alpha, weight.beta)
    return c, float(sum(cj * bj for cj, bj in zip(c, b_norms)))


def check_condition(A: SectorNormalOperator, P: PerturbationOperators, weight: PiecewiseWeight) -> SolvabilityReport:
    """Evaluate ``||B_j||``, the constants and the margin ``q``; verdict is ``q < 1``."""
    b = compute_bj_norms(A, P)
    (c0, c1, c2), q = margin_from_norms(A.epsilon, weight, b)
    return SolvabilityReport(
        epsilon=A.epsilon,
        alpha=weight.alpha,
        beta=weight.beta,
        c0=c0,
        c1=c1,
        c2=c2,
        b_norms=tuple(b),
        margin=q,
        verdict=q < 1.0,
    )
