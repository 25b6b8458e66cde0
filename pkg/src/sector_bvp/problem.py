"""Problem files: JSON with complex numbers written as ``[re, im]`` pairs.

Fields: ``eigenvalues`` (list of pairs), optional ``eigenbasis`` (row-major
complex matrix, default identity), ``epsilon``, optional ``A0``, ``A1``, ``A2``,
and ``alpha``, ``beta``, ``phi`` for the boundary problem.  Real numbers are
accepted wherever a complex entry is expected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ProblemFileInvalid, SectorBVPError
from .spectral import PerturbationOperators, PiecewiseWeight, SectorNormalOperator, make_operator


@dataclass(frozen=True)
class Problem:
    operator: SectorNormalOperator
    perturbations: PerturbationOperators
    weight: PiecewiseWeight
    phi: np.ndarray


def _complex(x, where):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise ProblemFileInvalid(f"{where}: expected a number or an [re, im] pair, got {x!r}")


def _vector(x, where):
    if not isinstance(x, list) or not x:
        raise ProblemFileInvalid(f"{where}: expected a non-empty list")
    return np.array([_complex(v, f"{where}[{i}]") for i, v in enumerate(x)])


def _matrix(x, n, where):
    if not isinstance(x, list) or len(x) != n or any(not isinstance(r, list) or len(r) != n for r in x):
        raise ProblemFileInvalid(f"{where}: expected a {n}x{n} matrix")
    return np.array([[_complex(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(x)])


def _positive(d, key, default):
    v = d.get(key, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0 or not math.isfinite(v):
        raise ProblemFileInvalid(f"{key}: expected a positive number, got {v!r}")
    return float(v)


def problem_from_dict(d) -> Problem:
    if not isinstance(d, dict):
        raise ProblemFileInvalid("problem file must hold a JSON object")
    if "eigenvalues" not in d:
        raise ProblemFileInvalid("missing field 'eigenvalues'")
    lam = _vector(d["eigenvalues"], "eigenvalues")
    n = lam.size
    basis = _matrix(d["eigenbasis"], n, "eigenbasis") if d.get("eigenbasis") is not None else None
    eps = d.get("epsilon", 0.0)
    if not isinstance(eps, (int, float)) or isinstance(eps, bool):
        raise ProblemFileInvalid(f"epsilon: expected a number, got {eps!r}")
    mats = [_matrix(d[k], n, k) if d.get(k) is not None else np.zeros((n, n), complex) for k in ("A0", "A1", "A2")]
    phi = _vector(d["phi"], "phi") if "phi" in d else np.ones(n, dtype=complex)
    if phi.size != n:
        raise ProblemFileInvalid(f"phi has {phi.size} entries, expected {n}")
    try:
        A = make_operator(lam, basis, float(eps))
    except SectorBVPError as exc:
        raise ProblemFileInvalid(f"invalid operator: {exc}") from exc
    weight = PiecewiseWeight(_positive(d, "alpha", 1.0), _positive(d, "beta", 1.0))
    return Problem(A, PerturbationOperators(*mats), weight, phi)


def load_problem(path) -> Problem:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as exc:
        raise ProblemFileInvalid(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemFileInvalid(f"{path} is not valid JSON: {exc}") from exc
    return problem_from_dict(d)


def _pair(z):
    return [float(z.real), float(z.imag)]


def problem_to_dict(p: Problem):
    A = p.operator
    out = {
        "eigenvalues": [_pair(z) for z in A.eigenvalues],
        "eigenbasis": [[_pair(z) for z in row] for row in A.eigenbasis],
        "epsilon": float(A.epsilon),
    }
    for k, M in zip(("A0", "A1", "A2"), (p.perturbations.A0, p.perturbations.A1, p.perturbations.A2)):
        out[k] = [[_pair(z) for z in row] for row in M]
    out.update(alpha=p.weight.alpha, beta=p.weight.beta, phi=[_pair(z) for z in p.phi])
    return out


def _fmt(x):
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return json.dumps(str(x))
        text = format(x, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps(obj) -> str:
    """JSON text with every float written to 17 significant digits (non-finite floats as strings)."""
    return _fmt(obj)


def save_problem(p: Problem, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(problem_to_dict(p)) + "\n")
