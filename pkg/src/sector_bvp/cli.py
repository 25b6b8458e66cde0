"""Command-line entry point: ``sector-bvp <command> [options]``.

Commands: ``solve``, ``check``, ``constants``, ``compact``, ``oracle``.
Reports are JSON (floats to 17 significant digits) on standard output or in
``--out``; time series go to CSV.  Exit status is 0 on success, 2 when
``check`` finds the condition violated and 1 on any error, with a JSON error
object on standard error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .compactness import empirical_constant
from .errors import ConfigParse, DidNotConverge, SectorBVPError
from .fd_oracle import convergence_order, fd_solve_full
from .perturbation import solve_full
from .principal import solve_principal
from .problem import dumps, load_problem
from .sobolev import h_theta_norm, l2_norm, w22_norm
from .solvability import ADOPTED_CONDITION_NOTE, check_condition, constants

EXIT_OK, EXIT_ERROR, EXIT_VERDICT_FALSE = 0, 1, 2
COMMANDS = ("solve", "check", "constants", "compact", "oracle")


@dataclass(frozen=True)
class RunConfig:
    problem: str | None = None
    tol: float = 1e-10
    grid_h: float | None = None
    truncation: float | None = None
    interval: tuple = (0.5, 1.0, 2.0, 3.0)
    samples: int = 100
    seed: int = 0
    out: str | None = None
    epsilon: float | None = None
    alpha: float | None = None
    beta: float | None = None
    bound: float = 1.0
    max_iter: int = 200

    def validate(self):
        if not self.tol > 0:
            raise ConfigParse("--tol must be positive")
        if self.grid_h is not None and not self.grid_h > 0:
            raise ConfigParse("--grid-h must be positive")
        if self.truncation is not None and not self.truncation > 0:
            raise ConfigParse("--truncation must be positive")
        if self.samples < 1:
            raise ConfigParse("--samples must be at least 1")
        if not self.bound > 0:
            raise ConfigParse("--bound must be positive")
        return self


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigParse(message)


def _interval(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigParse(f"--interval expects a,a1,b1,b; got {text!r}") from exc
    if len(vals) != 4:
        raise ConfigParse(f"--interval expects four numbers, got {len(vals)}")
    return vals


def build_parser():
    p = _Parser(prog="sector-bvp", description="Half-line operator BVP solver and diagnostics.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--problem")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--grid-h", type=float)
    p.add_argument("--truncation", type=float)
    p.add_argument("--interval", type=_interval, default=(0.5, 1.0, 2.0, 3.0))
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--bound", type=float, default=1.0, help="W21(a,b) bound M for compact")
    p.add_argument("--max-iter", type=int, default=200)
    return p


def parse_config(argv):
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(**{k: v for k, v in vars(ns).items() if k != "command"}).validate()
    return ns.command, cfg


def _stamp(report):
    report = dict(report)
    report["adopted_condition"] = True
    report["adopted_condition_note"] = ADOPTED_CONDITION_NOTE
    report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return report


def _emit(report, cfg, stdout):
    text = dumps(_stamp(report)) + "\n"
    if cfg.out and not cfg.out.endswith(".csv"):
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([format(float(v), ".17g") for v in row])


def _need_problem(cfg):
    if not cfg.problem:
        raise ConfigParse("--problem is required for this command")
    return load_problem(cfg.problem)


def _solve(prob, cfg):
    if prob.perturbations.is_zero():
        return "principal", solve_principal(prob.operator, prob.weight, prob.phi), None
    sol = solve_full(prob.operator, prob.weight, prob.perturbations, prob.phi, tol=cfg.tol, max_iter=cfg.max_iter)
    return "full", sol, sol


def cmd_solve(cfg, stdout):
    prob = _need_problem(cfg)
    A = prob.operator
    kind, sol, full = _solve(prob, cfg)
    u = sol.u if full is not None else sol.function
    h = cfg.grid_h or 0.01
    T = cfg.truncation or 10.0
    t = h * np.arange(int(round(T / h)) + 1)
    vals = sol.evaluate(t)
    report = {
        "command": "solve",
        "solver": kind,
        "n": A.n,
        "trace_norm": h_theta_norm(prob.phi, A),
        "l2_norm": l2_norm(u, (0.0, math.inf)),
        "w22_norm": w22_norm(u, (0.0, math.inf), A),
        "u_at_1": [[float(z.real), float(z.imag)] for z in sol.evaluate(1.0)],
    }
    if full is not None:
        report.update(
            iterations=full.iterations,
            converged=full.converged,
            residuals=list(full.residuals),
            contraction_ratio=full.contraction_ratio,
        )
    csv_path = cfg.out if cfg.out and cfg.out.endswith(".csv") else (str(Path(cfg.out).with_suffix(".csv")) if cfg.out else None)
    if csv_path:
        header = ["t"] + [f"{p}{k}" for k in range(A.n) for p in ("re_", "im_")]
        rows = [[ti] + [x for z in row for x in (z.real, z.imag)] for ti, row in zip(t, vals)]
        _write_csv(csv_path, header, rows)
        report["samples_csv"] = csv_path
    _emit(report, cfg, stdout)
    return EXIT_OK


def cmd_check(cfg, stdout):
    prob = _need_problem(cfg)
    rep = check_condition(prob.operator, prob.perturbations, prob.weight)
    report = {"command": "check", **rep.to_dict()}
    report.pop("note", None)
    _emit(report, cfg, stdout)
    return EXIT_OK if rep.verdict else EXIT_VERDICT_FALSE


def cmd_constants(cfg, stdout):
    if cfg.problem:
        prob = load_problem(cfg.problem)
        eps, a, b = prob.operator.epsilon, prob.weight.alpha, prob.weight.beta
    else:
        eps = 0.0 if cfg.epsilon is None else cfg.epsilon
        a = 1.0 if cfg.alpha is None else cfg.alpha
        b = 1.0 if cfg.beta is None else cfg.beta
    if cfg.epsilon is not None:
        eps = cfg.epsilon
    c0, c1, c2 = constants(eps, a, b)
    _emit({"command": "constants", "epsilon": eps, "alpha": a, "beta": b, "c0": c0, "c1": c1, "c2": c2}, cfg, stdout)
    return EXIT_OK


def cmd_compact(cfg, stdout):
    prob = _need_problem(cfg)
    rep = empirical_constant(
        prob.operator, prob.weight, prob.perturbations, cfg.interval, cfg.samples, M=cfg.bound, seed=cfg.seed, tol=cfg.tol
    )
    report = {"command": "compact", **rep.to_dict()}
    if cfg.out:
        stem = Path(cfg.out).with_suffix("")
        _write_csv(f"{stem}_ratios.csv", ["sample", "ratio"], list(enumerate(rep.ratios)))
        _write_csv(f"{stem}_singular_values.csv", ["k", "singular_value"], list(enumerate(rep.singular_values)))
    _emit(report, cfg, stdout)
    return EXIT_OK


def _default_truncation(prob):
    slow = min(prob.weight.alpha, prob.weight.beta) * float(prob.operator.eigenvalues.real.min())
    return float(max(3, math.ceil(-math.log(1e-10) / slow)))


def cmd_oracle(cfg, stdout):
    prob = _need_problem(cfg)
    A, w, P = prob.operator, prob.weight, prob.perturbations
    kind, sol, _ = _solve(prob, cfg)
    h0 = cfg.grid_h or 0.02
    T = cfg.truncation or _default_truncation(prob)
    rows = []
    for h in (h0, h0 / 2, h0 / 4):
        g = fd_solve_full(A, w, P, prob.phi, T, h)
        gap = float(np.linalg.norm(g.values - sol.evaluate(g.t), axis=1).max())
        rows.append({"h": h, "sup_gap": gap})
    gaps = [r["sup_gap"] for r in rows]
    order = convergence_order(gaps) if all(e > 0 for e in gaps) else None
    _emit({"command": "oracle", "solver": kind, "truncation": T, "study": rows, "order": order}, cfg, stdout)
    return EXIT_OK


_DISPATCH = {
    "solve": cmd_solve,
    "check": cmd_check,
    "constants": cmd_constants,
    "compact": cmd_compact,
    "oracle": cmd_oracle,
}


def run(command, cfg: RunConfig, stdout=None) -> int:
    return _DISPATCH[command](cfg, stdout or sys.stdout)


def _error_json(exc):
    d = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, DidNotConverge):
        d["contraction_ratio"] = exc.contraction_ratio
    return dumps(d)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        command, cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return run(command, cfg, stdout)
    except (SectorBVPError, OSError) as exc:
        stderr.write(_error_json(exc) + "\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
