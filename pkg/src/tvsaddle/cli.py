"""Command-line driver: parse a key=value config, run, write CSV + JSON.

Config files hold one ``key=value`` per line; ``#`` starts a comment::

    problem=matrix_game:nx=2,ny=2,seed=1
    topology=rotating_star:period=1
    M=5
    K=1000
    gamma=auto
    H=auto:eps=1e-6

Commands::

    tvsaddle run CONFIG [--set key=value ...] [--out DIR]
    tvsaddle sweep CONFIG --over PARAM --values a,b,c [--out DIR]
    tvsaddle validate CONFIG
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from tvsaddle.errors import ConfigError, DivergenceError, ValidationError
from tvsaddle.gossip import rounds_for_accuracy
from tvsaddle.graph import STATIC_KINDS, parse_topology
from tvsaddle.metrics import CSV_COLUMNS, fit_linear_rate, fit_sublinear_rate
from tvsaddle.mixing import chi_of, rho_of
from tvsaddle.problems import parse_problem, regularize
from tvsaddle.solver import SolverConfig, Trajectory, default_start, run, step_bound

log = logging.getLogger("tvsaddle")

KEYS = ("problem", "topology", "M", "gamma", "H", "K", "seed", "record_every", "z0", "out")
HEADER_KEYS = ("gamma", "H", "K", "chi", "rho", "L", "L_max", "mu", "D", "seed", "problem", "topology")
SEED_ENV = "TVSADDLE_SEED"
# the rotating star is the one topology with a conventional size: the
# three-node star used by the worst-case construction
DEFAULT_NODES = {"rotating_star": 3}
TOPOLOGY_KINDS = STATIC_KINDS + ("rotating_star", "random")

EXIT_OK, EXIT_IO, EXIT_DIVERGED = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    problem: str
    topology: str
    M: int
    K: int
    gamma: Optional[float] = None  # None means auto
    H: Optional[int] = None  # None means auto
    H_eps: float = 1e-6
    seed: int = 0
    record_every: int = 1
    z0: Optional[tuple] = None
    out: str = "."

    def to_text(self) -> str:
        """Canonical config text; ``parse_config(cfg.to_text()) == cfg``."""
        lines = [
            f"problem={self.problem}",
            f"topology={self.topology}",
            f"M={self.M}",
            f"K={self.K}",
            f"gamma={'auto' if self.gamma is None else repr(self.gamma)}",
            f"H={f'auto:eps={self.H_eps!r}' if self.H is None else self.H}",
            f"seed={self.seed}",
            f"record_every={self.record_every}",
        ]
        if self.z0 is not None:
            lines.append("z0=" + ",".join(repr(v) for v in self.z0))
        lines.append(f"out={self.out}")
        return "\n".join(lines) + "\n"


def _parse_int(value, field, errors, line, lo=None):
    try:
        v = int(value)
    except ValueError:
        errors.append((line, field, f"expected an integer, got {value!r}"))
        return None
    if lo is not None and v < lo:
        errors.append((line, field, f"must be >= {lo}, got {v}"))
        return None
    return v


def _parse_float(value, field, errors, line):
    try:
        v = float(value)
    except ValueError:
        errors.append((line, field, f"expected a number, got {value!r}"))
        return None
    if not math.isfinite(v):
        errors.append((line, field, f"must be finite, got {value!r}"))
        return None
    return v


def parse_config(text: str, overrides=None) -> RunConfig:
    """Parse config text (plus ``key=value`` overrides); raise ConfigError listing every problem."""
    errors = []
    raw: dict[str, tuple[str, Optional[int]]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append((lineno, "?", f"expected key=value, got {line!r}"))
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            errors.append((lineno, key, "unknown key"))
            continue
        raw[key] = (value, lineno)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in KEYS:
            errors.append((None, key or item, "override must be key=value with a known key"))
            continue
        raw[key] = (value.strip(), None)
    if SEED_ENV in os.environ:
        raw["seed"] = (os.environ[SEED_ENV], None)

    fields = {}
    for key in ("problem", "topology", "K"):
        if key not in raw:
            errors.append((None, key, "required key is missing"))

    if "M" in raw:
        fields["M"] = _parse_int(raw["M"][0], "M", errors, raw["M"][1], lo=1)
    elif "topology" in raw:
        kind = raw["topology"][0].partition(":")[0].strip()
        if kind in DEFAULT_NODES:
            fields["M"] = DEFAULT_NODES[kind]
        elif kind not in TOPOLOGY_KINDS:
            errors.append((raw["topology"][1], "topology", f"unknown topology kind {kind!r}"))
        else:
            errors.append((raw["topology"][1], "M", f"topology {kind!r} requires M (number of nodes)"))
    if "K" in raw:
        fields["K"] = _parse_int(raw["K"][0], "K", errors, raw["K"][1], lo=1)
    if "seed" in raw:
        fields["seed"] = _parse_int(raw["seed"][0], "seed", errors, raw["seed"][1])
    if "record_every" in raw:
        fields["record_every"] = _parse_int(raw["record_every"][0], "record_every", errors, raw["record_every"][1], lo=1)
    if "gamma" in raw:
        value, line = raw["gamma"]
        if value != "auto":
            g = _parse_float(value, "gamma", errors, line)
            if g is not None and g <= 0:
                errors.append((line, "gamma", f"must be positive, got {g}"))
            elif g is not None:
                fields["gamma"] = g
    if "H" in raw:
        value, line = raw["H"]
        m = re.fullmatch(r"auto(?::eps=(.+))?", value)
        if m:
            if m.group(1) is not None:
                eps = _parse_float(m.group(1), "H", errors, line)
                if eps is not None and not 0 < eps < 1:
                    errors.append((line, "H", f"auto eps must lie in (0, 1), got {eps}"))
                elif eps is not None:
                    fields["H_eps"] = eps
        else:
            h = _parse_int(value, "H", errors, line, lo=0)
            if h is not None:
                fields["H"] = h
    if "z0" in raw:
        value, line = raw["z0"]
        vals = [_parse_float(v, "z0", errors, line) for v in value.split(",")]
        if all(v is not None for v in vals):
            fields["z0"] = tuple(vals)
    if "out" in raw:
        fields["out"] = raw["out"][0]

    M = fields.get("M")
    if "problem" in raw and M is not None:
        try:
            parse_problem(raw["problem"][0], M)
        except ValidationError as exc:
            errors.append((raw["problem"][1], "problem", str(exc)))
    if "topology" in raw and M is not None:
        try:
            parse_topology(raw["topology"][0], M)
        except ValidationError as exc:
            errors.append((raw["topology"][1], "topology", str(exc)))

    if errors:
        raise ConfigError(errors)
    return RunConfig(problem=raw["problem"][0], topology=raw["topology"][0], **fields)


@dataclass
class Resolved:
    """A RunConfig turned into library objects, with every "auto" filled in."""

    solver: SolverConfig
    header: dict
    seed: int


def resolve(cfg: RunConfig) -> Resolved:
    problem, eps = parse_problem(cfg.problem, cfg.M)
    topology = parse_topology(cfg.topology, cfg.M)
    z0 = np.array(cfg.z0) if cfg.z0 is not None else default_start(problem, cfg.seed)
    if eps is not None:
        problem = regularize(problem, eps, z0)

    def chi_for(H):
        return chi_of(topology, cfg.K * 2 * (H + 1))

    if cfg.H is None:
        target = min(cfg.H_eps / (2 * cfg.K), 0.5)
        H = 0
        # chi's horizon depends on H; for random graphs iterate to a fixed point
        for _ in range(10):
            chi = chi_for(H)
            new_H = rounds_for_accuracy(chi, target) - 1
            if new_H <= H:
                break
            H = new_H
        log.info("auto H = %d (chi = %.6g, per-phase contraction target %.3g)", H, chi, target)
    else:
        H = cfg.H
    chi = chi_for(H)
    if cfg.gamma is None:
        gamma = step_bound(problem)
        log.info("auto gamma = 1/(4 L_max) = %.6g", gamma)
    else:
        gamma = cfg.gamma
    solver = SolverConfig(
        problem=problem,
        topology=topology,
        gamma=gamma,
        H=H,
        K=cfg.K,
        record_every=cfg.record_every,
        z0=z0,
        strict=False,
    )
    header = {
        "gamma": gamma,
        "H": H,
        "K": cfg.K,
        "chi": chi,
        "rho": rho_of(chi),
        "L": problem.L_global,
        "L_max": problem.L_max,
        "mu": problem.mu,
        "D": problem.diameter,
        "seed": cfg.seed,
        "problem": cfg.problem,
        "topology": cfg.topology,
    }
    return Resolved(solver=solver, header=header, seed=cfg.seed)


def _fmt(v) -> str:
    return repr(float(v))


def write_csv(path: Path, traj: Trajectory) -> None:
    pts = traj.points
    cols = [c for c in CSV_COLUMNS if not pts or getattr(pts[0], c) is not None]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for p in pts:
            w.writerow([getattr(p, c) if c in ("k", "rounds") else _fmt(getattr(p, c)) for c in cols])


def write_header(path: Path, header: dict) -> None:
    path.write_text(json.dumps({k: header[k] for k in HEADER_KEYS}, indent=2) + "\n")


def execute(cfg: RunConfig, out_dir=None, stem: str = "run") -> tuple[int, Trajectory | None]:
    """Run one config and write ``<stem>.json`` and ``<stem>.csv``; return (exit code, trajectory)."""
    out = Path(out_dir if out_dir is not None else cfg.out)
    try:
        res = resolve(cfg)
    except ValidationError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_IO, None
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_header(out / f"{stem}.json", res.header)
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_IO, None
    code = EXIT_OK
    try:
        traj = run(res.solver, seed=res.seed)
    except DivergenceError as exc:
        log.error("%s; partial trajectory written", exc)
        traj, code = exc.trajectory, EXIT_DIVERGED
    try:
        write_csv(out / f"{stem}.csv", traj)
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_IO, traj
    return code, traj


def summarize(traj: Trajectory) -> dict:
    """Fitted rates of a trajectory: linear exponent of dist_sq per round, log-log slope of gap."""
    summary = {}
    pts = [p for p in traj.points if p.k > 0]
    dist = [(p.rounds, p.dist_sq) for p in pts if p.dist_sq is not None and p.dist_sq > 1e-28]
    if len(dist) >= 10:
        summary["dist_sq_rate_per_round"] = fit_linear_rate(dist)
    gap = [(p.k, p.gap) for p in pts if p.gap is not None and p.gap > 0]
    if len(gap) >= 10:
        summary["gap_loglog_slope"] = fit_sublinear_rate(gap)
    return summary


def _safe(value: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", value)


def sweep(cfg: RunConfig, param: str, values, out_dir=None) -> int:
    """Run ``cfg`` once per value of ``param``; write one CSV per run plus summary.json."""
    key = "topology" if param == "chi" else param
    if key not in KEYS:
        raise ConfigError([(None, param, "unknown sweep parameter")])
    out = Path(out_dir if out_dir is not None else cfg.out)
    base_text = cfg.to_text()
    summary = {}
    worst = EXIT_OK
    for value in values:
        member = parse_config(base_text, overrides=[f"{key}={value}"])
        code, traj = execute(member, out, stem=f"{key}={_safe(value)}")
        worst = max(worst, code)
        entry = {"exit": code}
        if traj is not None:
            entry.update(summarize(traj))
            entry["chi"] = resolve(member).header["chi"]
        summary[value] = entry
    try:
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    except OSError as exc:
        log.error("cannot write summary: %s", exc)
        return EXIT_IO
    return worst


def _read(path) -> str:
    return Path(path).read_text()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tvsaddle", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one configuration")
    p_run.add_argument("config")
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_run.add_argument("--out")
    p_sweep = sub.add_parser("sweep", help="run a configuration over several values of one key")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--over", required=True)
    p_sweep.add_argument("--values", required=True)
    p_sweep.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_sweep.add_argument("--out")
    p_val = sub.add_parser("validate", help="check a configuration without running it")
    p_val.add_argument("config")
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )

    try:
        text = _read(args.config)
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(text, overrides=getattr(args, "set", None))
    except ConfigError as exc:
        for line, field, msg in exc.errors:
            where = f"{args.config}:{line}: " if line is not None else f"{args.config}: "
            print(f"{where}{field}: {msg}", file=sys.stderr)
        return EXIT_IO

    if args.command == "validate":
        print(cfg.to_text(), end="")
        return EXIT_OK
    if args.command == "run":
        code, _ = execute(cfg, args.out)
        return code
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    try:
        return sweep(cfg, args.over, values, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
