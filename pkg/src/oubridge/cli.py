"""Command-line entry point: ``oubridge {eigen,simulate,quantize,verify,rate}``.

Settings are resolved as built-in defaults, then ``--config`` JSON, then
explicit flags.  Every output embeds the resolved configuration.  All
randomness is derived from ``--seed`` through ``numpy.random.SeedSequence``
and Philox generators, one child stream per batch, so output does not depend
on batch scheduling.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bridge_sim import (
    IndefiniteCovarianceError,
    StabilityError,
    euler_noise_shape,
    exact_noise_shape,
    simulate_bridge,
    simulate_exact,
)
from .grid import BridgePath, TimeGrid, paths_to_csv
from .kl_solver import ModeKind, RootFindingError, frequency_brackets, kl_basis
from .oracle import EigenSolverError
from .outputs import csv_with_header, dumps_json, emit
from .ou_model import BridgeSpec, DomainError, OuParams, QuadratureError
from .quantizer import functional_quantizer, rate_check
from .verification import run_verification

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3

BATCH = 10_000

COMMON = {
    "theta": 1.0,
    "mu": 0.0,
    "sigma": 1.0,
    "sigma0": 0.0,
    "x0": 0.0,
    "T": 1.0,
    "z": 0.0,
    "seed": 0,
    "out": "-",
    "format": "json",
}

COMMAND_DEFAULTS = {
    "eigen": {"n_modes": 10},
    "simulate": {"grid": 1025, "paths": 10, "scheme": "euler"},
    "quantize": {"N": 10, "m_max": 10, "mc_budget": None, "grid": 201},
    "verify": {"grid": 1025, "paths": 100_000, "corrupt_lambda": 0.0},
    "rate": {"N_list": [2, 4, 8, 16, 32, 64], "m_max": 8, "mc_budget": 200_000},
}


class UsageError(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # defaults are None so that only explicit flags override the config file
    for name in ("theta", "mu", "sigma", "sigma0", "x0", "T", "z"):
        common.add_argument(f"--{name}", type=float, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output file, '-' for stdout")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--config", default=None, help="JSON file with default settings")

    parser = argparse.ArgumentParser(prog="oubridge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigen", parents=[common], help="Karhunen-Loeve eigen-system")
    p.add_argument("--n-modes", dest="n_modes", type=int, default=None)

    p = sub.add_parser("simulate", parents=[common], help="sample bridge paths")
    p.add_argument("--grid", type=int, default=None, help="number of grid points")
    p.add_argument("--paths", type=int, default=None)
    p.add_argument("--scheme", choices=["euler", "exact"], default=None)

    p = sub.add_parser("quantize", parents=[common], help="optimal functional quantizer")
    p.add_argument("--N", dest="N", type=int, default=None)
    p.add_argument("--m-max", dest="m_max", type=int, default=None)
    p.add_argument("--mc-budget", dest="mc_budget", type=int, default=None)
    p.add_argument("--grid", type=int, default=None, help="points per output path")

    p = sub.add_parser("verify", parents=[common], help="run the oracle suite")
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--paths", type=int, default=None)
    p.add_argument("--corrupt-lambda", dest="corrupt_lambda", type=float, default=None,
                   help=argparse.SUPPRESS)

    p = sub.add_parser("rate", parents=[common], help="error decay in N")
    p.add_argument("--N-list", dest="N_list", type=_int_list, default=None)
    p.add_argument("--m-max", dest="m_max", type=int, default=None)
    p.add_argument("--mc-budget", dest="mc_budget", type=int, default=None)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, the ``--config`` file and explicit flags."""
    cmd = args.command
    cfg = dict(COMMON)
    cfg.update(COMMAND_DEFAULTS[cmd])
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = sorted(set(data) - set(cfg))
        if unknown:
            raise UsageError(f"unknown config keys for '{cmd}': {', '.join(unknown)}")
        cfg.update(data)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = cmd
    return cfg


def _params(cfg: dict) -> OuParams:
    return OuParams(
        theta=float(cfg["theta"]),
        mu=float(cfg["mu"]),
        sigma=float(cfg["sigma"]),
        sigma0=float(cfg["sigma0"]),
        x0=float(cfg["x0"]),
        T=float(cfg["T"]),
    )


def _spec(cfg: dict) -> BridgeSpec:
    return BridgeSpec(_params(cfg), float(cfg["z"]))


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _sidecar(out: str, suffix: str) -> str | None:
    if out == "-":
        return None
    p = Path(out)
    return str(p.with_name(p.stem + suffix))


# ---------------------------------------------------------------------------
# commands


def cmd_eigen(cfg: dict) -> int:
    params = _params(cfg)
    m = int(cfg["n_modes"])
    if m < 1:
        raise UsageError("--n-modes must be >= 1")
    basis = kl_basis(params, m)
    brackets = frequency_brackets(params, m)
    rows = []
    for md, br in zip(basis.modes, brackets):
        rows.append({
            "n": md.n,
            "omega": md.omega,
            "lambda": md.lam,
            "bracket_lower": br.lower,
            "bracket_upper": br.upper,
            "kind": md.kind.value,
            "residual": md.residual,
            "case": basis.case.value,
        })
    half = math.pi / (2 * params.T)
    first = {
        "leading_kind": basis.modes[0].kind.value,
        "trig_roots_below_half_period": sum(
            1 for md in basis.modes if md.kind is ModeKind.TRIG and 0 < md.omega < half
        ),
    }
    if cfg["format"] == "json":
        text = dumps_json({
            "config": cfg,
            "basis": basis.to_dict(),
            "table": rows,
            "first_interval": first,
        })
    else:
        header = list(rows[0])
        text = csv_with_header(cfg, _table_csv(header, [[r[k] for k in header] for r in rows]))
    emit(cfg["out"], text)
    return EXIT_OK


def _simulate_paths(spec: BridgeSpec, grid: TimeGrid, n_paths: int, scheme: str, seed: int):
    n_batches = max(1, math.ceil(n_paths / BATCH))
    children = np.random.SeedSequence(seed).spawn(n_batches)
    out = []
    for b, child in enumerate(children):
        size = min(BATCH, n_paths - b * BATCH)
        rng = np.random.Generator(np.random.Philox(child))
        if scheme == "exact":
            vals = simulate_exact(spec, grid, rng.standard_normal(exact_noise_shape(grid, size))).values
        else:
            start = rng.standard_normal(size)
            noise = rng.standard_normal(euler_noise_shape(grid, size))
            vals = simulate_bridge(spec, grid, start, noise).values
        out.append(vals)
    return np.vstack(out)


def cmd_simulate(cfg: dict) -> int:
    spec = _spec(cfg)
    count, n_paths = int(cfg["grid"]), int(cfg["paths"])
    if count < 3 or n_paths < 1:
        raise UsageError("--grid must be >= 3 and --paths >= 1")
    grid = TimeGrid.uniform(spec.params.T, count)
    vals = _simulate_paths(spec, grid, n_paths, cfg["scheme"], int(cfg["seed"]))
    path = BridgePath(grid, vals)
    if cfg["format"] == "json":
        text = dumps_json({"config": cfg, **path.to_json()})
    else:
        text = csv_with_header(cfg, paths_to_csv(path))
    emit(cfg["out"], text)
    return EXIT_OK


def cmd_quantize(cfg: dict) -> int:
    spec = _spec(cfg)
    N, m_max = int(cfg["N"]), int(cfg["m_max"])
    if N < 1 or m_max < 1:
        raise UsageError("--N and --m-max must be >= 1")
    fq = functional_quantizer(
        spec, N, m_max=m_max, mc_budget=cfg["mc_budget"], seed=int(cfg["seed"])
    )
    paths = fq.paths(int(cfg["grid"]))
    paths_text = csv_with_header(cfg, paths_to_csv(paths, fq.probabilities))
    if cfg["format"] == "json":
        doc = {"config": cfg, "quantizer": fq.to_dict()}
        if cfg["out"] == "-":
            doc["paths"] = paths.to_json()
        text = dumps_json(doc)
    else:
        d = fq.d
        header = ["path_id", "probability"] + [f"a_{j + 1}" for j in range(d)]
        rows = [
            [i, float(fq.probabilities[i])] + [float(x) for x in fq.codebook.points[i]]
            for i in range(fq.N)
        ]
        text = csv_with_header(cfg, _table_csv(header, rows))
    sidecar = _sidecar(cfg["out"], "_paths.csv")
    if sidecar is not None:
        emit(sidecar, paths_text)
    emit(cfg["out"], text)
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    checks = run_verification(
        n_paths=int(cfg["paths"]),
        euler_grid=int(cfg["grid"]),
        seed=int(cfg["seed"]),
        corrupt_lambda=float(cfg["corrupt_lambda"]),
    )
    for c in checks:
        print(c.line(), file=sys.stderr)
    ok = all(c.passed for c in checks)
    if cfg["format"] == "json":
        text = dumps_json({"config": cfg, "passed": ok, "checks": [c.to_dict() for c in checks]})
    else:
        rows = [[c.name, c.measured, c.tolerance, c.passed] for c in checks]
        text = csv_with_header(cfg, _table_csv(["check", "measured", "tolerance", "passed"], rows))
    emit(cfg["out"], text)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_rate(cfg: dict) -> int:
    spec = _spec(cfg)
    Ns = list(cfg["N_list"])
    if len(Ns) < 4:
        raise UsageError("--N-list needs at least 4 values")
    study = rate_check(
        spec, Ns, m_max=int(cfg["m_max"]), mc_budget=cfg["mc_budget"],
        eval_budget=cfg["mc_budget"], seed=int(cfg["seed"]),
    )
    if cfg["format"] == "json":
        text = dumps_json({"config": cfg, **study.to_dict()})
    else:
        rows = [
            [int(n), float(e), float(s), int(d)]
            for n, e, s, d in zip(study.N, study.error, study.se, study.dims)
        ]
        body = _table_csv(["N", "E_N", "se", "d"], rows)
        body += f"# slope: {study.slope!r}\n# K: {study.K!r}\n"
        text = csv_with_header(cfg, body)
    emit(cfg["out"], text)
    return EXIT_OK


COMMANDS = {
    "eigen": cmd_eigen,
    "simulate": cmd_simulate,
    "quantize": cmd_quantize,
    "verify": cmd_verify,
    "rate": cmd_rate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg["command"]](cfg)
    except (RootFindingError, QuadratureError, EigenSolverError, IndefiniteCovarianceError) as exc:
        print(f"oubridge: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (UsageError, DomainError, StabilityError, ValueError, TypeError, KeyError) as exc:
        print(f"oubridge: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
