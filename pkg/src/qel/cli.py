"""Command-line front end: config parsing, dispatch, and report emission.

Subcommands: busy-period, moments, lst, simulate, crossing, fclt.
Exit codes: 0 ok, 2 config error, 3 numerical error, 4 truncation abort.
Identical config and seed produce byte-identical report files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analytics import finite_dim_lst_detailed, moment_report
from .busy_period import count_pmf
from .crossing import crossing_report
from .distributions import (
    Fixed,
    ModelParams,
    Stationary,
    dist_from_config,
    dist_to_config,
    init_from_config,
    init_to_config,
)
from .errors import DomainError, NumericalError, QelError, TruncationError
from .fclt import ScalingSequence, condition_check, scaled_externality_experiment
from .rng import make_stream, split_streams
from .simulate import sample_externality_paths

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_TRUNCATION = 4


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class RunConfig:
    subcommand: str
    lam: float | None = None
    dist: dict | None = None
    init: dict | None = None
    x_grid: list = field(default_factory=list)
    alpha_grid: list = field(default_factory=list)
    y: float | None = None
    s_max: int = 200
    reps: int = 1
    seed: int | None = None
    sequence: list = field(default_factory=list)
    v: float | None = None
    threads: int = 1
    out: str | None = None
    fmt: str = "json"

    def resolved(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "version": __version__,
            "subcommand": self.subcommand,
            "lambda": self.lam,
            "dist": self.dist,
            "init": self.init,
            "x_grid": list(self.x_grid),
            "alpha_grid": list(self.alpha_grid),
            "y": self.y,
            "s_max": self.s_max,
            "reps": self.reps,
            "seed": self.seed,
            "sequence": self.sequence,
            "v": self.v,
            # threads is an execution parameter, not part of the semantic
            # config: outputs are identical for any thread count
            "format": self.fmt,
        }


_NEEDS_SAMPLER = {"simulate", "fclt"}


def validate(config: RunConfig) -> list[str]:
    """Return every config violation (an empty list means runnable)."""
    problems: list[str] = []
    if config.subcommand not in {
        "busy-period",
        "moments",
        "lst",
        "simulate",
        "crossing",
        "fclt",
    }:
        problems.append(f"unknown subcommand {config.subcommand!r}")
        return problems

    def check_model(lam, dist_cfg):
        if lam is None or dist_cfg is None:
            problems.append("a model requires --lambda and --dist")
            return
        if lam <= 0:
            problems.append(f"lambda must be > 0, got {lam}")
            return
        try:
            dist = dist_from_config(dist_cfg)
        except (DomainError, KeyError, TypeError) as exc:
            problems.append(f"bad dist config: {exc}")
            return
        rho = lam * dist.moment(1)
        if rho >= 1:
            problems.append(f"rho must be < 1, got {_fmt(rho)}")

    if config.subcommand == "fclt":
        if len(config.sequence) < 3:
            problems.append("fclt needs a --sequence of at least 3 entries")
        for entry in config.sequence:
            check_model(entry.get("lambda"), entry.get("dist"))
        if config.v is None or config.v < 0:
            problems.append("fclt needs --v >= 0")
    else:
        check_model(config.lam, config.dist)

    if config.subcommand in {"moments", "lst", "simulate", "fclt"}:
        if not config.x_grid:
            problems.append("x grid must be nonempty")
        elif any(b <= a for a, b in zip(config.x_grid, config.x_grid[1:])):
            problems.append("x grid must be strictly increasing")
        elif any(x < 0 for x in config.x_grid):
            problems.append("x grid entries must be nonnegative")
    if config.subcommand == "lst":
        if not config.alpha_grid:
            problems.append("alpha grid must be nonempty")
        elif len(config.alpha_grid) != len(config.x_grid):
            problems.append("alpha grid and x grid must have equal length")
        elif any(a <= 0 for a in config.alpha_grid):
            problems.append("alpha grid entries must be positive")
    if config.subcommand == "crossing":
        if config.y is None or config.y <= 0:
            problems.append("crossing needs --y > 0")
    if config.reps < 1:
        problems.append(f"reps must be >= 1, got {config.reps}")
    if config.s_max < 1:
        problems.append(f"s-max must be >= 1, got {config.s_max}")
    if config.threads < 1:
        problems.append(f"threads must be >= 1, got {config.threads}")
    if config.subcommand in _NEEDS_SAMPLER and config.seed is None:
        problems.append(
            "a seed is required when sampling (use --seed or QEL_SEED)"
        )
    return problems


def _model(config: RunConfig) -> ModelParams:
    dist = dist_from_config(config.dist)
    init = init_from_config(config.init) if config.init else Fixed(0.0)
    return ModelParams(config.lam, dist, init)


def _emit(config: RunConfig, text: str) -> None:
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_report(config: RunConfig, payload: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "config": config.resolved()}
    doc.update(payload)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_report(config: RunConfig, header: list[str], rows) -> str:
    lines = [
        "# config: " + json.dumps(config.resolved(), sort_keys=True),
        ",".join(header),
    ]
    for row in rows:
        lines.append(",".join(_fmt(c) if isinstance(c, float) else str(c) for c in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommand runners
# ---------------------------------------------------------------------------


def _run_busy_period(config: RunConfig) -> None:
    params = _model(config)
    law = count_pmf(params.lam, params.dist, config.s_max)
    if config.fmt == "csv":
        rows = [(int(s), float(p)) for s, p in zip(law.support, law.pmf)]
        _emit(config, _csv_report(config, ["s", "N_s"], rows))
        moments = {"eta": list(law.moments), "tail_mass": law.tail_mass}
        if config.out:
            sys.stdout.write(json.dumps(moments, sort_keys=True) + "\n")
    else:
        _emit(
            config,
            _json_report(
                config,
                {
                    "pmf": [float(p) for p in law.pmf],
                    "eta": list(law.moments),
                    "tail_mass": law.tail_mass,
                },
            ),
        )


def _run_moments(config: RunConfig) -> None:
    params = _model(config)
    x1 = config.x_grid[0]
    x2 = config.x_grid[1] - x1 if len(config.x_grid) > 1 else 0.0
    rep = moment_report(params.lam, params.dist, params.init, x1, x2)
    payload = {
        "mean": rep.mean,
        "variance": rep.variance,
        "covariance": rep.covariance,
        "correlation": None if math.isnan(rep.correlation) else rep.correlation,
    }
    _emit(config, _json_report(config, payload))


def _run_lst(config: RunConfig) -> None:
    params = _model(config)
    xs = np.diff(np.concatenate([[0.0], config.x_grid]))
    value, err = finite_dim_lst_detailed(
        params.lam, params.dist, params.init, xs, config.alpha_grid
    )
    _emit(config, _json_report(config, {"lst_value": value, "quadrature_error": err}))


def _simulate_chunk(args):
    lam, dist_cfg, init_cfg, x_grid, reps, seed_state = args
    params = ModelParams(
        lam,
        dist_from_config(dist_cfg),
        init_from_config(init_cfg) if init_cfg else Fixed(0.0),
    )
    rng = np.random.Generator(np.random.Philox(seed_state))
    return sample_externality_paths(params, x_grid, reps, rng)


def _run_simulate(config: RunConfig) -> None:
    chunk = 10_000
    n_chunks = (config.reps + chunk - 1) // chunk
    seeds = np.random.SeedSequence(config.seed).spawn(n_chunks)
    jobs = []
    done = 0
    for i in range(n_chunks):
        size = min(chunk, config.reps - done)
        done += size
        jobs.append((config.lam, config.dist, config.init, config.x_grid, size, seeds[i]))
    if config.threads > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(config.threads) as pool:
            parts = list(pool.map(_simulate_chunk, jobs))
    else:
        parts = [_simulate_chunk(job) for job in jobs]
    values = np.concatenate(parts, axis=0)
    header = ["rep"] + [f"E_x{_fmt(float(x))}" for x in config.x_grid]
    rows = [(i, *map(float, row)) for i, row in enumerate(values)]
    if config.fmt == "csv":
        _emit(config, _csv_report(config, header, rows))
    else:
        _emit(
            config,
            _json_report(
                config,
                {
                    "x_grid": list(config.x_grid),
                    "externalities": [[float(v) for v in row] for row in values],
                },
            ),
        )


def _run_crossing(config: RunConfig) -> None:
    params = _model(config)
    law = count_pmf(params.lam, params.dist, config.s_max)
    rep = crossing_report(law, config.y)
    payload = {
        "y": rep.y,
        "psi0": rep.psi0,
        "mean_crossing": rep.mean_crossing,
        "var_upsilon": rep.var_upsilon,
        "var_crossing": rep.var_crossing,
    }
    _emit(config, _json_report(config, payload))


def _run_fclt(config: RunConfig) -> None:
    lams = tuple(float(e["lambda"]) for e in config.sequence)
    dists = tuple(dist_from_config(e["dist"]) for e in config.sequence)
    seq = ScalingSequence(lams, dists, v=config.v)
    cond = condition_check(seq)
    rows = []
    streams = split_streams(config.seed, len(seq))
    x_probe = config.x_grid[-1]
    for n in range(len(seq)):
        ex = scaled_externality_experiment(
            seq, config.x_grid, n, config.reps, streams[n]
        )
        rows.append(
            (
                n,
                float(lams[n]),
                float(cond.rhos[n]),
                float(ex.ks_stat[x_probe]),
                float(ex.ks_pvalue[x_probe]),
                float(cond.ratio_iii[n]),
            )
        )
    if config.fmt == "csv":
        _emit(
            config,
            _csv_report(
                config, ["n", "lambda", "rho", "ks_stat", "ks_p", "ratio_iii"], rows
            ),
        )
    else:
        payload = {
            "rows": [
                dict(
                    zip(
                        ["n", "lambda", "rho", "ks_stat", "ks_p", "ratio_iii"],
                        row,
                    )
                )
                for row in rows
            ],
            "set1_flag": cond.set1_flag,
            "set2_flag": cond.set2_flag,
        }
        _emit(config, _json_report(config, payload))


_RUNNERS = {
    "busy-period": _run_busy_period,
    "moments": _run_moments,
    "lst": _run_lst,
    "simulate": _run_simulate,
    "crossing": _run_crossing,
    "fclt": _run_fclt,
}


def run(config: RunConfig) -> int:
    problems = validate(config)
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        _RUNNERS[config.subcommand](config)
    except TruncationError as exc:
        print(f"truncation abort: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QelError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_model_args(p):
    p.add_argument("--lambda", dest="lam", type=float, help="arrival rate")
    p.add_argument("--dist", type=json.loads, help="service distribution JSON")
    p.add_argument("--v", type=float, help="fixed initial workload")
    p.add_argument(
        "--v-dist",
        choices=["stationary"],
        help="random initial workload variant",
    )


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qel",
        description="Externalities of an extra customer in the FCFS M/G/1 queue",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("busy-period", help="busy-period count pmf and moments")
    _add_model_args(p)
    p.add_argument("--s-max", type=int, default=200)

    p = sub.add_parser("moments", help="closed-form externality moments")
    _add_model_args(p)
    p.add_argument("--x", type=_floats, default=[], help="x grid, comma-separated")

    p = sub.add_parser("lst", help="finite-dimensional LST")
    _add_model_args(p)
    p.add_argument("--x", type=_floats, default=[])
    p.add_argument("--alpha", type=_floats, default=[])

    p = sub.add_parser("simulate", help="simulate externality replications")
    _add_model_args(p)
    p.add_argument("--x", type=_floats, default=[])
    p.add_argument("--reps", type=int, default=1)

    p = sub.add_parser("crossing", help="derivative-process crossing times")
    _add_model_args(p)
    p.add_argument("--y", type=float)
    p.add_argument("--s-max", type=int, default=200)

    p = sub.add_parser("fclt", help="Gaussian-limit scaling experiment")
    p.add_argument("--sequence", type=json.loads, help="JSON list of {lambda, dist}")
    p.add_argument("--v", type=float)
    p.add_argument("--x-grid", type=_floats, default=[])
    p.add_argument("--reps", type=int, default=1)

    for name, sp in sub.choices.items():
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument(
            "--format",
            dest="fmt",
            choices=["csv", "json"],
            default="csv" if name in {"busy-period", "simulate", "fclt"} else "json",
        )
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    init = None
    if getattr(args, "v_dist", None) == "stationary":
        init = init_to_config(Stationary())
    elif getattr(args, "v", None) is not None and args.subcommand != "fclt":
        init = init_to_config(Fixed(args.v))
    seed = args.seed
    if seed is None and os.environ.get("QEL_SEED"):
        seed = int(os.environ["QEL_SEED"])
    if seed is None and args.subcommand in _NEEDS_SAMPLER:
        seed = int(np.random.SeedSequence().entropy % (2**63))
        print(f"auto-generated seed: {seed}", file=sys.stderr)
    return RunConfig(
        subcommand=args.subcommand,
        lam=getattr(args, "lam", None),
        dist=getattr(args, "dist", None),
        init=init,
        x_grid=list(getattr(args, "x", []) or getattr(args, "x_grid", []) or []),
        alpha_grid=list(getattr(args, "alpha", []) or []),
        y=getattr(args, "y", None),
        s_max=getattr(args, "s_max", 200),
        reps=getattr(args, "reps", 1),
        seed=seed,
        sequence=list(getattr(args, "sequence", []) or []),
        v=getattr(args, "v", None),
        threads=args.threads,
        out=args.out,
        fmt=args.fmt,
    )


def config_from_json(doc: dict) -> RunConfig:
    """Rebuild a RunConfig from an emitted resolved-config document."""
    return RunConfig(
        subcommand=doc["subcommand"],
        lam=doc.get("lambda"),
        dist=doc.get("dist"),
        init=doc.get("init"),
        x_grid=list(doc.get("x_grid") or []),
        alpha_grid=list(doc.get("alpha_grid") or []),
        y=doc.get("y"),
        s_max=doc.get("s_max", 200),
        reps=doc.get("reps", 1),
        seed=doc.get("seed"),
        sequence=list(doc.get("sequence") or []),
        v=doc.get("v"),
        threads=doc.get("threads", 1),
        out=doc.get("out"),
        fmt=doc.get("format", "json"),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
