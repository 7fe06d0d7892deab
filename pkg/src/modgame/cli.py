"""Command-line frontend: rate queries, simulations, presets, single-trial inspection."""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

import numpy as np

from ._version import __version__
from . import harness
from .errors import ProtocolInvariantViolation
from .protocol import (
    ProtocolConfig,
    decode_central,
    encode_local,
    pack_transcript,
    plan_budget,
)
from .multi import allocate_coordinate_budgets, decode_central_multi, encode_local_multi
from .rates import multivariate_rate, univariate_rate


def parse_sigma(text: str) -> float:
    """Accept a decimal or a dyadic literal like 2^-8."""
    m = re.fullmatch(r"2\^(-?\d+)", text.strip())
    if m:
        return 2.0 ** int(m.group(1))
    return float(text)


def parse_budgets(text: str):
    return tuple(int(p) for p in text.split(",") if p.strip())


def _add_common_sim_flags(p):
    p.add_argument("--workers", type=int, default=None,
                   help="worker process cap (default: MODGAME_WORKERS or 1)")
    plot = p.add_mutually_exclusive_group()
    plot.add_argument("--plot", dest="plot", action="store_true", default=True,
                      help="render a figure next to the output (default)")
    plot.add_argument("--no-plot", dest="plot", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="modgame",
        description="Communication-constrained distributed Gaussian mean estimation.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="minimax rate and phase for a configuration")
    p.add_argument("--sigma", required=True, help="noise level (decimal or 2^-k)")
    p.add_argument("--machines", type=int, required=True)
    p.add_argument("--total-bits", type=int, default=None,
                   help="total budget B (uniform split; default: sum of --budgets)")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--budgets", default=None, help="comma-separated per-machine bits")

    p = sub.add_parser("simulate", help="run one Monte Carlo sweep")
    p.add_argument("--config", default=None, help="JSON experiment file (overrides flags)")
    p.add_argument("--estimator", choices=harness.ESTIMATORS)
    p.add_argument("--sigma", help="noise level (decimal or 2^-k)")
    p.add_argument("--machines", type=int)
    p.add_argument("--bits", type=int, help="uniform per-machine budget")
    p.add_argument("--budgets", help="comma-separated per-machine bits")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=harness.DEFAULT_SEED)
    p.add_argument("--theta-grid", default=None,
                   help="comma-separated grid (default: 33-point grid, 9-point for d>1)")
    p.add_argument("--out", required=True, help="output file path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--label", default="")
    _add_common_sim_flags(p)

    p = sub.add_parser("preset", help="reproduce a reference experiment's data")
    p.add_argument("--name", required=True, choices=("fig5a", "fig5b", "fig5c", "fig6"))
    p.add_argument("--out", required=True, help="output directory")
    _add_common_sim_flags(p)

    p = sub.add_parser("inspect", help="run one trial and dump transcripts and intervals")
    p.add_argument("--sigma", required=True, help="noise level (decimal or 2^-k)")
    p.add_argument("--budgets", required=True, help="comma-separated per-machine bits")
    p.add_argument("--theta", required=True, type=float)
    p.add_argument("--seed", type=int, default=harness.DEFAULT_SEED)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--noise-free", action="store_true",
                   help="feed every machine x = theta exactly")
    return ap


def cmd_rate(args) -> int:
    sigma = parse_sigma(args.sigma)
    if args.dim > 1 or args.budgets:
        if args.budgets:
            budgets = parse_budgets(args.budgets)
        else:
            if args.total_bits is None or args.total_bits % args.machines:
                raise ValueError("give --budgets, or a --total-bits divisible by --machines")
            budgets = (args.total_bits // args.machines,) * args.machines
        rp = multivariate_rate(budgets, args.dim, sigma)
    else:
        if args.total_bits is None:
            raise ValueError("rate needs --total-bits (or --budgets)")
        rp = univariate_rate(args.total_bits, args.machines, sigma)
    print(f"phase={rp.phase} rate={rp.rate!r}")
    return 0


def _spec_from_args(args) -> harness.ExperimentSpec:
    if args.config:
        return harness.load_spec(args.config)
    missing = [k for k in ("estimator", "sigma", "machines") if getattr(args, k) is None]
    if missing:
        raise ValueError(f"simulate needs --config or --{', --'.join(missing)}")
    if (args.bits is None) == (args.budgets is None):
        raise ValueError("give exactly one of --bits or --budgets")
    budgets = (parse_budgets(args.budgets) if args.budgets
               else (args.bits,) * args.machines)
    if len(budgets) != args.machines:
        raise ValueError("--budgets length must equal --machines")
    cfg = ProtocolConfig(parse_sigma(args.sigma), budgets, args.dim)
    if args.theta_grid:
        grid = tuple(float(t) for t in args.theta_grid.split(","))
    else:
        grid = (harness.DEFAULT_THETA_GRID_1D if args.dim == 1
                else harness.DEFAULT_THETA_GRID_DIAG)
    reps = args.reps
    if reps is None:
        reps = harness.DEFAULT_REPS_1D if args.dim == 1 else harness.DEFAULT_REPS_MULTI
    return harness.ExperimentSpec(args.estimator, cfg, grid, reps, args.seed,
                                  label=args.label)


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    result = harness.run_experiment(spec, workers=args.workers)
    if args.format == "csv":
        payload = harness.results_to_csv([result])
    else:
        payload = harness.results_to_json([result])
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(payload)
    print(f"wrote {args.out}")
    if args.plot:
        from .plotting import render_experiment

        png = os.path.splitext(args.out)[0] + ".png"
        render_experiment(result, png)
        print(f"wrote {png}")
    return 0


def cmd_preset(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    results = harness.run_preset(args.name, workers=args.workers)
    csv_path = os.path.join(args.out, f"{args.name}.csv")
    json_path = os.path.join(args.out, f"{args.name}.json")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(harness.results_to_csv(results))
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(harness.results_to_json(results))
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    if args.plot:
        from .plotting import render_sweep

        png = os.path.join(args.out, f"{args.name}.png")
        render_sweep(results, png, name=args.name)
        print(f"wrote {png}")
    return 0


def cmd_inspect(args) -> int:
    sigma = parse_sigma(args.sigma)
    budgets = parse_budgets(args.budgets)
    cfg = ProtocolConfig(sigma, budgets, args.dim)
    d = args.dim
    theta_vec = np.full(d, args.theta)
    if args.noise_free:
        x = np.tile(theta_vec, (cfg.machines, 1))
    else:
        x = harness.trial_samples(args.seed, 0, 0, theta_vec, sigma, cfg.machines)

    if d == 1:
        plan = plan_budget(cfg)
        transcripts = [encode_local(plan, i + 1, float(x[i, 0]))
                       for i in range(cfg.machines)]
        print(f"case={plan.case} stage={plan.stage} "
              f"crude_precision={plan.crude_precision} n={plan.n} log_n={plan.log_n}")
        for t in transcripts:
            print(f"machine {t.machine_index}: {pack_transcript(t).hex()}")
        res = decode_central(plan, transcripts)
        print(f"I1={res.i1} I2={res.i2} branch={res.branch}")
        print(f"estimate={res.estimate!r}")
    else:
        matrix = allocate_coordinate_budgets(budgets, d)
        transcripts = [encode_local_multi(matrix, cfg, i + 1, x[i])
                       for i in range(cfg.machines)]
        for t in transcripts:
            print(f"machine {t.machine_index}: {pack_transcript(t).hex()}")
        est, _ = decode_central_multi(matrix, cfg, transcripts)
        print(f"estimate={est.tolist()!r}")
    return 0


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse uses code 2 for usage errors
        return int(exc.code or 0)
    try:
        if args.command == "rate":
            return cmd_rate(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "preset":
            return cmd_preset(args)
        if args.command == "inspect":
            return cmd_inspect(args)
        raise ValueError(f"unknown command {args.command!r}")
    except ProtocolInvariantViolation as e:
        print(f"error: protocol-invariant-violation: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as e:
        print(f"error: usage: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
