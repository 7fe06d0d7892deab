"""Seeded Monte Carlo harness: sup-over-theta MSE for (estimator, config) pairs.

Reproducibility contract: the samples of trial (theta_index, rep) come from
a counter-based Philox stream keyed by (seed, theta_index, rep); machine i
reads positions i*d..(i+1)*d of that stream.  Gaussians are produced by
inverse-CDF of 53-bit uniforms, so trials are order-independent and results
are bit-identical for any chunking or worker count.  Aggregation runs in
(theta_index, replication) order with a chunk size that depends only on the
problem shape.
"""

from __future__ import annotations

import functools
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from ._version import __version__
from .baselines import quantize_estimate_vec, sample_mean_vec
from .multi import allocate_coordinate_budgets, coordinate_subproblem
from .protocol import ProtocolConfig, decode_batch, encode_batch, plan_budget
from .rates import multivariate_rate, univariate_rate

ESTIMATORS = ("modgame", "multi_modgame", "naive_quant", "sample_mean")

RNG_DESCRIPTION = (
    "philox4x64 keyed [seed, (theta_index<<32)|rep]; machine i reads raw stream "
    "positions i*d..(i+1)*d; u = ((raw>>11)+0.5)/2^53; x = theta + sigma*ndtri(u)"
)

DEFAULT_SEED = 1729
DEFAULT_THETA_GRID_1D = tuple(j / 32 for j in range(33))
DEFAULT_THETA_GRID_DIAG = tuple(j / 8 for j in range(9))
DEFAULT_REPS_1D = 10_000
DEFAULT_REPS_MULTI = 1_000


@dataclass(frozen=True)
class ExperimentSpec:
    """One Monte Carlo sweep: estimator, instance, theta grid, replications, seed.

    ``theta_grid`` holds scalars; in d > 1 dimensions entry t means the
    diagonal parameter t * (1, ..., 1).
    """

    estimator: str
    config: ProtocolConfig
    theta_grid: tuple
    replications: int
    seed: int
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "theta_grid", tuple(float(t) for t in self.theta_grid))
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if not self.theta_grid:
            raise ValueError("theta grid must be nonempty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.estimator == "naive_quant":
            if self.config.dimension != 1:
                raise ValueError("naive_quant is defined for dimension 1")
            if len(set(self.config.budgets)) != 1:
                raise ValueError("naive_quant requires a uniform per-machine budget")
        if self.estimator == "modgame" and self.config.dimension != 1:
            raise ValueError("modgame is univariate; use multi_modgame for d > 1")


@dataclass(frozen=True)
class ThetaStat:
    theta: float
    mse: float
    stderr: float  # NaN when replications == 1


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    per_theta: tuple
    max_mse: float
    mean_mse: float
    theory_rate: float
    theory_phase: str
    metadata: dict = field(compare=False)


def theory_for(config: ProtocolConfig):
    if config.dimension == 1:
        rp = univariate_rate(config.total_bits, config.machines, config.sigma)
    else:
        rp = multivariate_rate(config.budgets, config.dimension, config.sigma)
    return rp.rate, rp.phase


# ---------------------------------------------------------------------------
# sampling


def trial_uniforms(seed: int, theta_index: int, rep: int, count: int) -> np.ndarray:
    """Open-interval (0, 1) uniforms at 53-bit resolution for one trial."""
    if not (0 <= theta_index < 2**32 and 0 <= rep < 2**32):
        raise ValueError("theta_index and rep must fit in 32 bits")
    bg = Philox(key=[int(seed), (theta_index << 32) | rep])
    raw = bg.random_raw(count)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def trial_samples(
    seed: int, theta_index: int, rep: int, theta_vec: np.ndarray, sigma: float, machines: int
) -> np.ndarray:
    """(m, d) Gaussian samples for one trial, machine-major stream order."""
    d = theta_vec.shape[0]
    u = trial_uniforms(seed, theta_index, rep, machines * d)
    return theta_vec[None, :] + sigma * ndtri(u).reshape(machines, d)


# ---------------------------------------------------------------------------
# estimator evaluation (batched over replications)


@functools.lru_cache(maxsize=256)
def _cached_plan(sigma: float, budgets: tuple):
    return plan_budget(ProtocolConfig(sigma, budgets, 1))


@functools.lru_cache(maxsize=64)
def _cached_multi_prep(sigma: float, budgets: tuple, d: int):
    """Per-coordinate (original sample columns, univariate plan) for d > 1."""
    matrix = allocate_coordinate_budgets(list(budgets), d)
    subs = []
    for k in range(1, d + 1):
        positions, sub_budgets = coordinate_subproblem(matrix, k)
        if not positions:
            subs.append((None, None))
            continue
        cols = np.asarray([matrix.machine_permutation[p] for p in positions], dtype=np.int64)
        subs.append((cols, _cached_plan(sigma, sub_budgets)))
    return subs


def _squared_errors(estimator: str, config: ProtocolConfig, x: np.ndarray, theta_vec: np.ndarray):
    """Per-replication squared errors for samples x of shape (R, m, d)."""
    if estimator == "sample_mean":
        est = sample_mean_vec(x)  # (R, d)
        return ((est - theta_vec[None, :]) ** 2).sum(axis=1)
    if estimator == "naive_quant":
        est = quantize_estimate_vec(config.budgets[0], x[:, :, 0])
        return (est - theta_vec[0]) ** 2
    if estimator == "modgame":
        plan = _cached_plan(config.sigma, config.budgets)
        est, _ = decode_batch(plan, encode_batch(plan, x[:, :, 0]))
        return (est - theta_vec[0]) ** 2
    if estimator == "multi_modgame":
        subs = _cached_multi_prep(config.sigma, config.budgets, config.dimension)
        total = np.zeros(x.shape[0])
        for k, (cols, plan) in enumerate(subs):
            if plan is None:
                est_k = np.full(x.shape[0], 0.5)
            else:
                est_k, _ = decode_batch(plan, encode_batch(plan, x[:, cols, k]))
            total += (est_k - theta_vec[k]) ** 2
        return total
    raise ValueError(f"unknown estimator {estimator!r}")


def run_trial(spec: ExperimentSpec, theta_index: int, replication_index: int) -> float:
    """Squared error of a single trial; bit-reproducible from its indices."""
    config = spec.config
    d = config.dimension
    theta_vec = np.full(d, spec.theta_grid[theta_index])
    x = trial_samples(
        spec.seed, theta_index, replication_index, theta_vec, config.sigma, config.machines
    )
    sq = _squared_errors(spec.estimator, config, x[None, :, :], theta_vec)
    return float(sq[0])


def _chunk_size(machines: int, d: int) -> int:
    # depends only on the problem shape so chunking never affects results
    return max(1, min(8192, int(25_000_000 // max(1, machines * d))))


def _theta_task(args):
    """Sums of squared errors (and their squares) per estimator at one theta."""
    (sigma, budgets, d, theta, theta_index, reps, seed, estimators) = args
    config = ProtocolConfig(sigma, budgets, d)
    theta_vec = np.full(d, theta)
    m = config.machines
    chunk = _chunk_size(m, d)
    sums = {e: 0.0 for e in estimators}
    sumsqs = {e: 0.0 for e in estimators}
    buf = np.empty((chunk, m * d))
    for start in range(0, reps, chunk):
        stop = min(start + chunk, reps)
        rows = stop - start
        for r in range(start, stop):
            buf[r - start] = trial_uniforms(seed, theta_index, r, m * d)
        ndtri(buf[:rows], out=buf[:rows])
        x = buf[:rows].reshape(rows, m, d) * sigma + theta_vec[None, None, :]
        for e in estimators:
            sq = _squared_errors(e, config, x, theta_vec)
            sums[e] += float(sq.sum())
            sumsqs[e] += float((sq * sq).sum())
    return theta_index, sums, sumsqs


def _assemble(spec: ExperimentSpec, sums, sumsqs, wall: float) -> ExperimentResult:
    reps = spec.replications
    stats = []
    for i, theta in enumerate(spec.theta_grid):
        mse = sums[i] / reps
        if reps > 1:
            var = max(sumsqs[i] - sums[i] ** 2 / reps, 0.0) / (reps - 1)
            stderr = float(np.sqrt(var / reps))
        else:
            stderr = float("nan")
        stats.append(ThetaStat(theta=theta, mse=mse, stderr=stderr))
    rate, phase = theory_for(spec.config)
    meta = {
        "library_version": __version__,
        "rng": RNG_DESCRIPTION,
        "wall_time_s": wall,
        "spec": spec_to_dict(spec),
    }
    return ExperimentResult(
        spec=spec,
        per_theta=tuple(stats),
        max_mse=max(s.mse for s in stats),
        mean_mse=sum(s.mse for s in stats) / len(stats),
        theory_rate=rate,
        theory_phase=phase,
        metadata=meta,
    )


def default_workers() -> int:
    env = os.environ.get("MODGAME_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def run_comparison(specs, workers: int = None):
    """Run several estimators over shared (sigma, budgets, grid, reps, seed).

    The RNG keying does not involve the estimator, so estimators with equal
    specs see identical samples; evaluating them on one drawn batch halves
    the sampling cost and pairs the comparisons.
    """
    specs = list(specs)
    if workers is None:
        workers = default_workers()
    core = {
        (s.config.sigma, s.config.budgets, s.config.dimension, s.theta_grid,
         s.replications, s.seed)
        for s in specs
    }
    if len(core) != 1:
        raise ValueError("run_comparison requires specs sharing config, grid, reps, seed")
    (sigma, budgets, d, grid, reps, seed) = next(iter(core))
    estimators = tuple(s.estimator for s in specs)
    if len(set(estimators)) != len(estimators):
        raise ValueError("duplicate estimator in comparison")
    tasks = [
        (sigma, budgets, d, theta, ti, reps, seed, estimators)
        for ti, theta in enumerate(grid)
    ]
    t0 = time.time()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_theta_task, tasks))
    else:
        raw = [_theta_task(t) for t in tasks]
    raw.sort(key=lambda r: r[0])
    wall = time.time() - t0
    out = []
    for s in specs:
        sums = [r[1][s.estimator] for r in raw]
        sumsqs = [r[2][s.estimator] for r in raw]
        out.append(_assemble(s, sums, sumsqs, wall))
    return out


def run_experiment(spec: ExperimentSpec, workers: int = None) -> ExperimentResult:
    """Monte Carlo MSE over the theta grid for one spec."""
    return run_comparison([spec], workers=workers)[0]


# ---------------------------------------------------------------------------
# presets (the four reference experiments)


def _uniform_config(sigma: float, machines: int, bits: int, d: int = 1) -> ProtocolConfig:
    return ProtocolConfig(sigma, (bits,) * machines, d)


def preset(name: str):
    """Materialized spec lists for the reference sweeps.

    fig5a: sigma=2^-8, m=100, b=1..7, three univariate estimators.
    fig5b: sigma=2^-8, b=5, m=10*2^j for j=0..12.
    fig5c: b=5, m=100, sigma=2^-1..2^-13.
    fig6:  d=50, sigma=2^-8, m=25, b=2..21, multivariate vs sample mean.
    """
    uni = ("modgame", "naive_quant", "sample_mean")
    specs = []
    if name == "fig5a":
        for b in range(1, 8):
            cfg = _uniform_config(2.0**-8, 100, b)
            for e in uni:
                specs.append(ExperimentSpec(e, cfg, DEFAULT_THETA_GRID_1D,
                                            DEFAULT_REPS_1D, DEFAULT_SEED, label=name))
    elif name == "fig5b":
        for j in range(13):
            cfg = _uniform_config(2.0**-8, 10 * 2**j, 5)
            for e in uni:
                specs.append(ExperimentSpec(e, cfg, DEFAULT_THETA_GRID_1D,
                                            DEFAULT_REPS_1D, DEFAULT_SEED, label=name))
    elif name == "fig5c":
        for k in range(1, 14):
            cfg = _uniform_config(2.0**-k, 100, 5)
            for e in uni:
                specs.append(ExperimentSpec(e, cfg, DEFAULT_THETA_GRID_1D,
                                            DEFAULT_REPS_1D, DEFAULT_SEED, label=name))
    elif name == "fig6":
        for b in range(2, 22):
            cfg = _uniform_config(2.0**-8, 25, b, d=50)
            for e in ("multi_modgame", "sample_mean"):
                specs.append(ExperimentSpec(e, cfg, DEFAULT_THETA_GRID_DIAG,
                                            DEFAULT_REPS_MULTI, DEFAULT_SEED, label=name))
    else:
        raise ValueError(f"unknown preset {name!r}")
    return specs


def run_preset(name: str, workers: int = None):
    """Run a preset, sharing samples across the estimators of each config."""
    specs = preset(name)
    groups = {}
    for s in specs:
        key = (s.config.sigma, s.config.budgets, s.config.dimension)
        groups.setdefault(key, []).append(s)
    results = []
    for group in groups.values():
        results.extend(run_comparison(group, workers=workers))
    order = {id(s): i for i, s in enumerate(specs)}
    results.sort(key=lambda r: order[id(r.spec)])
    return results


# ---------------------------------------------------------------------------
# serialization


def budget_column(config: ProtocolConfig) -> str:
    """CSV 'b' column: the uniform budget, or a stable id of the budget list."""
    if len(set(config.budgets)) == 1:
        return str(config.budgets[0])
    digest = hashlib.sha1(",".join(map(str, config.budgets)).encode()).hexdigest()[:8]
    return f"id:{digest}"


CSV_HEADER = "estimator,d,sigma,m,b,theta,mse,stderr,theory_rate,phase"


def results_to_csv(results) -> str:
    """Delimited output, one row per (spec, theta); byte-stable for fixed seeds."""
    lines = [CSV_HEADER]
    for r in results:
        cfg = r.spec.config
        b = budget_column(cfg)
        for s in r.per_theta:
            lines.append(
                f"{r.spec.estimator},{cfg.dimension},{cfg.sigma!r},{cfg.machines},"
                f"{b},{s.theta!r},{s.mse!r},{s.stderr!r},{r.theory_rate!r},{r.theory_phase}"
            )
    return "\n".join(lines) + "\n"


def result_to_dict(r: ExperimentResult) -> dict:
    return {
        "spec": spec_to_dict(r.spec),
        "per_theta": [
            {"theta": s.theta, "mse": s.mse, "stderr": s.stderr} for s in r.per_theta
        ],
        "max_mse": r.max_mse,
        "mean_mse": r.mean_mse,
        "theory_rate": r.theory_rate,
        "theory_phase": r.theory_phase,
        "metadata": r.metadata,
    }


def results_to_json(results) -> str:
    return json.dumps([result_to_dict(r) for r in results], indent=2) + "\n"


def spec_to_dict(spec: ExperimentSpec) -> dict:
    return {
        "estimator": spec.estimator,
        "sigma": spec.config.sigma,
        "budgets": list(spec.config.budgets),
        "dim": spec.config.dimension,
        "theta_grid": list(spec.theta_grid),
        "replications": spec.replications,
        "seed": spec.seed,
        "label": spec.label,
    }


def spec_from_dict(doc: dict) -> ExperimentSpec:
    """Parse the experiment-config schema (see README: Experiment config files)."""
    budgets = doc.get("budgets")
    if budgets is None:
        budgets = [int(doc["bits"])] * int(doc["machines"])
    cfg = ProtocolConfig(float(doc["sigma"]), tuple(int(b) for b in budgets),
                         int(doc.get("dim", 1)))
    grid = doc.get("theta_grid")
    if grid is None:
        grid = DEFAULT_THETA_GRID_1D if cfg.dimension == 1 else DEFAULT_THETA_GRID_DIAG
    return ExperimentSpec(
        estimator=doc["estimator"],
        config=cfg,
        theta_grid=tuple(float(t) for t in grid),
        replications=int(doc.get("replications",
                                 DEFAULT_REPS_1D if cfg.dimension == 1 else DEFAULT_REPS_MULTI)),
        seed=int(doc.get("seed", DEFAULT_SEED)),
        label=str(doc.get("label", "")),
    )


def load_spec(path: str) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))
