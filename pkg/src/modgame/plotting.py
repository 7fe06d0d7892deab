"""Render result figures next to the delimited output (report convenience path)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_COLORS = {
    "modgame": "tab:red",
    "multi_modgame": "tab:red",
    "naive_quant": "tab:blue",
    "sample_mean": "black",
}

_SWEEP_AXES = {
    "fig5a": ("bits per machine b", lambda cfg: cfg.budgets[0], False),
    "fig5b": ("machines m", lambda cfg: cfg.machines, True),
    "fig5c": ("noise level sigma", lambda cfg: cfg.sigma, True),
    "fig6": ("bits per machine b", lambda cfg: cfg.budgets[0], False),
}


def render_sweep(results, path: str, name: str = None) -> str:
    """Max-over-grid MSE curves (log scale), one line per estimator."""
    name = name or (results[0].spec.label if results else "sweep")
    xlabel, key, logx = _SWEEP_AXES.get(name, ("configuration index", None, False))
    series = {}
    for i, r in enumerate(results):
        x = key(r.spec.config) if key else i
        series.setdefault(r.spec.estimator, []).append((x, r.max_mse))
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for est, pts in series.items():
        pts.sort()
        ax.plot(*zip(*pts), marker="o", ms=3.5,
                color=_COLORS.get(est, None), label=est)
    ax.set_yscale("log")
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("max-over-grid MSE")
    ax.set_title(name)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_experiment(result, path: str) -> str:
    """Per-theta MSE profile of a single experiment, with the theory rate line."""
    xs = [s.theta for s in result.per_theta]
    ys = [max(s.mse, 1e-300) for s in result.per_theta]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(xs, ys, marker="o", ms=3,
            color=_COLORS.get(result.spec.estimator, None),
            label=result.spec.estimator)
    if result.theory_rate > 0 and math.isfinite(result.theory_rate):
        ax.axhline(result.theory_rate, ls="--", lw=1, color="gray",
                   label=f"theory ({result.theory_phase.lower()})")
    ax.set_yscale("log")
    ax.set_xlabel("theta")
    ax.set_ylabel("MSE")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
