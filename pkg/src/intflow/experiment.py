"""Gaussian-mixture experiments: flow visualisation, KSD sweep and the continuity check.

Each ``run_*`` function writes CSV, SVG and a flat ``metrics.json`` into the
configured output directory and returns the metrics dict. All randomness is
derived from ``cfg.seed`` so a rerun reproduces every CSV byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import svg
from .distributions import GaussianMixture, Perturbation, SampleSet, delta_p
from .errors import ConfigError, IntflowError
from .flow import apply_flow, clip_flow, continuity_residual, estimate_flow
from .griddiag import GridSpec, ScalarGrid, evaluate_on_grid, kde_difference, median_filter, pearson
from .ksd import CSV_HEADER as KSD_CSV_HEADER
from .ksd import ksd_ustat, median_bandwidth

log = logging.getLogger(__name__)

DEFAULT_MIXTURE = {
    "weights": [0.35, 0.35, 0.3],
    "means": [[-1.5, -0.5], [1.5, -0.5], [0.0, 1.6]],
    "covariances": [
        [[0.6, 0.15], [0.15, 0.4]],
        [[0.4, -0.1], [-0.1, 0.6]],
        [[0.5, 0.0], [0.0, 0.35]],
    ],
}

# mean displacement per unit epsilon, in units of the smallest component std; large
# enough that the KSD signal clears the U-statistic noise floor over the epsilon sweep
DEFAULT_SCALE_FACTOR = 10.0

FLOW_SCALE_NOTE = (
    "flow vectors come from the unnormalised estimator; epsilon is in the estimator's own scale"
)


def default_epsilons() -> list[float]:
    return np.logspace(-4, math.log10(3e-1), 15).tolist()


@dataclass
class ExperimentConfig:
    mixture: dict = field(default_factory=lambda: dict(DEFAULT_MIXTURE))
    perturbation_scale: float | None = None
    n_samples: int = 10_000
    n_perturbations: int = 10
    epsilons: list = field(default_factory=default_epsilons)
    clip_factor: float = 10.0
    kde_sigma: float = 0.2
    kde_step: float = 1e-4
    median_window: int = 3
    grid_nodes: int = 200
    max_arrows: int = 1000
    continuity_nodes: int = 200
    continuity_half_widths: float = 6.0
    pair_distance_floor: float = 1e-9
    seed: int = 0
    output_dir: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def fail(name, why):
            raise ConfigError(f"{name}: {why}")

        try:
            self.build_mixture()
        except (IntflowError, TypeError, ValueError, KeyError) as exc:
            fail("mixture", str(exc))
        if self.perturbation_scale is not None and not (
            isinstance(self.perturbation_scale, (int, float)) and math.isfinite(self.perturbation_scale)
            and self.perturbation_scale >= 0
        ):
            fail("perturbation_scale", "must be a finite non-negative number or null")
        for name in ("n_samples", "n_perturbations", "median_window", "grid_nodes", "max_arrows",
                     "continuity_nodes"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                fail(name, "must be a positive integer")
        if self.n_samples < 100:
            fail("n_samples", "must be at least 100")
        eps = self.epsilons
        if not isinstance(eps, (list, tuple)) or len(eps) == 0:
            fail("epsilons", "must be a non-empty list")
        if any(not isinstance(e, (int, float)) or not math.isfinite(e) or e <= 0 for e in eps):
            fail("epsilons", "every epsilon must be positive and finite")
        if any(b <= a for a, b in zip(eps, eps[1:])):
            fail("epsilons", "must be strictly ascending")
        for name in ("clip_factor", "kde_sigma", "kde_step", "continuity_half_widths"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
                fail(name, "must be a positive number")
        if self.median_window % 2 == 0 or self.median_window < 3:
            fail("median_window", "must be an odd integer >= 3")
        if not isinstance(self.pair_distance_floor, (int, float)) or self.pair_distance_floor < 0:
            fail("pair_distance_floor", "must be a non-negative number")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            fail("seed", "must be an unsigned 64-bit integer")

    def build_mixture(self) -> GaussianMixture:
        m = self.mixture
        return GaussianMixture(m["weights"], m["means"], m["covariances"])

    def perturbation(self, mix: GaussianMixture, stream: int, index: int = 0) -> Perturbation:
        scale = self.perturbation_scale
        if scale is None:
            scale = DEFAULT_SCALE_FACTOR * mix.min_std()
        return Perturbation.random(mix, seed=[self.seed, stream, index], scale=scale)

    def rng_seed(self, stream: int, index: int = 0) -> list[int]:
        return [self.seed, stream, index]


_CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a YAML key-value config; ``overrides`` with non-None values win."""
    data = {}
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a mapping")
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown config key")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**data)


# -- output helpers ----------------------------------------------------------------

def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output_dir: cannot create {out}: {exc.strerror}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output_dir: {out} is not writable")
    return out


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def write_metrics(path: Path, metrics: dict) -> None:
    flat = {k: (float(v) if not isinstance(v, (int, bool)) else v) for k, v in metrics.items()}
    _write(path, json.dumps(flat, indent=2, sort_keys=True) + "\n")


def write_metadata(path: Path, cfg: ExperimentConfig, notes: dict) -> None:
    data = {"config": asdict(cfg), "notes": notes}
    _write(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def _require_2d(mix: GaussianMixture) -> None:
    if mix.dim != 2:
        raise ConfigError(f"mixture: experiments need a 2-D mixture, got dimension {mix.dim}")


# -- figure 1 ---------------------------------------------------------------------

def run_fig1(cfg: ExperimentConfig) -> dict:
    mix = cfg.build_mixture()
    _require_2d(mix)
    out = _outdir(cfg)
    pert = cfg.perturbation(mix, stream=1)
    samples = SampleSet.draw(mix, pert, cfg.n_samples, cfg.rng_seed(2))
    raw = estimate_flow(samples, pair_distance_floor=cfg.pair_distance_floor)
    flow = clip_flow(raw, cfg.clip_factor)

    spec = GridSpec.covering(samples.points, 3 * cfg.kde_sigma, cfg.grid_nodes)
    dens = evaluate_on_grid(mix.density, spec)
    dp = evaluate_on_grid(lambda x: delta_p(mix, pert, x), spec)
    moved = apply_flow(samples.points, flow, cfg.kde_step)
    diff = kde_difference(samples.points, moved, cfg.kde_sigma, spec, cfg.kde_step)
    filtered = median_filter(diff, cfg.median_window)

    mask = dens.values > 1e-3 * dens.values.max()
    corr = pearson(filtered.values[mask], dp.values[mask])

    rng = np.random.default_rng(cfg.rng_seed(3))
    keep = np.sort(rng.choice(len(flow), size=min(cfg.max_arrows, len(flow)), replace=False))

    dens.to_csv(out / "fig1_density.csv")
    dp.to_csv(out / "fig1_delta_p.csv")
    flow.to_csv(out / "fig1_flow.csv")
    filtered.to_csv(out / "fig1_kde_difference.csv")
    _write(out / "fig1_density.svg", svg.heatmap(dens, "density p(x)"))
    _write(
        out / "fig1_flow.svg",
        svg.quiver(dp, flow.points[keep], flow.vectors[keep], "flow v(x) over delta p(x)"),
    )
    _write(
        out / "fig1_kde_difference.svg",
        svg.heatmap(filtered, "median-filtered KDE difference", diverging=True),
    )
    metrics = {
        "kde_delta_p_correlation": corr,
        "n_samples": len(samples),
        "n_clipped": int(flow.clipped.sum()),
        "skipped_pairs": raw.skipped_pairs,
        "perturbation_scale": pert.scale,
        "correlation_region_nodes": int(mask.sum()),
    }
    write_metrics(out / "fig1_metrics.json", metrics)
    write_metadata(out / "fig1_metadata.json", cfg, {
        "flow_scale": FLOW_SCALE_NOTE,
        "kde_difference": f"(kde(x + step v) - kde(x)) / step with step = {cfg.kde_step!r}",
        "arrows": f"{len(keep)} of {len(flow)} flow vectors drawn in fig1_flow.svg",
    })
    log.info("fig1: correlation %.4f", corr)
    return metrics


# -- figure 2 ---------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    ustat_original: float
    ustat_original_std: float
    ustat_flowed: float
    ustat_flowed_std: float
    ustat_over_eps_original: float
    ustat_over_eps_original_std: float
    ustat_over_eps_flowed: float
    ustat_over_eps_flowed_std: float


SWEEP_HEADER = [f.name for f in fields(SweepRow)]


def _std(a: np.ndarray) -> float:
    return float(np.std(a, ddof=1)) if len(a) > 1 else 0.0


def sweep_perturbation(cfg: ExperimentConfig, mix: GaussianMixture, index: int):
    """KSD of original and flowed samples at every epsilon for one seeded perturbation."""
    pert = cfg.perturbation(mix, stream=10, index=index)
    samples = SampleSet.draw(mix, pert, cfg.n_samples, cfg.rng_seed(11, index))
    flow = clip_flow(
        estimate_flow(samples, pair_distance_floor=cfg.pair_distance_floor), cfg.clip_factor
    )
    sigma = median_bandwidth(samples.points)
    orig, flowed = [], []
    for eps in cfg.epsilons:
        target = mix.shifted(pert.displacement, eps)
        orig.append(ksd_ustat(samples.points, target.grad_log_density, sigma))
        flowed.append(ksd_ustat(apply_flow(samples.points, flow, eps), target.grad_log_density, sigma))
    return orig, flowed


def run_fig2(cfg: ExperimentConfig) -> tuple[list[SweepRow], dict]:
    mix = cfg.build_mixture()
    out = _outdir(cfg)
    eps = np.asarray(cfg.epsilons, dtype=float)
    runs = [sweep_perturbation(cfg, mix, k) for k in range(cfg.n_perturbations)]
    u_orig = np.array([[r.ustat for r in o] for o, _ in runs])
    u_flow = np.array([[r.ustat for r in f] for _, f in runs])

    rows = []
    for e_idx, e in enumerate(eps):
        uo, uf = u_orig[:, e_idx], u_flow[:, e_idx]
        rows.append(SweepRow(
            float(e),
            float(uo.mean()), _std(uo),
            float(uf.mean()), _std(uf),
            float((uo / e).mean()), _std(uo / e),
            float((uf / e).mean()), _std(uf / e),
        ))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([repr(getattr(r, name)) for name in SWEEP_HEADER])
    _write(out / "fig2_sweep.csv", buf.getvalue())
    for series, idx in (("original", 0), ("flowed", 1)):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["perturbation", *KSD_CSV_HEADER])
        for k, run in enumerate(runs):
            for e, res in zip(eps, run[idx]):
                w.writerow([k, *res.csv_row(e)])
        _write(out / f"fig2_ksd_{series}.csv", buf.getvalue())
    _write(
        out / "fig2_ksd.svg",
        svg.line_plot(
            eps,
            {
                "original x: ustat / eps": [r.ustat_over_eps_original for r in rows],
                "flowed x + eps v: ustat / eps": [r.ustat_over_eps_flowed for r in rows],
            },
            "KSD U-statistic / epsilon",
        ),
    )
    metrics = {
        "n_samples": cfg.n_samples,
        "n_perturbations": cfg.n_perturbations,
        "n_epsilons": len(eps),
    }
    for r in rows:
        metrics[f"ustat_original@{r.epsilon:.3g}"] = r.ustat_original
        metrics[f"ustat_flowed@{r.epsilon:.3g}"] = r.ustat_flowed
    write_metrics(out / "fig2_metrics.json", metrics)
    write_metadata(out / "fig2_metadata.json", cfg, {
        "flow_scale": FLOW_SCALE_NOTE,
        "target": "mixture with means shifted by epsilon * perturbation displacement",
        "bandwidth": "median pairwise distance of the unflowed samples, fixed across epsilon",
    })
    return rows, metrics


# -- continuity -------------------------------------------------------------------

def continuity_grid(mix: GaussianMixture, nodes: int, half_widths: float) -> GridSpec:
    """Square grid covering ``half_widths`` standard deviations around every component."""
    std = np.sqrt(np.diagonal(mix.covariances, axis1=1, axis2=2))
    lo = (mix.means - half_widths * std).min(axis=0)
    hi = (mix.means + half_widths * std).max(axis=0)
    center = 0.5 * (lo + hi)
    half = 0.5 * float((hi - lo).max())
    return GridSpec.square(half, nodes, tuple(center.tolist()))


def run_continuity(cfg: ExperimentConfig) -> dict:
    mix = cfg.build_mixture()
    _require_2d(mix)
    out = _outdir(cfg)
    pert = cfg.perturbation(mix, stream=20)
    spec = continuity_grid(mix, cfg.continuity_nodes, cfg.continuity_half_widths)
    report = continuity_residual(mix, pert, spec)
    report.residual.to_csv(out / "continuity_residual.csv")
    _write(out / "continuity_residual.svg", svg.heatmap(report.residual, "delta p + div(v p)", diverging=True))
    metrics = {
        "relative_l2": report.relative_l2,
        "grid_nodes": cfg.continuity_nodes,
        "mask_cells": report.mask_cells,
        "perturbation_scale": pert.scale,
    }
    write_metrics(out / "continuity_metrics.json", metrics)
    return metrics
