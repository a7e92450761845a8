"""Monte Carlo drivers behind the ``sweep``, ``compare`` and ``real`` commands."""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import estimation
from .errors import ConfigError
from .metrics import ExperimentReport, nmse_db, verify_density_bound
from .reconstruction import reconstruct
from .sampling import acquire, channel_supports, sampling_density, separate_baseline
from .spectral import FrequencyGrid, PsdSpec, partition_subbands, random_psd_spec, total_bandwidth
from .synthesis import (
    MixingMatrix,
    PhaseDraw,
    SignalEnsemble,
    derive_seed,
    mix,
    random_mixing_matrix,
    synthesize_latents,
)

log = logging.getLogger(__name__)

# key offsets under the trial seed
_SPEC_KEY, _MIX_KEY, _PHASE_KEY = 0, 1, 2


@dataclass
class ExperimentConfig:
    T: int = 512
    N: int = 8
    M: int | None = None
    ratios: list[float] = field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    seed: int = 0
    trials: int = 50
    max_blocks: int = 3
    level_range: list[float] = field(default_factory=lambda: [0.5, 2.0])
    width_range: list[int] = field(default_factory=lambda: [4, 32])
    fraction: float = estimation.DEFAULT_FRACTION
    variance: float | None = None
    out: str = "out"
    workers: int = 1
    corpus: str | None = None
    ablate_drop_subband: int | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> "ExperimentConfig":
        if int(self.T) != self.T or self.T < 4 or self.T % 2:
            raise ConfigError(f"T must be an even integer >= 4, got {self.T}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.N < 1:
            raise ConfigError("N must be >= 1")
        if self.M is not None and not 1 <= self.M <= self.N:
            raise ConfigError(f"M must lie in [1, N={self.N}], got {self.M}")
        if any(not 0 < r <= 1 for r in self.ratios):
            raise ConfigError(f"M/N ratios must lie in (0, 1], got {self.ratios}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.ablate_drop_subband is not None and self.ablate_drop_subband < 0:
            raise ConfigError("ablated subband index must be >= 0")
        return self

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**doc)

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def m_values(self) -> list[tuple[float, int]]:
        if self.M is not None:
            return [(self.M / self.N, self.M)]
        return [(r, max(1, int(round(r * self.N)))) for r in self.ratios]


@dataclass(frozen=True)
class Trial:
    specs: tuple[PsdSpec, ...]
    U: MixingMatrix
    A: SignalEnsemble
    X: SignalEnsemble
    seeds: dict


def generate_trial(cfg: ExperimentConfig, M: int, trial: int) -> Trial:
    """Random specs, mixing matrix and phases for one Monte Carlo trial."""
    trial_seed = derive_seed(cfg.seed, trial)
    grid = FrequencyGrid(cfg.T)
    specs = tuple(
        random_psd_spec(
            grid,
            derive_seed(trial_seed, _SPEC_KEY, m),
            cfg.max_blocks,
            tuple(cfg.level_range),
            tuple(cfg.width_range),
            index=m,
        )
        for m in range(M)
    )
    U = random_mixing_matrix(cfg.N, M, derive_seed(trial_seed, _MIX_KEY))
    A = synthesize_latents(specs, PhaseDraw.draw(M, cfg.T, derive_seed(trial_seed, _PHASE_KEY)))
    seeds = {"master": cfg.seed, "trial": trial, "trial_seed": trial_seed}
    return Trial(specs, U, A, mix(U, A), seeds)


def run_multiband(t: Trial, ablate: int | None = None, config: dict | None = None) -> ExperimentReport:
    plan = partition_subbands(t.specs)
    S = acquire(t.X, plan, t.U)
    if ablate is not None:
        if ablate >= len(plan):
            raise ConfigError(f"cannot drop subband {ablate}: plan has {len(plan)} subbands")
        S = S.drop_subband(ablate)
    Xh = reconstruct(S, plan, t.U, real=ablate is None)
    _, baseline = separate_baseline(t.U, t.specs)
    return ExperimentReport(
        T=plan.grid.T,
        N=t.U.N,
        M=t.U.M,
        bandwidth=total_bandwidth(t.specs),
        multiband_total_samples=len(S),
        nmse_db=nmse_db(t.X, Xh),
        baseline_total_samples=baseline,
        widths_divide_T=plan.widths_divide_T(),
        condition_numbers=Xh.meta["condition_numbers"],
        max_condition=Xh.meta["max_condition"],
        seeds=dict(t.seeds),
        config=config or {},
        ablated_subband=ablate,
    )


def run_separate(X: SignalEnsemble, U: MixingMatrix, specs: Sequence[PsdSpec]) -> tuple[int, SignalEnsemble, float]:
    """Each channel sampled alone at the Nyquist rate of its own support.

    Returns ``(total samples, reconstruction, max condition number)``.
    """
    supports = channel_supports(U, specs)
    one = MixingMatrix(np.ones((1, 1)))
    rows, total, worst = [], 0, 1.0
    for n, mask in enumerate(supports):
        if not mask.any():
            rows.append(np.zeros(X.T))
            continue
        plan = partition_subbands([PsdSpec.from_levels(X.T, mask.astype(float))])
        S = acquire(X.data[n : n + 1], plan, one)
        rec = reconstruct(S, plan, one)
        rows.append(rec.data[0])
        total += len(S)
        worst = max(worst, rec.meta["max_condition"])
    return total, SignalEnsemble(np.array(rows), "reconstructed"), worst


# ------------------------------------------------------------------- sweep

SWEEP_COLUMNS = [
    "ratio", "M", "trial", "trial_seed", "nmse_db", "density", "theoretical_density",
    "samples", "bandwidth", "baseline_samples", "widths_divide_T", "max_condition",
    "bound_verified",
]


def _sweep_job(args) -> dict:
    cfg, ratio, M, trial = args
    t = generate_trial(cfg, M, trial)
    rep = run_multiband(t, cfg.ablate_drop_subband)
    return {
        "ratio": ratio,
        "M": M,
        "trial": trial,
        "trial_seed": t.seeds["trial_seed"],
        "nmse_db": rep.nmse_db,
        "density": rep.density,
        "theoretical_density": rep.theoretical_density,
        "samples": rep.multiband_total_samples,
        "bandwidth": rep.bandwidth,
        "baseline_samples": rep.baseline_total_samples,
        "widths_divide_T": rep.widths_divide_T,
        "max_condition": rep.max_condition,
        "bound_verified": verify_density_bound(rep),
        "_report": rep,
    }


def _map(fn, jobs, workers: int) -> list:
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))  # map keeps submission order


def sweep(cfg: ExperimentConfig) -> list[dict]:
    jobs = [(cfg, r, M, k) for r, M in cfg.m_values() for k in range(cfg.trials)]
    return _map(_sweep_job, jobs, cfg.workers)


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def write_sweep(cfg: ExperimentConfig, rows: list[dict]) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(rows_to_csv(rows, SWEEP_COLUMNS))
    reports = [r["_report"].to_dict() for r in rows]
    (out / "sweep_reports.json").write_text(json.dumps(reports, indent=1, sort_keys=True))
    summary = {
        "config": asdict(cfg),
        "trials": len(rows),
        "all_bound_verified": all(r["bound_verified"] for r in rows),
        "worst_nmse_db": max(r["nmse_db"] for r in rows),
    }
    (out / "sweep_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


# ----------------------------------------------------------------- compare

COMPARE_COLUMNS = [
    "trial", "trial_seed", "multiband_samples", "separate_samples", "multiband_rate",
    "separate_rate", "multiband_nmse_db", "separate_nmse_db", "max_condition",
]


def _compare_job(args) -> dict:
    cfg, M, trial = args
    t = generate_trial(cfg, M, trial)
    rep = run_multiband(t)
    sep_samples, sep_hat, sep_cond = run_separate(t.X, t.U, t.specs)
    return {
        "trial": trial,
        "trial_seed": t.seeds["trial_seed"],
        "multiband_samples": rep.multiband_total_samples,
        "separate_samples": sep_samples,
        "multiband_rate": rep.multiband_total_samples / cfg.T,
        "separate_rate": sep_samples / cfg.T,
        "multiband_nmse_db": rep.nmse_db,
        "separate_nmse_db": nmse_db(t.X, sep_hat),
        "max_condition": max(rep.max_condition, sep_cond),
    }


def compare(cfg: ExperimentConfig, ratio: float = 0.5) -> list[dict]:
    M = cfg.M if cfg.M is not None else max(1, int(round(ratio * cfg.N)))
    jobs = [(cfg, M, k) for k in range(cfg.trials)]
    return _map(_compare_job, jobs, cfg.workers)


def write_compare(cfg: ExperimentConfig, rows: list[dict]) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "compare.csv").write_text(rows_to_csv(rows, COMPARE_COLUMNS))
    summary = {
        "config": asdict(cfg),
        "mean_multiband_rate": float(np.mean([r["multiband_rate"] for r in rows])),
        "mean_separate_rate": float(np.mean([r["separate_rate"] for r in rows])),
        "mean_multiband_nmse_db": float(np.mean([r["multiband_nmse_db"] for r in rows])),
        "mean_separate_nmse_db": float(np.mean([r["separate_nmse_db"] for r in rows])),
        "multiband_always_lower": all(
            r["multiband_samples"] < r["separate_samples"] for r in rows
        ),
    }
    (out / "compare_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


# -------------------------------------------------------------------- real


def run_real(cfg: ExperimentConfig, corpus=None) -> tuple[dict, estimation.RealPipeline, SignalEnsemble]:
    corpus = corpus if corpus is not None else cfg.corpus
    if corpus is None:
        raise ConfigError("the real pipeline needs a corpus path")
    pipe = estimation.prepare_real_pipeline(
        corpus, cfg.T, cfg.N, M=cfg.M, variance=cfg.variance, fraction=cfg.fraction
    )
    plan = partition_subbands(pipe.specs)
    S = acquire(pipe.X, plan, pipe.U)
    Xh = reconstruct(S, plan, pipe.U)
    report = {
        "T": cfg.T,
        "N": cfg.N,
        "M": pipe.estimation.M,
        "retained_variance": pipe.estimation.retained_variance,
        "bandwidth": total_bandwidth(pipe.specs),
        "samples": len(S),
        "density": sampling_density(S),
        "theoretical_density": total_bandwidth(pipe.specs) / (cfg.T * cfg.N),
        "nmse_db": nmse_db(pipe.X, Xh),
        "max_condition": Xh.meta["max_condition"],
        "latent_max_cross_correlation": pipe.cross_correlation,
        "fraction": cfg.fraction,
    }
    return report, pipe, Xh


def write_real(cfg: ExperimentConfig, report: dict, pipe: estimation.RealPipeline, Xh: SignalEnsemble) -> None:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "real_report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    mean = pipe.estimation.mean[:, None]
    orig, rec = pipe.X.data + mean, Xh.data + mean
    rows = [
        {"channel": n, "t": t, "original": orig[n, t], "reconstruction": rec[n, t],
         "error": orig[n, t] - rec[n, t]}
        for n in range(orig.shape[0]) for t in range(orig.shape[1])
    ]
    (out / "real_series.csv").write_text(
        rows_to_csv(rows, ["channel", "t", "original", "reconstruction", "error"])
    )
    psd_rows = [
        {"source": m, "k": k, "periodogram": float(pipe.raw_psds[m, k]),
         "thresholded": float(spec.levels[k])}
        for m, spec in enumerate(pipe.specs) for k in range(cfg.T)
    ]
    (out / "real_psd.csv").write_text(
        rows_to_csv(psd_rows, ["source", "k", "periodogram", "thresholded"])
    )
