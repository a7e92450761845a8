"""Fidelity metrics, rate accounting, and model-premise checks."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ZeroReference
from .sampling import separate_baseline
from .spectral import PsdSpec, total_bandwidth
from .synthesis import MixingMatrix, SignalEnsemble

NMSE_FLOOR_DB = -300.0
# acceptance policy: tighter when every subband width divides T
NMSE_THRESHOLD_DIVISIBLE_DB = -120.0
NMSE_THRESHOLD_GENERAL_DB = -80.0


def _arr(x):
    return x.data if isinstance(x, SignalEnsemble) else np.asarray(x)


def nmse_db(X, X_hat) -> float:
    """``10 log10(sum|X - X_hat|^2 / sum|X|^2)``, floored at -300 dB."""
    x, xh = _arr(X), _arr(X_hat)
    if x.shape != xh.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {xh.shape}")
    ref = float(np.sum(np.abs(x) ** 2))
    if ref == 0:
        raise ZeroReference("reference signal is identically zero")
    err = float(np.sum(np.abs(x - xh) ** 2))
    if err == 0:
        return NMSE_FLOOR_DB
    return float(max(10 * np.log10(err / ref), NMSE_FLOOR_DB))


def check_correlatedness_premises(U, powers) -> dict:
    """Sufficient conditions for the mixed channels to be correlated:
    N > M, every latent power positive, every mixing row nonzero."""
    u = U.entries if isinstance(U, MixingMatrix) else np.atleast_2d(np.asarray(U, dtype=float))
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (u.shape[1],):
        raise ValueError(f"expected {u.shape[1]} powers, got {powers.shape}")
    report = {
        "N_gt_M": bool(u.shape[0] > u.shape[1]),
        "all_powers_positive": bool(np.all(powers > 0)),
        "all_rows_nonzero": bool(np.all(np.any(u != 0, axis=1))),
    }
    report["verdict"] = all(report.values())
    return report


@dataclass
class ExperimentReport:
    T: int
    N: int
    M: int
    bandwidth: int
    multiband_total_samples: int
    nmse_db: float
    baseline_total_samples: int
    widths_divide_T: bool
    condition_numbers: dict = field(default_factory=dict)
    max_condition: float = 1.0
    seeds: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    ablated_subband: int | None = None

    @property
    def density(self) -> float:
        return self.multiband_total_samples / (self.T * self.N)

    @property
    def theoretical_density(self) -> float:
        return self.bandwidth / (self.T * self.N)

    @property
    def nmse_threshold_db(self) -> float:
        return NMSE_THRESHOLD_DIVISIBLE_DB if self.widths_divide_T else NMSE_THRESHOLD_GENERAL_DB

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["condition_numbers"] = {str(k): v for k, v in self.condition_numbers.items()}
        doc["density"] = self.density
        doc["theoretical_density"] = self.theoretical_density
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def verify_density_bound(report: ExperimentReport, nmse_threshold_db: float | None = None) -> bool:
    """Density hits B/(T N) exactly and the reconstruction meets the NMSE bar."""
    threshold = report.nmse_threshold_db if nmse_threshold_db is None else nmse_threshold_db
    exact = Fraction(report.multiband_total_samples, report.T * report.N) == Fraction(
        report.bandwidth, report.T * report.N
    )
    return bool(exact and report.nmse_db <= threshold)


def rate_comparison(U: MixingMatrix, specs: Sequence[PsdSpec]) -> dict:
    multiband = total_bandwidth(specs)
    _, separate = separate_baseline(U, specs)
    return {
        "multiband": multiband,
        "separate": separate,
        "ratio": separate / multiband if multiband else float("nan"),
    }
