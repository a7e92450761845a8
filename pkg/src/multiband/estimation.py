"""Real-data path: PCA latents, periodogram supports, thresholded model."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateCovariance,
    EmptySupport,
    InsufficientData,
    NonNumericCell,
)
from .spectral import FrequencyGrid, PsdSpec
from .synthesis import MixingMatrix, SignalEnsemble, empirical_cross_correlation

DEFAULT_FRACTION = 0.05


@dataclass(frozen=True)
class EstimationResult:
    U_hat: np.ndarray  # N x M, orthogonal columns scaled by singular values
    A_hat: np.ndarray  # M x T, unit-power rows
    mean: np.ndarray  # length N, removed before PCA
    eigenvalues: np.ndarray  # all N, descending
    M: int

    @property
    def retained_variance(self) -> float:
        total = self.eigenvalues.sum()
        return float(self.eigenvalues[: self.M].sum() / total) if total > 0 else 1.0


def _choose_m(eigenvalues: np.ndarray, target: float) -> int:
    if not 0 < target <= 1:
        raise ConfigError(f"variance fraction must lie in (0, 1], got {target}")
    total = eigenvalues.sum()
    if total <= 0:
        raise DegenerateCovariance("data have zero variance")
    frac = np.cumsum(eigenvalues) / total
    return int(np.searchsorted(frac, target - 1e-12) + 1)


def estimate_latents(X_raw, M: int | None = None, variance: float | None = None) -> EstimationResult:
    """PCA split ``X - mean = U_hat @ A_hat``.

    Give either ``M`` (number of components) or ``variance``, the smallest
    retained variance fraction to reach.
    """
    x = np.asarray(X_raw, dtype=float)
    if x.ndim != 2:
        raise InsufficientData(f"expected an N x T array, got shape {x.shape}")
    N, T = x.shape
    if N < 2 or T <= N:
        raise InsufficientData(f"need T > N >= 2, got N={N}, T={T}")
    if (M is None) == (variance is None):
        raise ConfigError("give exactly one of M or variance")
    mean = x.mean(axis=1)
    xc = x - mean[:, None]
    evals, evecs = np.linalg.eigh(xc @ xc.T / T)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    if M is None:
        M = min(_choose_m(evals, variance), N)
    if not 1 <= M <= N:
        raise ConfigError(f"M must lie in [1, {N}], got {M}")
    if evals[M - 1] <= 1e-12 * evals[0]:
        raise DegenerateCovariance(f"covariance rank is below the requested M={M}")
    scale = np.sqrt(evals[:M])
    U_hat = evecs[:, :M] * scale
    A_hat = (evecs[:, :M].T @ xc) / scale[:, None]
    return EstimationResult(U_hat, A_hat, mean, evals, M)


def empirical_psd(a) -> np.ndarray:
    """Raw periodogram ``|DFT(a)|^2 / T``."""
    a = np.asarray(a)
    return np.abs(np.fft.fft(a)) ** 2 / a.size


def support_mask(psd, fraction: float = DEFAULT_FRACTION) -> np.ndarray:
    """Bins at or above ``fraction * max``, closed under mirroring."""
    psd = np.asarray(psd, dtype=float)
    if psd.size == 0 or not np.max(psd) > 0:
        raise EmptySupport("PSD is identically zero")
    keep = psd >= fraction * psd.max()
    return keep | keep[(psd.size - np.arange(psd.size)) % psd.size]


def threshold_support(psd, a=None, fraction: float = DEFAULT_FRACTION, index: int = 0):
    """Thresholded spec and, if ``a`` is given, ``a`` masked to that support.

    Levels are the mirror-averaged periodogram's mean over each run; only
    the support matters downstream.
    """
    psd = np.asarray(psd, dtype=float)
    T = psd.size
    grid = FrequencyGrid(T)
    keep = support_mask(psd, fraction)
    sym = 0.5 * (psd + psd[grid.mirror(np.arange(T))])
    levels = np.zeros(T)
    # per-run means; mirror runs see identical values, so symmetry is kept
    edges = np.flatnonzero(np.diff(np.concatenate([[0], keep.astype(int), [0]])))
    for lo, hi in zip(edges[::2], edges[1::2]):
        levels[lo:hi] = max(sym[lo:hi].mean(), np.finfo(float).tiny)
    levels = 0.5 * (levels + levels[grid.mirror(np.arange(T))])
    spec = PsdSpec.from_levels(grid, levels, index)
    filtered = None
    if a is not None:
        filtered = np.fft.ifft(np.fft.fft(np.asarray(a, dtype=float)) * keep).real
    return spec, filtered


def max_cross_correlation(A: np.ndarray, max_lag: int | None = None) -> float:
    """Largest normalized |circular cross-correlation| between distinct rows."""
    A = np.atleast_2d(A)
    M, T = A.shape
    max_lag = T - 1 if max_lag is None else max_lag
    power = np.sqrt(np.mean(A**2, axis=1))
    worst = 0.0
    for i in range(M):
        for j in range(i + 1, M):
            if power[i] == 0 or power[j] == 0:
                continue
            r = empirical_cross_correlation(A[i], A[j], max_lag)
            worst = max(worst, float(np.max(np.abs(r)) / (power[i] * power[j])))
    return worst


# ---------------------------------------------------------------- ingestion


def _parse_rows(path: Path) -> list[list[float]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    out = []
    for lineno, row in enumerate(rows, start=1):
        cells = [c.strip() for c in row]
        if not any(cells):
            continue
        try:
            out.append([float(c) for c in cells])
        except ValueError:
            if lineno == 1 and not out:
                continue  # header
            raise NonNumericCell(f"{path}:{lineno}: non-numeric cell in {row!r}") from None
    return out


def read_corpus(path) -> list[np.ndarray]:
    """Series from a directory of single-column CSVs or one wide CSV.

    Directory entries are read in sorted filename order.
    """
    path = Path(path)
    if not path.exists():
        raise InsufficientData(f"corpus not found: {path}")
    if path.is_dir():
        series = []
        for f in sorted(path.glob("*.csv")):
            rows = _parse_rows(f)
            if rows and any(len(r) != 1 for r in rows):
                raise NonNumericCell(f"{f}: expected a single column")
            series.append(np.array([r[0] for r in rows]))
        return series
    rows = _parse_rows(path)
    if not rows:
        return []
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise NonNumericCell(f"{path}: row {i + 1} has {len(r)} cells, expected {width}")
    return list(np.array(rows).T)


@dataclass(frozen=True)
class RealPipeline:
    estimation: EstimationResult
    specs: tuple[PsdSpec, ...]
    raw_psds: np.ndarray  # M x T periodograms of A_hat
    A: SignalEnsemble  # thresholded latents
    X: SignalEnsemble  # U_hat @ A, zero mean
    raw: np.ndarray  # N x T truncated input
    cross_correlation: float

    @property
    def U(self) -> MixingMatrix:
        return MixingMatrix(self.estimation.U_hat)


def prepare_real_pipeline(
    corpus,
    T: int = 128,
    N: int = 10,
    M: int | None = None,
    variance: float | None = None,
    fraction: float = DEFAULT_FRACTION,
) -> RealPipeline:
    """Corpus -> (U_hat, thresholded A, X = U_hat A, specs).

    ``corpus`` is a path or an already loaded sequence of series. The first
    ``N`` series with at least ``T`` values are used, truncated to ``T``.
    """
    series = read_corpus(corpus) if isinstance(corpus, (str, Path)) else list(corpus)
    usable = [np.asarray(s, dtype=float)[:T] for s in series if len(s) >= T]
    if len(usable) < N:
        raise InsufficientData(
            f"need {N} series of length >= {T}, corpus has {len(usable)} (of {len(series)})"
        )
    raw = np.array(usable[:N])
    if M is None and variance is None:
        variance = 0.99
    est = estimate_latents(raw, M=M, variance=variance)
    specs, rows, psds = [], [], []
    for m, a in enumerate(est.A_hat):
        psd = empirical_psd(a)
        spec, filtered = threshold_support(psd, a, fraction, index=m)
        specs.append(spec)
        rows.append(filtered)
        psds.append(psd)
    A = SignalEnsemble(np.array(rows), "latent")
    X = SignalEnsemble(est.U_hat @ A.data, "observed")
    return RealPipeline(
        est, tuple(specs), np.array(psds), A, X, raw, max_cross_correlation(est.A_hat)
    )
