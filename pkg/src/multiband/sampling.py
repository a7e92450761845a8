"""Per-subband acquisition: ideal bandpass, row selection, decimation."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ConfigError, DimensionError, DomainError, GridMismatch, RankDeficient
from .spectral import PsdSpec, Subband, SubbandPlan
from .synthesis import MixingMatrix, SignalEnsemble

RANK_TOL = 1e-12


def _data(X) -> np.ndarray:
    return X.data if isinstance(X, SignalEnsemble) else np.atleast_2d(np.asarray(X))


def subband_component(X, subband: Subband, spectrum: np.ndarray | None = None) -> np.ndarray:
    """Ideal bandpass of every channel onto bins ``[lo, hi)``; complex N x T.

    ``spectrum`` lets callers reuse a precomputed ``fft(X, axis=1)``.
    """
    x = _data(X)
    T = x.shape[1]
    if not 0 <= subband.lo < subband.hi <= T:
        raise GridMismatch(f"subband [{subband.lo},{subband.hi}) outside grid of length {T}")
    if spectrum is None:
        spectrum = np.fft.fft(x, axis=1)
    masked = np.zeros_like(spectrum, dtype=complex)
    masked[:, subband.lo : subband.hi] = spectrum[:, subband.lo : subband.hi]
    return np.fft.ifft(masked, axis=1)


@dataclass(frozen=True)
class RowSelection:
    subband: int
    rows: tuple[int, ...]
    condition: float


def select_rows(U: MixingMatrix, active: Sequence[int], subband: int = -1) -> RowSelection:
    """Pick ``len(active)`` rows of ``U[:, active]`` by column-pivoted QR of its
    transpose; the pivot order greedily favours well-conditioned subsets."""
    active = list(active)
    sub = U.entries[:, active]
    g = len(active)
    if g == 0 or g > U.N:
        raise RankDeficient(f"cannot select {g} rows from {U.N}")
    R, piv = scipy.linalg.qr(sub.T, mode="r", pivoting=True)
    diag = np.abs(np.diag(R))[:g]
    if diag.size < g or diag[-1] <= RANK_TOL * max(diag[0], np.finfo(float).tiny):
        raise RankDeficient(f"U[:, {active}] has rank < {g}")
    rows = tuple(sorted(int(r) for r in piv[:g]))
    cond = float(np.linalg.cond(sub[list(rows)]))
    return RowSelection(subband, rows, cond)


def temporal_positions(W: int, T: int) -> np.ndarray:
    """``floor(i T / W)`` for ``i = 0..W-1``: W distinct, near-uniform instants."""
    if not 1 <= W <= T:
        raise DomainError(f"subband width {W} must lie in [1, {T}]")
    return (np.arange(W, dtype=np.int64) * T) // W


@dataclass(frozen=True)
class SubbandSamples:
    l: int
    rows: tuple[int, ...]
    times: tuple[int, ...]
    values: np.ndarray  # len(rows) x len(times), complex

    @property
    def count(self) -> int:
        return len(self.rows) * len(self.times)


@dataclass(frozen=True)
class SampleSet:
    T: int
    N: int
    records: tuple[SubbandSamples, ...]

    def __len__(self) -> int:
        return sum(r.count for r in self.records)

    @property
    def spatial_sets(self) -> dict[int, tuple[int, ...]]:
        return {r.l: r.rows for r in self.records}

    @property
    def temporal_sets(self) -> dict[int, tuple[int, ...]]:
        return {r.l: r.times for r in self.records}

    def drop_subband(self, l: int) -> "SampleSet":
        """Copy without subband ``l`` (bound-violation ablation)."""
        kept = tuple(r for r in self.records if r.l != l)
        if len(kept) == len(self.records):
            raise ConfigError(f"sample set has no subband {l}")
        return SampleSet(self.T, self.N, kept)

    def scaled(self, alpha: complex) -> "SampleSet":
        return SampleSet(
            self.T,
            self.N,
            tuple(SubbandSamples(r.l, r.rows, r.times, alpha * r.values) for r in self.records),
        )

    def combine(self, other: "SampleSet", alpha=1.0, beta=1.0) -> "SampleSet":
        """Value-wise ``alpha*self + beta*other`` for sets with identical layout."""
        if [(r.l, r.rows, r.times) for r in self.records] != [
            (r.l, r.rows, r.times) for r in other.records
        ]:
            raise DimensionError("sample sets have different layouts")
        return SampleSet(
            self.T,
            self.N,
            tuple(
                SubbandSamples(a.l, a.rows, a.times, alpha * a.values + beta * b.values)
                for a, b in zip(self.records, other.records)
            ),
        )

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "N": self.N,
            "subbands": [
                {
                    "l": r.l,
                    "rows": list(r.rows),
                    "times": list(r.times),
                    "values": [[float(v.real), float(v.imag)] for v in r.values.ravel()],
                }
                for r in self.records
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "SampleSet":
        try:
            records = []
            for rec in doc["subbands"]:
                rows, times = tuple(rec["rows"]), tuple(rec["times"])
                vals = np.array([complex(re, im) for re, im in rec["values"]], dtype=complex)
                records.append(
                    SubbandSamples(rec["l"], rows, times, vals.reshape(len(rows), len(times)))
                )
            return cls(int(doc["T"]), int(doc["N"]), tuple(records))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed sample-set document: {exc!r}") from exc

    @classmethod
    def from_json(cls, text: str) -> "SampleSet":
        return cls.from_dict(json.loads(text))


def _check_dims(X: np.ndarray, plan: SubbandPlan, U: MixingMatrix):
    if X.shape[1] != plan.grid.T:
        raise GridMismatch(f"signal length {X.shape[1]} != grid length {plan.grid.T}")
    if X.shape[0] != U.N:
        raise DimensionError(f"signal has {X.shape[0]} channels, mixing matrix {U.N} rows")
    if plan.n_sources != U.M:
        raise DimensionError(f"plan covers {plan.n_sources} sources, mixing matrix {U.M}")


def acquire(X, plan: SubbandPlan, U: MixingMatrix) -> SampleSet:
    """Sample every subband on its selected rows at its own rate."""
    x = _data(X)
    _check_dims(x, plan, U)
    spectrum = np.fft.fft(x, axis=1)
    records = []
    for sb in plan:
        sel = select_rows(U, sb.active, sb.index)
        times = temporal_positions(sb.width, plan.grid.T)
        comp = subband_component(x[list(sel.rows)], sb, spectrum[list(sel.rows)])
        records.append(
            SubbandSamples(sb.index, sel.rows, tuple(int(t) for t in times), comp[:, times])
        )
    return SampleSet(plan.grid.T, U.N, tuple(records))


def sampling_density(S: SampleSet) -> float:
    """Samples per channel per grid instant."""
    if S.T * S.N == 0:
        return 0.0
    return len(S) / (S.T * S.N)


def channel_supports(U: MixingMatrix, specs: Sequence[PsdSpec]) -> np.ndarray:
    """N x T mask: bins where each observed channel can carry power."""
    support = np.array([s.support for s in specs])
    return (U.entries != 0).astype(int) @ support.astype(int) > 0


def separate_baseline(U: MixingMatrix, specs: Sequence[PsdSpec]) -> tuple[np.ndarray, int]:
    """Per-channel Nyquist counts when each channel is sampled on its own."""
    counts = channel_supports(U, specs).sum(axis=1)
    return counts, int(counts.sum())
