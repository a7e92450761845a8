"""Per-subband temporal interpolation, spatial lift, and subband summation.

The temporal step is the exact finite-grid counterpart of a modulated sinc
kernel: find the unique sequence whose DFT lives on the subband's bins and
that passes through the samples. For uniform positions (``W | T``) the
system is a scaled DFT and the result equals periodic-sinc interpolation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError, ImaginaryResidue, SingularSystem
from .sampling import SampleSet
from .spectral import Subband, SubbandPlan
from .synthesis import MixingMatrix, SignalEnsemble

log = logging.getLogger(__name__)

MAX_SOLVE_CONDITION = 1e12
IMAG_TOL = 1e-8


@dataclass(frozen=True)
class TemporalInterpolator:
    lo: int
    hi: int
    T: int
    times: tuple[int, ...]
    system: np.ndarray
    condition: float

    @classmethod
    def build(cls, subband: Subband, times: Sequence[int], T: int) -> "TemporalInterpolator":
        times = np.asarray(times, dtype=np.int64)
        if times.size != subband.width:
            raise SingularSystem(
                f"{times.size} samples for a {subband.width}-bin subband", float("inf")
            )
        if np.unique(times % T).size != times.size:
            raise SingularSystem("repeated sampling instants", float("inf"))
        k = np.arange(subband.lo, subband.hi)
        system = np.exp(2j * np.pi * np.outer(times, k) / T) / np.sqrt(T)
        cond = float(np.linalg.cond(system))
        if not cond < MAX_SOLVE_CONDITION:
            raise SingularSystem(f"temporal system for bins [{subband.lo},{subband.hi})", cond)
        return cls(subband.lo, subband.hi, T, tuple(int(t) for t in times), system, cond)

    def coefficients(self, samples) -> np.ndarray:
        """Unitary-DFT coefficients on the subband bins (one row per channel)."""
        y = np.atleast_2d(samples)
        return np.linalg.solve(self.system, y.T).T

    def __call__(self, samples) -> np.ndarray:
        c = self.coefficients(samples)
        spectrum = np.zeros((c.shape[0], self.T), dtype=complex)
        spectrum[:, self.lo : self.hi] = c * np.sqrt(self.T)
        return np.fft.ifft(spectrum, axis=1)


def temporal_interpolate(samples, times, subband: Subband, T: int) -> np.ndarray:
    """Length-T sequence(s) supported on the subband bins through the samples."""
    out = TemporalInterpolator.build(subband, times, T)(samples)
    return out[0] if np.ndim(samples) == 1 else out


@dataclass(frozen=True)
class SpatialInterpolator:
    subband: int
    rows: tuple[int, ...]
    matrix: np.ndarray  # N x |active|
    condition: float

    @classmethod
    def build(
        cls, U: MixingMatrix, active: Sequence[int], rows: Sequence[int], subband: int = -1
    ) -> "SpatialInterpolator":
        active, rows = list(active), list(rows)
        if len(rows) != len(active):
            raise DimensionError(f"{len(rows)} rows selected for {len(active)} active sources")
        Ul = U.entries[:, active]
        Us = Ul[rows]
        # Ul (Us^H Us)^-1 Us^H == Ul R^-1 Q^H with Us = QR
        Q, R = scipy.linalg.qr(Us)
        cond = float(np.linalg.cond(R))
        if not cond < MAX_SOLVE_CONDITION:
            raise SingularSystem(f"selected rows {rows} of subband {subband}", cond)
        Y = scipy.linalg.solve_triangular(R, Ul.T, trans="T").T
        return cls(subband, tuple(rows), Y @ Q.conj().T, cond)

    def __call__(self, signals) -> np.ndarray:
        signals = np.atleast_2d(signals)
        if signals.shape[0] != self.matrix.shape[1]:
            raise DimensionError(
                f"expected {self.matrix.shape[1]} sampled channels, got {signals.shape[0]}"
            )
        return self.matrix @ signals


def spatial_interpolate(interp: SpatialInterpolator, signals) -> np.ndarray:
    return interp(signals)


def reconstruct(
    S: SampleSet, plan: SubbandPlan, U: MixingMatrix, real: bool = True
) -> SignalEnsemble:
    """Sum of per-subband lifts.

    With ``real=True`` the summed result must be real to within 1e-8 of its
    peak magnitude; the imaginary part is then dropped. Pass ``real=False``
    to keep the complex sum, e.g. when a subband was deliberately removed.
    """
    if S.T != plan.grid.T:
        raise DimensionError(f"sample set grid {S.T} != plan grid {plan.grid.T}")
    if S.N != U.N or plan.n_sources != U.M:
        raise DimensionError("sample set, plan and mixing matrix disagree on dimensions")
    xhat = np.zeros((U.N, S.T), dtype=complex)
    conditions = {}
    for rec in S.records:
        sb = plan[rec.l]
        temporal = TemporalInterpolator.build(sb, rec.times, S.T)
        spatial = SpatialInterpolator.build(U, sb.active, rec.rows, sb.index)
        xhat += spatial(temporal(rec.values))
        conditions[sb.index] = {"temporal": temporal.condition, "spatial": spatial.condition}
        log.debug("subband %d: cond temporal %.3g spatial %.3g",
                  sb.index, temporal.condition, spatial.condition)
    meta = {
        "condition_numbers": conditions,
        "max_condition": max(
            (max(c.values()) for c in conditions.values()), default=1.0
        ),
    }
    if not real:
        return SignalEnsemble(xhat, "reconstructed", meta)
    residue = float(np.max(np.abs(xhat.imag), initial=0.0))
    scale = float(np.max(np.abs(xhat), initial=0.0))
    if residue > IMAG_TOL * scale + np.finfo(float).tiny:
        raise ImaginaryResidue(
            f"imaginary residue {residue:.3g} exceeds {IMAG_TOL:g} x scale {scale:.3g}"
        )
    meta["imaginary_residue"] = residue
    return SignalEnsemble(xhat.real.copy(), "reconstructed", meta)
