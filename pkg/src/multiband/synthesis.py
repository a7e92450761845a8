"""Latent WSS sample paths from block PSDs, and the linear mixing model."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, RankDeficient, SizeMismatch
from .spectral import FrequencyGrid, PsdSpec

ROLES = ("latent", "observed", "reconstructed")

# redraw guard for generated mixing matrices
MAX_CONDITION = 1e6


def derive_seed(master: int, *keys: int) -> int:
    """Child seed for (master, key...), stable across platforms and runs."""
    ss = np.random.SeedSequence([int(master), *(int(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class SignalEnsemble:
    """C x T multichannel signal with a role tag.

    ``meta`` is free-form provenance (condition numbers, seeds, ...).
    """

    data: np.ndarray
    role: str = "observed"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data))
        if data.ndim != 2:
            raise SizeMismatch(f"ensemble must be 2-D, got shape {data.shape}")
        if not np.iscomplexobj(data):
            data = data.astype(float)
        if not np.all(np.isfinite(data)):
            raise SizeMismatch("ensemble contains non-finite samples")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        object.__setattr__(self, "data", data)

    @property
    def T(self) -> int:
        return self.data.shape[1]

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.T)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.data)


@dataclass(frozen=True)
class MixingMatrix:
    entries: np.ndarray

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if u.ndim != 2:
            raise DimensionError(f"mixing matrix must be 2-D, got shape {u.shape}")
        object.__setattr__(self, "entries", u)

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @property
    def M(self) -> int:
        return self.entries.shape[1]

    def validate(self) -> "MixingMatrix":
        if self.N < self.M:
            raise DimensionError(f"need N >= M, got {self.N}x{self.M}")
        if np.linalg.matrix_rank(self.entries) < self.M:
            raise RankDeficient("mixing matrix is not full column rank")
        return self


@dataclass(frozen=True)
class PhaseDraw:
    """Uniform phases, one row per source, one column per bin 1..T/2-1."""

    phases: np.ndarray
    seed: int | None = None

    @classmethod
    def draw(cls, n_sources: int, T: int, seed) -> "PhaseDraw":
        rng = np.random.default_rng(seed)
        phases = rng.uniform(0.0, 2 * np.pi, size=(n_sources, T // 2 - 1))
        return cls(phases, seed if isinstance(seed, (int, np.integer)) else None)


def synthesize_latent(spec: PsdSpec, phases) -> np.ndarray:
    """One real sample path whose DFT is ``sqrt(T S(k)) exp(j phi_k)``.

    Equivalent to the cosine-sum
    ``(1/sqrt T)(sqrt S0 + (-1)^t sqrt S_{T/2} + sum 2 sqrt S_k cos(2 pi k t/T + phi_k))``
    evaluated through an inverse real FFT.
    """
    T = spec.T
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (T // 2 - 1,):
        raise SizeMismatch(f"expected {T // 2 - 1} phases, got shape {phases.shape}")
    amp = np.sqrt(T * spec.levels[: T // 2 + 1])
    half = amp.astype(complex)
    half[1 : T // 2] *= np.exp(1j * phases)
    return np.fft.irfft(half, n=T)


def synthesize_latents(specs: Sequence[PsdSpec], draw: PhaseDraw) -> SignalEnsemble:
    if draw.phases.shape[0] != len(specs):
        raise SizeMismatch(f"{len(specs)} specs but {draw.phases.shape[0]} phase rows")
    rows = [synthesize_latent(s, p) for s, p in zip(specs, draw.phases)]
    return SignalEnsemble(np.array(rows), "latent", {"phase_seed": draw.seed})


def random_mixing_matrix(N: int, M: int, seed, max_retries: int = 100) -> MixingMatrix:
    """I.i.d. standard-normal N x M matrix, redrawn until full column rank,
    no zero row, and condition number <= 1e6."""
    if M < 1 or N < M:
        raise DimensionError(f"need N >= M >= 1, got N={N}, M={M}")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        u = rng.standard_normal((N, M))
        if (
            np.linalg.matrix_rank(u) == M
            and np.all(np.any(u != 0, axis=1))
            and np.linalg.cond(u) <= MAX_CONDITION
        ):
            return MixingMatrix(u)
    raise RankDeficient(f"no well-conditioned {N}x{M} draw in {max_retries} tries")


def mix(U: MixingMatrix, A: SignalEnsemble) -> SignalEnsemble:
    if A.n_channels != U.M:
        raise DimensionError(f"mixing matrix has {U.M} columns but {A.n_channels} latents")
    return SignalEnsemble(U.entries @ A.data, "observed", dict(A.meta))


def empirical_cross_correlation(a, b, max_lag: int) -> np.ndarray:
    """Circular estimate ``R(tau) = (1/T) sum_t a(t) b((t - tau) mod T)``
    for ``tau = -max_lag..max_lag``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise SizeMismatch(f"sequences must be 1-D and equal length: {a.shape} vs {b.shape}")
    T = a.size
    if not 0 <= max_lag < T:
        raise SizeMismatch(f"max_lag must lie in [0, {T}), got {max_lag}")
    lags = np.arange(-max_lag, max_lag + 1)
    t = np.arange(T)
    return np.array([np.dot(a, b[(t - tau) % T]) / T for tau in lags])
