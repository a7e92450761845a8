"""Piecewise-constant PSDs on a DFT bin grid and the subband partition.

Bin ``k`` of a length-``T`` grid is normalized frequency ``k/T``; bins above
``T/2`` are the negative frequencies. A real process needs
``S(k) == S((T - k) % T)``, so every spec is checked for that mirror
symmetry. Bandwidths are bin counts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AsymmetricSpectrum,
    ConfigError,
    DomainError,
    GridMismatch,
    InfeasiblePlacement,
    OverlappingBlocks,
    ZeroLevel,
)

Block = tuple[int, int, float]


@dataclass(frozen=True)
class FrequencyGrid:
    T: int

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 4 or self.T % 2:
            raise DomainError(f"grid length must be an even integer >= 4, got {self.T}")
        object.__setattr__(self, "T", int(self.T))

    def mirror(self, k):
        """Index of the conjugate-symmetric partner bin(s)."""
        return (self.T - np.asarray(k)) % self.T


def _as_grid(grid) -> FrequencyGrid:
    return grid if isinstance(grid, FrequencyGrid) else FrequencyGrid(int(grid))


def _runs(values: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs ``[lo, hi)`` of equal consecutive entries along axis -1."""
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[None, :]
    n = values.shape[-1]
    change = np.flatnonzero(np.any(values[:, 1:] != values[:, :-1], axis=0)) + 1
    edges = np.concatenate([[0], change, [n]])
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


@dataclass(frozen=True)
class PsdSpec:
    """Prescribed PSD of one latent source.

    ``blocks`` hold two-sided, pairwise disjoint half-open bin ranges with
    strictly positive levels. Use :func:`build_psd_spec` or one of the
    classmethods rather than the constructor, which does not validate.
    """

    grid: FrequencyGrid
    blocks: tuple[Block, ...]
    index: int = 0
    _levels: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        levels = np.zeros(self.grid.T)
        for lo, hi, c in self.blocks:
            levels[lo:hi] = c
        levels.setflags(write=False)
        object.__setattr__(self, "_levels", levels)

    @property
    def T(self) -> int:
        return self.grid.T

    @property
    def levels(self) -> np.ndarray:
        """Length-T array ``S(k)``."""
        return self._levels

    @property
    def support(self) -> np.ndarray:
        return self._levels > 0

    @property
    def bandwidth(self) -> int:
        return int(np.count_nonzero(self._levels))

    @property
    def power(self) -> float:
        """Mean power ``(1/T) sum_k S(k)`` of a synthesized path."""
        return float(self._levels.sum() / self.T)

    @classmethod
    def from_levels(cls, grid, levels, index: int = 0) -> "PsdSpec":
        grid = _as_grid(grid)
        levels = np.asarray(levels, dtype=float)
        if levels.shape != (grid.T,):
            raise GridMismatch(f"expected {grid.T} levels, got shape {levels.shape}")
        if np.any(levels < 0) or not np.all(np.isfinite(levels)):
            raise ZeroLevel("PSD levels must be finite and nonnegative")
        if not np.array_equal(levels, levels[grid.mirror(np.arange(grid.T))]):
            raise AsymmetricSpectrum("PSD is not conjugate symmetric")
        blocks = tuple(
            (lo, hi, float(levels[lo])) for lo, hi in _runs(levels) if levels[lo] > 0
        )
        return cls(grid, blocks, index)

    @classmethod
    def from_positive_blocks(cls, grid, blocks: Iterable, index: int = 0) -> "PsdSpec":
        """Build from blocks on bins ``0..T/2``; mirrors are filled in."""
        grid = _as_grid(grid)
        half = grid.T // 2
        levels = np.zeros(grid.T)
        covered = np.zeros(grid.T, dtype=int)
        for lo, hi, c in _normalize_blocks(blocks):
            if not 0 <= lo < hi <= half + 1:
                raise DomainError(f"positive-frequency block [{lo},{hi}) outside [0,{half}]")
            if c <= 0:
                raise ZeroLevel(f"block [{lo},{hi}) has non-positive level {c}")
            levels[lo:hi] = c
            covered[lo:hi] += 1
        if covered.max(initial=0) > 1:
            raise OverlappingBlocks(f"bins {np.flatnonzero(covered > 1).tolist()} covered twice")
        k = np.arange(1, half)
        levels[grid.T - k] = levels[k]
        return cls.from_levels(grid, levels, index)

    def positive_blocks(self) -> list[Block]:
        half = self.T // 2
        return [
            (lo, hi, float(self._levels[lo]))
            for lo, hi in _runs(self._levels[: half + 1])
            if self._levels[lo] > 0
        ]

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "blocks": [{"lo": lo, "hi": hi, "level": c} for lo, hi, c in self.positive_blocks()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict, index: int = 0) -> "PsdSpec":
        try:
            blocks = [(b["lo"], b["hi"], b["level"]) for b in doc["blocks"]]
            return cls.from_positive_blocks(doc["T"], blocks, index)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed PSD document: {exc!r}") from exc

    @classmethod
    def from_json(cls, text: str, index: int = 0) -> "PsdSpec":
        return cls.from_dict(json.loads(text), index)


def _normalize_blocks(blocks) -> list[Block]:
    out = []
    for b in blocks:
        if len(b) == 2:
            (lo, hi), c = b
        else:
            lo, hi, c = b
        if int(lo) != lo or int(hi) != hi:
            raise DomainError(f"block edges must be integers, got [{lo},{hi})")
        out.append((int(lo), int(hi), float(c)))
    return out


def build_psd_spec(grid, blocks, index: int = 0) -> PsdSpec:
    """Validate an explicit two-sided block list.

    ``blocks`` is a sequence of ``(lo, hi, level)`` or ``((lo, hi), level)``.
    """
    grid = _as_grid(grid)
    blocks = sorted(_normalize_blocks(blocks))
    covered = np.zeros(grid.T, dtype=int)
    levels = np.zeros(grid.T)
    for lo, hi, c in blocks:
        if not 0 <= lo < hi <= grid.T:
            raise DomainError(f"block [{lo},{hi}) outside grid of length {grid.T}")
        if not c > 0:
            raise ZeroLevel(f"block [{lo},{hi}) has non-positive level {c}")
        covered[lo:hi] += 1
        levels[lo:hi] = c
    if covered.max(initial=0) > 1:
        raise OverlappingBlocks(f"bins {np.flatnonzero(covered > 1).tolist()} covered twice")
    bad = np.flatnonzero(levels != levels[grid.mirror(np.arange(grid.T))])
    if bad.size:
        raise AsymmetricSpectrum(f"mirror bins missing or unequal at {bad.tolist()}")
    return PsdSpec(grid, tuple(blocks), index)


def random_psd_spec(
    grid,
    seed,
    max_blocks: int = 3,
    level_range: tuple[float, float] = (0.5, 2.0),
    width_range: tuple[int, int] = (4, 32),
    index: int = 0,
    max_retries: int = 200,
) -> PsdSpec:
    """Random symmetric block PSD.

    Draws ``1..max_blocks`` positive-frequency blocks of uniform width and
    level, places them without overlap on bins ``1..T/2``, then mirrors.
    A draw that cannot be placed is discarded and redrawn.
    """
    grid = _as_grid(grid)
    half = grid.T // 2
    wmin, wmax = (int(w) for w in width_range)
    lmin, lmax = (float(c) for c in level_range)
    if max_blocks < 1 or not 1 <= wmin <= wmax or not 0 < lmin <= lmax:
        raise ConfigError("empty or invalid parameter range for random PSD")
    if max_blocks * wmin > half:
        raise InfeasiblePlacement(
            f"{max_blocks} blocks of width >= {wmin} cannot fit in {half} positive bins"
        )
    wmax = min(wmax, half)
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        n_blocks = int(rng.integers(1, max_blocks + 1))
        widths = rng.integers(wmin, wmax + 1, size=n_blocks)
        levels = rng.uniform(lmin, lmax, size=n_blocks)
        free = np.ones(half + 2, dtype=bool)
        free[0] = free[half + 1] = False  # placement restricted to bins 1..T/2
        placed = []
        for w in widths:
            # start s is valid iff bins s..s+w-1 are all free
            window = np.convolve(free.astype(int), np.ones(w, dtype=int), "valid")
            starts = np.flatnonzero(window == w)
            if starts.size == 0:
                break
            s = int(rng.choice(starts))
            free[s : s + w] = False
            placed.append((s, s + int(w)))
        else:
            blocks = [(lo, hi, c) for (lo, hi), c in zip(placed, levels)]
            return PsdSpec.from_positive_blocks(grid, sorted(blocks), index)
    raise InfeasiblePlacement(f"could not place blocks without overlap in {max_retries} draws")


@dataclass(frozen=True)
class Subband:
    index: int
    lo: int
    hi: int
    active: tuple[int, ...]

    @property
    def width(self) -> int:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return (self.lo + self.hi) / 2

    @property
    def bins(self) -> np.ndarray:
        return np.arange(self.lo, self.hi)


@dataclass(frozen=True)
class SubbandPlan:
    grid: FrequencyGrid
    subbands: tuple[Subband, ...]
    n_sources: int

    def __len__(self):
        return len(self.subbands)

    def __iter__(self):
        return iter(self.subbands)

    def __getitem__(self, l) -> Subband:
        return self.subbands[l]

    @property
    def boundaries(self) -> list[int]:
        return sorted({e for s in self.subbands for e in (s.lo, s.hi)})

    @property
    def total_samples(self) -> int:
        return sum(s.width * len(s.active) for s in self.subbands)

    def widths_divide_T(self) -> bool:
        return all(self.grid.T % s.width == 0 for s in self.subbands)


def _shared_grid(specs: Sequence[PsdSpec]) -> FrequencyGrid | None:
    grids = {s.grid for s in specs}
    if len(grids) > 1:
        raise GridMismatch(f"specs use different grids: {sorted(g.T for g in grids)}")
    return next(iter(grids), None)


def partition_subbands(specs: Sequence[PsdSpec]) -> SubbandPlan:
    """Split the union of supports into maximal runs of constant active set.

    Source ``m`` in an active set refers to position ``m`` in ``specs``.
    """
    if not specs:
        raise ConfigError("need at least one PSD spec")
    grid = _shared_grid(specs)
    active = np.array([s.support for s in specs])
    subbands = []
    for lo, hi in _runs(active):
        members = tuple(int(m) for m in np.flatnonzero(active[:, lo]))
        if members:
            subbands.append(Subband(len(subbands), lo, hi, members))
    return SubbandPlan(grid, tuple(subbands), len(specs))


def total_bandwidth(specs: Sequence[PsdSpec]) -> int:
    _shared_grid(specs)
    return sum(s.bandwidth for s in specs)
