"""File formats for ensembles, mixing matrices and PSD specs.

Binary ensemble layout: little-endian header ``MBSE``, uint32 T, uint32 C,
uint8 role code, uint8 complex flag, then row-major float64 samples
(complex samples as interleaved real/imaginary pairs).
"""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, NonNumericCell
from .spectral import PsdSpec
from .synthesis import ROLES, MixingMatrix, SignalEnsemble

MAGIC = b"MBSE"
_HEADER = struct.Struct("<4sIIBB")


def _fmt(v: float) -> str:
    return repr(float(v))


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    matrix = np.atleast_2d(matrix)
    if np.iscomplexobj(matrix):
        raise DataError("CSV matrices must be real; use the binary format for complex data")
    with open(path, "w") as fh:
        for row in matrix:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append([float(c) for c in line.split(",")])
            except ValueError:
                raise NonNumericCell(f"{path}:{lineno}: non-numeric cell") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise DataError(f"{path}: empty or ragged matrix")
    return np.array(rows)


def write_ensemble_csv(path, ens: SignalEnsemble) -> None:
    write_matrix_csv(path, ens.data)


def read_ensemble_csv(path, role: str = "observed") -> SignalEnsemble:
    return SignalEnsemble(read_matrix_csv(path), role)


def write_ensemble_bin(path, ens: SignalEnsemble) -> None:
    header = _HEADER.pack(MAGIC, ens.T, ens.n_channels, ROLES.index(ens.role), ens.is_complex)
    dtype = "<c16" if ens.is_complex else "<f8"
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(ens.data, dtype=dtype).tobytes())


def read_ensemble_bin(path) -> SignalEnsemble:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated header")
    magic, T, C, role, is_complex = _HEADER.unpack_from(raw)
    if magic != MAGIC or role >= len(ROLES):
        raise DataError(f"{path}: not an ensemble file")
    dtype = "<c16" if is_complex else "<f8"
    data = np.frombuffer(raw, dtype=dtype, offset=_HEADER.size)
    if data.size != T * C:
        raise DataError(f"{path}: expected {T * C} samples, found {data.size}")
    return SignalEnsemble(data.reshape(C, T).copy(), ROLES[role])


def write_mixing_csv(path, U: MixingMatrix) -> None:
    write_matrix_csv(path, U.entries)


def read_mixing_csv(path) -> MixingMatrix:
    return MixingMatrix(read_matrix_csv(path))


def write_specs(directory, specs: Sequence[PsdSpec]) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for m, spec in enumerate(specs):
        p = directory / f"psd_{m:03d}.json"
        p.write_text(spec.to_json())
        paths.append(p)
    return paths


def read_specs(directory) -> list[PsdSpec]:
    paths = sorted(Path(directory).glob("psd_*.json"))
    if not paths:
        raise DataError(f"no psd_*.json files in {directory}")
    try:
        return [PsdSpec.from_json(p.read_text(), index=m) for m, p in enumerate(paths)]
    except json.JSONDecodeError as exc:
        raise DataError(f"bad PSD document: {exc}") from exc
