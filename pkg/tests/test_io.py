import numpy as np
import pytest

from multiband import MixingMatrix, PsdSpec, SignalEnsemble
from multiband import io
from multiband.errors import DataError, NonNumericCell


def test_ensemble_csv_roundtrip(tmp_path):
    ens = SignalEnsemble(np.random.default_rng(0).standard_normal((3, 16)), "latent")
    io.write_ensemble_csv(tmp_path / "a.csv", ens)
    back = io.read_ensemble_csv(tmp_path / "a.csv", "latent")
    assert np.array_equal(back.data, ens.data)


@pytest.mark.parametrize("complex_", [False, True])
def test_ensemble_binary_roundtrip(tmp_path, complex_):
    rng = np.random.default_rng(1)
    data = rng.standard_normal((2, 8))
    if complex_:
        data = data + 1j * rng.standard_normal((2, 8))
    ens = SignalEnsemble(data, "reconstructed")
    io.write_ensemble_bin(tmp_path / "a.bin", ens)
    raw = (tmp_path / "a.bin").read_bytes()
    assert raw[:4] == b"MBSE"
    back = io.read_ensemble_bin(tmp_path / "a.bin")
    assert back.role == "reconstructed" and back.is_complex == complex_
    assert np.array_equal(back.data, data)


def test_binary_rejects_garbage(tmp_path):
    (tmp_path / "x.bin").write_bytes(b"nope" + bytes(20))
    with pytest.raises(DataError):
        io.read_ensemble_bin(tmp_path / "x.bin")


def test_mixing_csv(tmp_path):
    U = MixingMatrix(np.random.default_rng(2).standard_normal((4, 2)))
    io.write_mixing_csv(tmp_path / "u.csv", U)
    assert np.array_equal(io.read_mixing_csv(tmp_path / "u.csv").entries, U.entries)


def test_matrix_csv_non_numeric(tmp_path):
    (tmp_path / "u.csv").write_text("1,2\n3,oops\n")
    with pytest.raises(NonNumericCell, match="u.csv:2"):
        io.read_matrix_csv(tmp_path / "u.csv")


def test_specs_roundtrip(tmp_path):
    specs = [PsdSpec.from_positive_blocks(32, [(2, 5, 1.0)], 0),
             PsdSpec.from_positive_blocks(32, [(7, 12, 0.5), (16, 17, 2.0)], 1)]
    io.write_specs(tmp_path, specs)
    back = io.read_specs(tmp_path)
    assert [s.index for s in back] == [0, 1]
    for a, b in zip(specs, back):
        assert np.array_equal(a.levels, b.levels)
