import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_model
from multiband import (
    ExperimentReport,
    MixingMatrix,
    PsdSpec,
    check_correlatedness_premises,
    nmse_db,
    rate_comparison,
    verify_density_bound,
)
from multiband.errors import ZeroReference


class TestNmse:
    def test_perfect_clamped(self):
        x = np.random.default_rng(0).standard_normal((3, 16))
        assert nmse_db(x, x) == -300.0

    def test_zero_estimate(self):
        x = np.random.default_rng(1).standard_normal((3, 16))
        assert nmse_db(x, np.zeros_like(x)) == pytest.approx(0.0, abs=1e-12)

    def test_half(self):
        x = np.random.default_rng(2).standard_normal((3, 16))
        assert nmse_db(x, x / 2) == pytest.approx(-6.020599913279624, abs=1e-12)

    def test_zero_reference(self):
        with pytest.raises(ZeroReference):
            nmse_db(np.zeros(4), np.ones(4))

    @given(st.integers(0, 1000), st.sampled_from([-8.0, -0.5, 0.25, 2.0, 1024.0]))
    @settings(max_examples=40, deadline=None)
    def test_scale_invariance(self, seed, alpha):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(32)
        xh = x + 1e-3 * rng.standard_normal(32)
        # power-of-two scalings are exact in floating point
        assert nmse_db(alpha * x, alpha * xh) == nmse_db(x, xh)


class TestPremises:
    def test_generic(self):
        U = np.random.default_rng(0).standard_normal((8, 4))
        assert check_correlatedness_premises(U, np.ones(4))["verdict"] is True

    def test_square(self):
        rep = check_correlatedness_premises(np.eye(3) + 1, np.ones(3))
        assert rep["N_gt_M"] is False and rep["verdict"] is False

    def test_zero_row(self):
        U = np.random.default_rng(0).standard_normal((5, 2))
        U[3] = 0
        rep = check_correlatedness_premises(MixingMatrix(U), np.ones(2))
        assert rep["all_rows_nonzero"] is False and rep["verdict"] is False

    def test_zero_power(self):
        rep = check_correlatedness_premises(np.ones((4, 2)), [1.0, 0.0])
        assert rep["all_powers_positive"] is False


def _report(**kw):
    base = dict(T=512, N=8, M=4, bandwidth=300, multiband_total_samples=300, nmse_db=-250.0,
                baseline_total_samples=1200, widths_divide_T=False)
    base.update(kw)
    return ExperimentReport(**base)


class TestDensityBound:
    def test_standard(self):
        rep = _report()
        assert rep.density == rep.theoretical_density == 300 / 4096
        assert verify_density_bound(rep)

    def test_dropped_subband(self):
        assert not verify_density_bound(_report(multiband_total_samples=280, nmse_db=-9.0))

    def test_full_nyquist(self):
        rep = _report(bandwidth=4096, multiband_total_samples=4096, nmse_db=-300.0, M=8)
        assert rep.density == 1.0 and verify_density_bound(rep)

    def test_threshold_policy(self):
        assert not verify_density_bound(_report(nmse_db=-100.0, widths_divide_T=True))
        assert verify_density_bound(_report(nmse_db=-100.0, widths_divide_T=False))
        assert not verify_density_bound(_report(nmse_db=-100.0), nmse_threshold_db=-150)

    def test_json(self):
        import json
        doc = json.loads(_report(condition_numbers={0: {"temporal": 1.0}}).to_json())
        assert doc["theoretical_density"] == 300 / 4096
        assert doc["condition_numbers"] == {"0": {"temporal": 1.0}}


class TestRateComparison:
    def test_single_source(self):
        specs, U, A, X = make_model(N=8, M=1, seed=1)
        r = rate_comparison(U, specs)
        assert r["separate"] == 8 * r["multiband"] and r["ratio"] == 8

    def test_single_channel(self):
        specs, U, A, X = make_model(N=1, M=1, seed=2)
        assert rate_comparison(U, specs)["ratio"] == 1

    def test_disjoint_square(self):
        T, N = 64, 3
        specs = [PsdSpec.from_positive_blocks(T, [(2 + 8 * m, 7 + 8 * m, 1.0)], m) for m in range(N)]
        U = MixingMatrix(np.random.default_rng(0).standard_normal((N, N)))
        r = rate_comparison(U, specs)
        B = sum(s.bandwidth for s in specs)
        assert r["multiband"] == B and r["separate"] == N * B and r["ratio"] == N

    @given(st.integers(0, 500), st.integers(1, 6))
    @settings(max_examples=30, deadline=None)
    def test_dense_ratio_at_least_one(self, seed, M):
        specs, U, A, X = make_model(N=6, M=M, seed=seed)
        assert rate_comparison(U, specs)["ratio"] >= 1
