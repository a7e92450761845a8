import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multiband import (
    MixingMatrix,
    PhaseDraw,
    PsdSpec,
    SignalEnsemble,
    derive_seed,
    empirical_cross_correlation,
    mix,
    random_mixing_matrix,
    random_psd_spec,
    synthesize_latent,
    synthesize_latents,
)
from multiband.errors import DimensionError, SizeMismatch


def cosine_sum(levels, phases):
    """The synthesis formula evaluated term by term."""
    T = levels.size
    t = np.arange(T)
    out = np.sqrt(levels[0]) + (-1.0) ** t * np.sqrt(levels[T // 2])
    for k in range(1, T // 2):
        out = out + 2 * np.sqrt(levels[k]) * np.cos(2 * np.pi * k * t / T + phases[k - 1])
    return out / np.sqrt(T)


class TestSynthesizeLatent:
    def test_zero_psd(self):
        spec = PsdSpec.from_levels(16, np.zeros(16))
        assert np.array_equal(synthesize_latent(spec, np.zeros(7)), np.zeros(16))

    def test_single_tone(self):
        T, k0 = 32, 5
        spec = PsdSpec.from_positive_blocks(T, [(k0, k0 + 1, float(T))])
        a = synthesize_latent(spec, np.zeros(T // 2 - 1))
        expected = 2 * np.cos(2 * np.pi * k0 * np.arange(T) / T)
        np.testing.assert_allclose(a, expected, atol=1e-13)
        power = np.abs(np.fft.fft(a)) ** 2
        assert set(np.flatnonzero(power > 1e-20)) == {k0, T - k0}

    def test_dc_and_nyquist_terms(self):
        T = 16
        spec = PsdSpec.from_positive_blocks(T, [(0, 1, 4.0), (8, 9, 9.0)])
        a = synthesize_latent(spec, np.zeros(T // 2 - 1))
        np.testing.assert_allclose(a, (2 + 3 * (-1.0) ** np.arange(T)) / 4, atol=1e-14)

    @given(st.integers(0, 5000))
    @settings(max_examples=40, deadline=None)
    def test_matches_cosine_sum(self, seed):
        T = 64
        spec = random_psd_spec(T, seed, width_range=(1, 10))
        phases = PhaseDraw.draw(1, T, seed).phases[0]
        np.testing.assert_allclose(
            synthesize_latent(spec, phases), cosine_sum(spec.levels, phases), atol=1e-12
        )

    @given(st.integers(0, 5000))
    @settings(max_examples=40, deadline=None)
    def test_spectral_exactness(self, seed):
        T = 128
        spec = random_psd_spec(T, seed, width_range=(1, 16))
        a = synthesize_latent(spec, PhaseDraw.draw(1, T, seed + 1).phases[0])
        periodogram = np.abs(np.fft.fft(a)) ** 2 / T
        scale = spec.levels.max()
        assert np.all(periodogram[~spec.support] <= 1e-18 * scale)
        np.testing.assert_allclose(periodogram[spec.support], spec.levels[spec.support], rtol=1e-10)
        # Parseval: per-realization power is exactly the prescribed power
        assert np.mean(a**2) == pytest.approx(spec.power, rel=1e-12)

    def test_phase_size_checked(self):
        with pytest.raises(SizeMismatch):
            synthesize_latent(random_psd_spec(16, 0, width_range=(1, 2)), np.zeros(8))


class TestMixingMatrix:
    def test_square_invertible(self):
        U = random_mixing_matrix(3, 3, 5)
        assert np.linalg.matrix_rank(U.entries) == 3

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            random_mixing_matrix(2, 3, 0)

    def test_deterministic(self):
        a = random_mixing_matrix(8, 4, 1).entries
        b = random_mixing_matrix(8, 4, 1).entries
        assert np.array_equal(a, b)

    @given(st.integers(1, 8), st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_invariants(self, M, seed):
        U = random_mixing_matrix(8, M, seed)
        assert U.validate() is U
        assert np.all(np.any(U.entries != 0, axis=1))
        assert np.linalg.cond(U.entries) <= 1e6


class TestMix:
    def test_identity(self):
        A = SignalEnsemble(np.random.default_rng(0).standard_normal((3, 16)), "latent")
        X = mix(MixingMatrix(np.eye(3)), A)
        assert np.array_equal(X.data, A.data)
        assert X.role == "observed"

    def test_duplicated_row(self):
        rng = np.random.default_rng(1)
        u = rng.standard_normal((4, 2))
        u[3] = u[1]
        X = mix(MixingMatrix(u), SignalEnsemble(rng.standard_normal((2, 16)), "latent"))
        assert np.array_equal(X.data[1], X.data[3])

    def test_zero_latent_channel(self):
        rng = np.random.default_rng(2)
        u = rng.standard_normal((5, 3))
        a = rng.standard_normal((3, 16))
        a[1] = 0
        full = mix(MixingMatrix(u), SignalEnsemble(a, "latent")).data
        reduced = u[:, [0, 2]] @ a[[0, 2]]
        np.testing.assert_allclose(full, reduced, rtol=1e-14, atol=1e-14)

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            mix(MixingMatrix(np.ones((3, 2))), SignalEnsemble(np.ones((3, 8))))

    @given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 100))
    @settings(max_examples=30, deadline=None)
    def test_linearity(self, alpha, beta, seed):
        rng = np.random.default_rng(seed)
        # dyadic entries keep every product and sum exact
        U = MixingMatrix(rng.integers(-8, 8, (4, 2)) / 4.0)
        a = rng.integers(-64, 64, (2, 8)) / 8.0
        b = rng.integers(-64, 64, (2, 8)) / 8.0
        alpha, beta = round(alpha * 4) / 4, round(beta * 4) / 4
        lhs = mix(U, SignalEnsemble(alpha * a + beta * b, "latent")).data
        rhs = alpha * mix(U, SignalEnsemble(a, "latent")).data + beta * mix(
            U, SignalEnsemble(b, "latent")
        ).data
        assert np.array_equal(lhs, rhs)


class TestCrossCorrelation:
    def test_constant(self):
        np.testing.assert_allclose(empirical_cross_correlation(np.ones(16), np.ones(16), 5), 1.0)

    def test_zero(self):
        assert not np.any(empirical_cross_correlation(np.arange(16.0), np.zeros(16), 15))

    def test_lag_convention(self):
        a = np.zeros(8)
        b = np.zeros(8)
        a[3] = 1.0
        b[1] = 1.0
        r = empirical_cross_correlation(a, b, 3)
        # R(tau) = (1/T) sum_t a(t) b(t - tau): peak at tau = 2
        assert r[3 + 2] == pytest.approx(1 / 8)
        assert np.count_nonzero(r) == 1

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatch):
            empirical_cross_correlation(np.ones(8), np.ones(9), 2)
        with pytest.raises(SizeMismatch):
            empirical_cross_correlation(np.ones(8), np.ones(8), 8)

    def test_disjoint_supports_uncorrelated(self):
        T = 64
        a = PsdSpec.from_positive_blocks(T, [(3, 8, 1.0)])
        b = PsdSpec.from_positive_blocks(T, [(10, 20, 2.0)])
        A = synthesize_latents([a, b], PhaseDraw.draw(2, T, 9)).data
        r = empirical_cross_correlation(A[0], A[1], T - 1)
        assert np.max(np.abs(r)) <= 1e-10 * np.sqrt(a.power * b.power)

    def test_shared_support_uncorrelated_in_mean(self):
        T, trials = 64, 400
        specs = [PsdSpec.from_positive_blocks(T, [(3, 12, 1.0)])] * 2
        r = np.array([
            empirical_cross_correlation(*synthesize_latents(specs, PhaseDraw.draw(2, T, s)).data, 4)
            for s in range(trials)
        ])
        mean, sigma = r.mean(axis=0), r.std(axis=0)
        assert np.all(np.abs(mean) <= 3 * sigma / np.sqrt(trials))


def test_mixed_covariance_converges():
    """Lag-0 correlation of X approaches U diag(power) U^T over phase draws."""
    T, N, M = 64, 5, 3
    specs = [random_psd_spec(T, 10 + m, width_range=(4, 12), index=m) for m in range(M)]
    U = random_mixing_matrix(N, M, 3)
    target = U.entries @ np.diag([s.power for s in specs]) @ U.entries.T

    def deviation(trials):
        acc = np.zeros((N, N))
        for k in range(trials):
            X = mix(U, synthesize_latents(specs, PhaseDraw.draw(M, T, derive_seed(77, k)))).data
            acc += X @ X.T / T
        return np.linalg.norm(acc / trials - target)

    assert deviation(800) < 0.5 * deviation(20)
