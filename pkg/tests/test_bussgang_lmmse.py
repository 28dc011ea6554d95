import itertools

import numpy as np
import pytest
import scipy.stats

from onebit_mimo.bussgang_lmmse import (
    QUANT_NOISE_POWER,
    _arcsine_law,
    _hermitian_solve,
    bussgang_gain,
    dense_bussgang_model,
    dense_estimate_quality,
    dense_lmmse_estimate,
    dense_pilot_autocorrelation,
    estimate_quality,
    estimator_matrix,
    gain_squared,
    lmmse_estimate,
    low_snr_quality,
    pilot_autocorrelation,
    quantization_noise_covariance,
)
from onebit_mimo.errors import DimensionError, DomainError, NumericalError
from onebit_mimo.system_model import (
    SystemConfig,
    complex_gaussian,
    draw_channel,
    make_dft_pilots,
    quantize_one_bit,
    random_pilots,
    simulate_training,
    trial_rng,
)


class TestBussgangGain:
    def test_known_values(self):
        assert bussgang_gain(8, 0.125).alpha == pytest.approx(0.5641895835, abs=1e-10)
        assert bussgang_gain(8, 0.1).alpha == pytest.approx(0.5947080387, abs=1e-10)

    def test_zero_power(self):
        assert bussgang_gain(4, 0.0).alpha_sq == pytest.approx(2 / np.pi)

    def test_vectorized(self):
        np.testing.assert_allclose(gain_squared(8, np.array([0.0, 0.125])), [2 / np.pi, 1 / np.pi])

    @pytest.mark.parametrize("rho", [-0.1, float("nan"), float("inf")])
    def test_rejects_bad_power(self, rho):
        with pytest.raises(DomainError):
            bussgang_gain(8, rho)


class TestPilotAutocorrelation:
    @pytest.mark.parametrize("tau,K,rho", [(8, 8, 0.1), (16, 8, 0.1), (16, 8, 10.0), (8, 1, 1.0)])
    def test_structure(self, tau, K, rho):
        C = pilot_autocorrelation(make_dft_pilots(tau, K), rho).C_tau
        np.testing.assert_allclose(np.diag(C), 1.0, atol=1e-12)
        np.testing.assert_allclose(C, C.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(C)[0] > 0

    def test_square_dft_gives_identity(self, dft_pilots):
        np.testing.assert_allclose(pilot_autocorrelation(dft_pilots, 0.7).C_tau, np.eye(8), atol=1e-12)

    def test_materialize(self, long_pilots):
        autocorr = pilot_autocorrelation(long_pilots, 0.1).materialize(3)
        assert autocorr.dense.shape == (48, 48)
        np.testing.assert_array_equal(autocorr.dense, np.kron(autocorr.C_tau, np.eye(3)))

    def test_needs_unit_modulus_pilots(self, rng):
        with pytest.raises(DimensionError, match="dense"):
            pilot_autocorrelation(random_pilots(8, 4, rng), 0.1)


class TestQuantizationNoise:
    def test_diagonal(self, long_pilots):
        C_qq = quantization_noise_covariance(long_pilots, 0.3)
        np.testing.assert_allclose(np.diag(C_qq), QUANT_NOISE_POWER, atol=1e-12)

    def test_low_snr_limit_is_white(self, long_pilots):
        C_qq = quantization_noise_covariance(long_pilots, 1e-6)
        np.testing.assert_allclose(C_qq, QUANT_NOISE_POWER * np.eye(16), atol=1e-9)

    def test_matches_simulation(self):
        M, K, tau, rho, trials = 256, 4, 6, 0.5, 100
        pilots = make_dft_pilots(tau, K)
        alpha = bussgang_gain(K, rho).alpha
        cross = np.zeros((tau, tau), dtype=complex)
        quant = np.zeros((tau, tau), dtype=complex)
        quantized = np.zeros((tau, tau), dtype=complex)
        for i in range(trials):
            rng = trial_rng(5, i)
            H = draw_channel(M, K, rng).H
            Y = np.sqrt(rho) * H @ pilots.entries.T + complex_gaussian((M, tau), rng)
            R = quantize_one_bit(Y).entries
            Q = R - alpha * Y
            cross += Q.T @ Y.conj()
            quant += Q.T @ Q.conj()
            quantized += R.T @ R.conj()
        n = M * trials
        # distortion is uncorrelated with the quantizer input
        assert np.max(np.abs(cross / n)) < 0.05
        np.testing.assert_allclose(quantized / n, pilot_autocorrelation(pilots, rho).C_tau, atol=0.04)
        np.testing.assert_allclose(quant / n, quantization_noise_covariance(pilots, rho), atol=0.04)


class TestNumericalGuards:
    def test_arcsine_argument_above_one(self):
        with pytest.raises(NumericalError):
            _arcsine_law(np.array([[1.5 + 0j]]))

    def test_arcsine_clamps_rounding(self):
        out = _arcsine_law(np.array([[1.0 + 1e-14 + 0j]]))
        assert out[0, 0] == pytest.approx(1.0)

    def test_singular_matrix(self):
        with pytest.raises(NumericalError):
            _hermitian_solve(np.ones((2, 2), dtype=complex), np.eye(2))


def _dense_grid():
    for M, K in itertools.product((1, 2, 4), (1, 2, 4)):
        for tau in sorted({K, K + 1, 8}):
            for rho in (0.01, 0.1, 1.0):
                yield M, K, tau, rho


class TestDenseEquivalence:
    @pytest.mark.parametrize("M,K,tau,rho", list(_dense_grid()))
    def test_estimator_matches_dense(self, M, K, tau, rho):
        pilots = make_dft_pilots(tau, K)
        rng = np.random.default_rng(M * 100 + K * 10 + tau)
        r_p = quantize_one_bit(complex_gaussian((M, tau), rng))

        fast = pilot_autocorrelation(pilots, rho)
        dense = dense_pilot_autocorrelation(pilots, rho, M)
        np.testing.assert_allclose(dense.dense, fast.kron(M), atol=1e-9)
        np.testing.assert_allclose(dense.C_tau, fast.C_tau, atol=1e-9)

        np.testing.assert_allclose(dense_lmmse_estimate(r_p, pilots, rho).H_hat,
                                   lmmse_estimate(r_p, pilots, rho).H_hat, atol=1e-9)
        assert dense_estimate_quality(pilots, rho, M).eta_sq == pytest.approx(
            estimate_quality(pilots, rho, M).eta_sq, abs=1e-9)

    def test_dense_gain_matches_scalar_gain(self, long_pilots):
        model = dense_bussgang_model(long_pilots, 0.2, 3)
        np.testing.assert_allclose(model.A_p, bussgang_gain(8, 0.2).alpha, atol=1e-12)
        np.testing.assert_allclose(model.restrict_to_antenna(2),
                                   pilot_autocorrelation(long_pilots, 0.2).C_tau, atol=1e-12)

    def test_dense_path_takes_random_pilots(self, rng):
        pilots = random_pilots(6, 3, rng)
        quality = dense_estimate_quality(pilots, 0.1, 2)
        assert 0.0 < quality.eta_sq < 1.0
        r_p = quantize_one_bit(complex_gaussian((2, 6), rng))
        assert dense_lmmse_estimate(r_p, pilots, 0.1).H_hat.shape == (2, 3)


class TestLmmseEstimate:
    def test_shape_and_error(self, small_config, rng):
        pilots = make_dft_pilots(small_config.tau, small_config.K)
        H = draw_channel(small_config.M, small_config.K, rng)
        r_p = simulate_training(small_config, H, pilots, rng)
        estimate = lmmse_estimate(r_p, pilots, small_config.rho_p, H)
        assert (estimate.M, estimate.K) == (small_config.M, small_config.K)
        np.testing.assert_allclose(estimate.E, H.H - estimate.H_hat)

    def test_rejects_wrong_observation(self, long_pilots):
        with pytest.raises(DimensionError):
            lmmse_estimate(quantize_one_bit(np.ones((4, 8))), long_pilots, 0.1)

    def test_zero_power_gives_zero_estimate(self, long_pilots):
        estimate = lmmse_estimate(quantize_one_bit(np.ones((4, 16))), long_pilots, 0.0)
        assert not np.any(estimate.H_hat)
        assert not np.any(estimator_matrix(long_pilots, 0.0))

    def test_error_is_uncorrelated_with_estimate(self):
        config = SystemConfig(M=64, K=4, T=50, tau=8, rho_p=0.5, rho_d=0.5)
        pilots = make_dft_pilots(config.tau, config.K)
        trials = 200
        cross = np.zeros((config.K, config.K), dtype=complex)
        for i in range(trials):
            rng = trial_rng(13, i)
            H = draw_channel(config.M, config.K, rng)
            estimate = lmmse_estimate(simulate_training(config, H, pilots, rng), pilots, config.rho_p, H)
            cross += estimate.H_hat.T @ estimate.E.conj()
        # E[h_hat_k conj(e_j)] over antennas and trials
        assert np.max(np.abs(cross / (config.M * trials))) < 0.03

    def test_estimate_is_close_to_gaussian(self):
        config = SystemConfig(M=128, K=8, T=200, tau=16, rho_p=0.1, rho_d=0.1)
        pilots = make_dft_pilots(config.tau, config.K)
        W = estimator_matrix(pilots, config.rho_p)
        samples = []
        for i in range(40):
            rng = trial_rng(9, i)
            H = draw_channel(config.M, config.K, rng)
            samples.append((simulate_training(config, H, pilots, rng).entries @ W.T).real.ravel())
        x = np.concatenate(samples)
        assert abs(scipy.stats.skew(x)) < 0.1
        assert abs(scipy.stats.kurtosis(x)) < 0.5


class TestEstimateQuality:
    def test_known_value(self, dft_pilots):
        quality = estimate_quality(dft_pilots, 0.1, 128)
        assert quality.sigma_sq == pytest.approx(0.2829421211, abs=1e-9)
        # square DFT pilots whiten the quantized observation
        assert quality.eta_sq == pytest.approx(quality.sigma_sq, abs=1e-12)
        assert quality.mse == pytest.approx(1.0 - quality.eta_sq)

    def test_does_not_depend_on_M(self, long_pilots):
        assert estimate_quality(long_pilots, 0.1, 4).eta_sq == estimate_quality(long_pilots, 0.1, 512).eta_sq

    def test_zero_power(self, long_pilots):
        quality = estimate_quality(long_pilots, 0.0, 64)
        assert quality.eta_sq == 0.0
        assert quality.mse == 1.0

    @pytest.mark.parametrize("rho", [1e-4, 1e-2, 0.1, 1.0, 10.0])
    def test_bounded(self, long_pilots, rho):
        quality = estimate_quality(long_pilots, rho, 64)
        assert 0.0 <= quality.eta_sq <= 1.0
        assert 0.0 <= quality.sigma_sq <= 1.0

    def test_improves_with_training_power(self, long_pilots):
        etas = [estimate_quality(long_pilots, rho, 64).eta_sq for rho in (1e-3, 1e-2, 1e-1)]
        assert etas[0] < etas[1] < etas[2]

    @pytest.mark.parametrize("tau", [8, 16])
    @pytest.mark.parametrize("k_rho", [0.001, 0.01, 0.1])
    def test_low_snr_surrogate(self, tau, k_rho):
        rho = k_rho / 8
        quality = estimate_quality(make_dft_pilots(tau, 8), rho, 64)
        assert abs(quality.eta_sq - quality.sigma_sq) / quality.sigma_sq < 0.05

    def test_surrogate_vectorized(self):
        taus = np.array([8, 16, 32])
        np.testing.assert_allclose(low_snr_quality(taus, 0.1, 8),
                                   [low_snr_quality(t, 0.1, 8) for t in taus])

    def test_surrogate_rejects_bad_input(self):
        with pytest.raises(DomainError):
            low_snr_quality(0, 0.1, 8)
        with pytest.raises(DomainError):
            low_snr_quality(8, -1.0, 8)

    def test_rejects_bad_M(self, long_pilots):
        with pytest.raises(DimensionError):
            estimate_quality(long_pilots, 0.1, 0)
