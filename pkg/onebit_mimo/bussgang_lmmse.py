"""
Bussgang LMMSE Channel Estimation - Python
Author: NimbusDFIR
Description: Bussgang linearization of the one-bit quantizer, arcsine-law
autocorrelation of the quantized pilots, the LMMSE channel estimator and its
quality metrics.

With unit-modulus pilots C_yy = (rho_p Phi Phi^H + I) (x) I_M, every diagonal
entry equals K rho_p + 1, and the elementwise arcsine keeps the Kronecker
structure. So C_rr = C_tau (x) I_M and all M*tau sized algebra reduces to
tau x tau. The dense_* functions evaluate the unreduced expressions and are
meant for validation on small instances and for non-unit-modulus pilots.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import DimensionError, DomainError, NumericalError
from .system_model import PilotMatrix, QuantizedBlock, ChannelSample, frozen_array

logger = logging.getLogger(__name__)

TWO_OVER_PI = 2.0 / np.pi
QUANT_NOISE_POWER = 1.0 - TWO_OVER_PI
ARCSIN_CLAMP_TOL = 1e-12
MIN_EIGENVALUE = 1e-9
UNIT_MODULUS_TOL = 1e-12


@dataclass(frozen=True)
class BussgangGain:
    """Scalar Bussgang gain: A = alpha * I."""
    alpha: float

    @property
    def alpha_sq(self) -> float:
        return self.alpha * self.alpha


@dataclass(frozen=True)
class PilotAutocorrelation:
    """tau x tau arcsine-law matrix with C_rr = C_tau (x) I_M."""
    C_tau: np.ndarray
    dense: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "C_tau", frozen_array(self.C_tau))
        if self.dense is not None:
            object.__setattr__(self, "dense", frozen_array(self.dense))

    def kron(self, M: int) -> np.ndarray:
        return np.kron(self.C_tau, np.eye(M))

    def materialize(self, M: int) -> "PilotAutocorrelation":
        """Copy with the dense M*tau x M*tau form filled in."""
        return replace(self, dense=self.kron(M))


@dataclass(frozen=True)
class EstimatorQuality:
    eta_sq: float
    mse: float
    sigma_sq: float


@dataclass(frozen=True)
class ChannelEstimate:
    """LMMSE estimate H_hat; E = H - H_hat when the true channel is known."""
    H_hat: np.ndarray
    E: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "H_hat", frozen_array(self.H_hat))
        if self.E is not None:
            object.__setattr__(self, "E", frozen_array(self.E))

    @property
    def M(self) -> int:
        return self.H_hat.shape[0]

    @property
    def K(self) -> int:
        return self.H_hat.shape[1]


@dataclass(frozen=True)
class DenseBussgangModel:
    """Unreduced training-phase model: diag(A_p), Phi_tilde and C_rr."""
    A_p: np.ndarray
    Phi_tilde: np.ndarray
    C_rr: np.ndarray
    M: int

    def restrict_to_antenna(self, m: int = 0) -> np.ndarray:
        """tau x tau block of C_rr seen by antenna m (vec index t*M + m)."""
        return self.C_rr[m::self.M, m::self.M]


def _check_power(rho, name="rho"):
    rho = np.asarray(rho, dtype=float)
    if np.any(~np.isfinite(rho)) or np.any(rho < 0):
        raise DomainError(f"{name} must be a finite nonnegative linear SNR, got {rho!r}")


def gain_squared(K, rho):
    """alpha^2 = (2/pi) / (K rho + 1). Accepts numpy arrays."""
    return TWO_OVER_PI / (np.multiply(K, rho) + 1.0)


def bussgang_gain(K: int, rho: float) -> BussgangGain:
    if K < 1:
        raise DomainError(f"K must be positive, got {K}")
    _check_power(rho)
    return BussgangGain(float(np.sqrt(gain_squared(K, rho))))


def low_snr_quality(tau, rho_p, K):
    """Low-SNR surrogate sigma^2 for the estimate variance.

    Replaces the quantization-noise covariance by (1 - 2/pi) I, which removes
    the arcsine and gives alpha^2 tau rho / (alpha^2 tau rho + alpha^2 + 1 - 2/pi).
    Accepts numpy arrays for tau and rho_p.
    """
    if np.any(np.asarray(tau) < 1):
        raise DomainError(f"tau must be >= 1, got {tau!r}")
    _check_power(rho_p, "rho_p")
    a_sq = gain_squared(K, rho_p)
    signal = a_sq * np.multiply(tau, rho_p)
    return signal / (signal + a_sq + QUANT_NOISE_POWER)


def _arcsine_law(normalized: np.ndarray) -> np.ndarray:
    """(2/pi) [arcsin(Re) + j arcsin(Im)], arguments clamped to [-1, 1]."""
    re, im = normalized.real, normalized.imag
    worst = max(np.max(np.abs(re), initial=0.0), np.max(np.abs(im), initial=0.0))
    if worst > 1.0 + ARCSIN_CLAMP_TOL:
        raise NumericalError(f"arcsine-law argument {worst!r} exceeds 1")
    return TWO_OVER_PI * (np.arcsin(np.clip(re, -1.0, 1.0)) + 1j * np.arcsin(np.clip(im, -1.0, 1.0)))


def _hermitian_solve(C: np.ndarray, B: np.ndarray) -> np.ndarray:
    smallest = scipy.linalg.eigvalsh(C)[0]
    if smallest <= MIN_EIGENVALUE:
        raise NumericalError(f"autocorrelation matrix is singular (smallest eigenvalue {smallest:.3e})")
    return scipy.linalg.solve(C, B, assume_a="her")


def _require_unit_modulus(pilots: PilotMatrix):
    if not np.all(np.abs(np.abs(pilots.entries) - 1.0) <= UNIT_MODULUS_TOL):
        raise DimensionError(
            f"Kronecker-reduced path needs unit-modulus pilots (got kind={pilots.kind!r}); "
            "use the dense_* functions instead")


def pilot_autocorrelation(pilots: PilotMatrix, rho_p: float) -> PilotAutocorrelation:
    _require_unit_modulus(pilots)
    _check_power(rho_p, "rho_p")
    C_yy = rho_p * pilots.outer() + np.eye(pilots.tau)
    return PilotAutocorrelation(_arcsine_law(C_yy / (pilots.K * rho_p + 1.0)))


def quantization_noise_covariance(pilots: PilotMatrix, rho_p: float) -> np.ndarray:
    """Reduced C_qq = C_tau - alpha_p^2 (rho_p Phi Phi^H + I); its diagonal is 1 - 2/pi.

    At low SNR the off-diagonal part vanishes and C_qq ~ (1 - 2/pi) I.
    """
    C_tau = pilot_autocorrelation(pilots, rho_p).C_tau
    a_sq = gain_squared(pilots.K, rho_p)
    return C_tau - a_sq * (rho_p * pilots.outer() + np.eye(pilots.tau))


def estimator_matrix(pilots: PilotMatrix, rho_p: float) -> np.ndarray:
    """K x tau combiner W = alpha_p sqrt(rho_p) Phi^H C_tau^{-1}; row m of H_hat is W r_m."""
    C_tau = pilot_autocorrelation(pilots, rho_p).C_tau
    scale = bussgang_gain(pilots.K, rho_p).alpha * np.sqrt(rho_p)
    if scale == 0.0:
        return np.zeros((pilots.K, pilots.tau), dtype=complex)
    return scale * _hermitian_solve(C_tau, pilots.entries).conj().T


def _with_truth(H_hat: np.ndarray, H: Optional[ChannelSample]) -> ChannelEstimate:
    if H is None:
        return ChannelEstimate(H_hat)
    if H.H.shape != H_hat.shape:
        raise DimensionError(f"true channel {H.H.shape} does not match estimate {H_hat.shape}")
    return ChannelEstimate(H_hat, H.H - H_hat)


def lmmse_estimate(r_p: QuantizedBlock, pilots: PilotMatrix, rho_p: float,
                   H: Optional[ChannelSample] = None) -> ChannelEstimate:
    """Bussgang LMMSE estimate from the M x tau quantized pilots."""
    R = r_p.entries
    if R.ndim != 2 or R.shape[1] != pilots.tau:
        raise DimensionError(f"pilot observation has shape {R.shape}, expected (M, {pilots.tau})")
    W = estimator_matrix(pilots, rho_p)
    return _with_truth(R @ W.T, H)


def estimate_quality(pilots: PilotMatrix, rho_p: float, M: int) -> EstimatorQuality:
    """eta^2, normalized MSE and sigma^2. The reduced eta^2 does not depend on M."""
    if M < 1:
        raise DimensionError(f"M must be positive, got {M}")
    W = estimator_matrix(pilots, rho_p)
    scale = bussgang_gain(pilots.K, rho_p).alpha * np.sqrt(rho_p)
    eta_sq = scale * float(np.real(np.trace(W @ pilots.entries))) / pilots.K
    sigma_sq = float(low_snr_quality(pilots.tau, rho_p, pilots.K))
    logger.debug("tau=%d K=%d rho_p=%g: eta_sq=%.6f sigma_sq=%.6f",
                 pilots.tau, pilots.K, rho_p, eta_sq, sigma_sq)
    return EstimatorQuality(eta_sq=eta_sq, mse=1.0 - eta_sq, sigma_sq=sigma_sq)


# Dense path


def dense_bussgang_model(pilots: PilotMatrix, rho_p: float, M: int) -> DenseBussgangModel:
    _check_power(rho_p, "rho_p")
    Phi_bar = np.kron(pilots.entries, np.sqrt(rho_p) * np.eye(M))
    C_yy = Phi_bar @ Phi_bar.conj().T + np.eye(M * pilots.tau)
    sigma = np.real(np.diag(C_yy))
    inv_sqrt = 1.0 / np.sqrt(sigma)
    X = inv_sqrt[:, None] * C_yy.real * inv_sqrt[None, :]
    Y = inv_sqrt[:, None] * C_yy.imag * inv_sqrt[None, :]
    A_p = np.sqrt(TWO_OVER_PI) * inv_sqrt
    return DenseBussgangModel(
        A_p=A_p,
        Phi_tilde=A_p[:, None] * Phi_bar,
        C_rr=_arcsine_law(X + 1j * Y),
        M=M,
    )


def dense_pilot_autocorrelation(pilots: PilotMatrix, rho_p: float, M: int) -> PilotAutocorrelation:
    model = dense_bussgang_model(pilots, rho_p, M)
    return PilotAutocorrelation(model.restrict_to_antenna(0), dense=model.C_rr)


def dense_lmmse_estimate(r_p: QuantizedBlock, pilots: PilotMatrix, rho_p: float,
                         H: Optional[ChannelSample] = None) -> ChannelEstimate:
    R = r_p.entries
    M = R.shape[0]
    model = dense_bussgang_model(pilots, rho_p, M)
    h_hat = model.Phi_tilde.conj().T @ _hermitian_solve(model.C_rr, R.reshape(-1, order="F"))
    return _with_truth(h_hat.reshape(M, pilots.K, order="F"), H)


def dense_estimate_quality(pilots: PilotMatrix, rho_p: float, M: int) -> EstimatorQuality:
    model = dense_bussgang_model(pilots, rho_p, M)
    gain = model.Phi_tilde.conj().T @ _hermitian_solve(model.C_rr, model.Phi_tilde)
    eta_sq = float(np.real(np.trace(gain))) / (M * pilots.K)
    sigma_sq = float(low_snr_quality(pilots.tau, rho_p, pilots.K))
    return EstimatorQuality(eta_sq=eta_sq, mse=1.0 - eta_sq, sigma_sq=sigma_sq)
