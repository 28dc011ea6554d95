"""
Rate Analysis - Python
Author: NimbusDFIR
Description: MRC detection, Monte Carlo evaluation of the ergodic achievable
rate lower bound, its closed-form approximation, the infinite-resolution
baseline and Monte Carlo checks of the moments behind the closed form.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .bussgang_lmmse import (
    QUANT_NOISE_POWER,
    ChannelEstimate,
    estimate_quality,
    estimator_matrix,
    gain_squared,
)
from .errors import ConfigError, DimensionError, DomainError
from .system_model import (
    QuantizedBlock,
    SystemConfig,
    draw_channel,
    draw_symbols,
    frozen_array,
    make_dft_pilots,
    simulate_data_slot,
    simulate_training,
    trial_rng,
)

logger = logging.getLogger(__name__)

MIN_MOMENT_TRIALS = 1000


@dataclass(frozen=True)
class RateBreakdown:
    """SINR terms of one user for one realization."""
    signal: float
    ui: float
    est_err: float
    awgn: float
    quant: float
    rate_bits: float

    @property
    def interference_plus_noise(self) -> float:
        return self.ui + self.est_err + self.awgn + self.quant


@dataclass(frozen=True)
class RateResult:
    per_user: np.ndarray
    mean: float
    trials: int
    std_err: float

    def __post_init__(self):
        object.__setattr__(self, "per_user", frozen_array(self.per_user, dtype=float))

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.per_user))


@dataclass(frozen=True)
class MomentCheck:
    name: str
    simulated: float
    predicted: float
    rel_error: float


@dataclass(frozen=True)
class MomentReport:
    checks: Tuple[MomentCheck, ...]
    eta_sq: float
    alpha_d: float
    trials: int

    def by_name(self, name: str) -> MomentCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    @property
    def worst_rel_error(self) -> float:
        return max(check.rel_error for check in self.checks)


def mrc_detect(estimate: ChannelEstimate, r_d: QuantizedBlock) -> np.ndarray:
    """Soft symbols s_hat = H_hat^H r_d, one per user."""
    r = r_d.entries.reshape(-1)
    if r.shape[0] != estimate.M:
        raise DimensionError(f"received {r.shape[0]} samples for an {estimate.M}-antenna estimate")
    return estimate.H_hat.conj().T @ r


def _sinr_terms(H_hat: np.ndarray, E: Optional[np.ndarray], rho_d: float):
    """Per-user (signal, ui, est_err, awgn, quant) with A_d = alpha_d I, C_qq = (1 - 2/pi) I."""
    a_sq = gain_squared(H_hat.shape[1], rho_d)
    G = H_hat.conj().T @ H_hat
    norms = np.real(np.diag(G))
    signal = rho_d * a_sq * norms ** 2
    ui = rho_d * a_sq * (np.sum(np.abs(G) ** 2, axis=1) - norms ** 2)
    if E is None:
        est_err = np.zeros_like(norms)
    else:
        est_err = rho_d * a_sq * np.sum(np.abs(H_hat.conj().T @ E) ** 2, axis=1)
    awgn = a_sq * norms
    quant = QUANT_NOISE_POWER * norms
    return signal, np.maximum(ui, 0.0), est_err, awgn, quant


def _rates(signal, ui, est_err, awgn, quant) -> np.ndarray:
    denominator = ui + est_err + awgn + quant
    # zero estimate: no signal and no noise at the combiner output
    sinr = np.divide(signal, denominator, out=np.zeros_like(signal), where=denominator > 0)
    return np.log2(1.0 + sinr)


def sinr_breakdown(H_hat: np.ndarray, E: Optional[np.ndarray], rho_d: float) -> Tuple[RateBreakdown, ...]:
    terms = _sinr_terms(np.asarray(H_hat), E, rho_d)
    rates = _rates(*terms)
    return tuple(
        RateBreakdown(*(float(t[k]) for t in terms), rate_bits=float(rates[k]))
        for k in range(len(rates))
    )


def _check_trials(trials, minimum=1):
    if isinstance(trials, bool) or int(trials) != trials or trials < minimum:
        raise DomainError(f"trials must be an integer >= {minimum}, got {trials!r}")
    return int(trials)


def _run_trials(trial: Callable[[int], np.ndarray], trials: int, width: int, workers: int) -> np.ndarray:
    """trials x width array; row i comes from trial(i) whatever the worker count."""
    out = np.empty((trials, width))
    if workers <= 1:
        for i in range(trials):
            out[i] = trial(i)
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for i, row in zip(range(trials), pool.map(trial, range(trials))):
            out[i] = row
    return out


def ergodic_rate_mc(config: SystemConfig, trials: int, seed: Optional[int] = None,
                    perfect_csi: bool = False, workers: int = 1) -> RateResult:
    """Monte Carlo average of log2(1 + SINR_k) over channel and training noise.

    Each trial draws H and the training noise from trial_rng(seed, i), forms the
    LMMSE estimate and evaluates the per-realization SINR. With perfect_csi the
    estimate is H itself and the estimation-error term vanishes.
    """
    trials = _check_trials(trials)
    seed = config.seed if seed is None else seed
    pilots = make_dft_pilots(config.tau, config.K)
    W = estimator_matrix(pilots, config.rho_p)

    def trial(i):
        rng = trial_rng(seed, i)
        H = draw_channel(config.M, config.K, rng)
        if perfect_csi:
            return _rates(*_sinr_terms(H.H, None, config.rho_d))
        H_hat = simulate_training(config, H, pilots, rng).entries @ W.T
        return _rates(*_sinr_terms(H_hat, H.H - H_hat, config.rho_d))

    rates = _run_trials(trial, trials, config.K, workers)
    per_trial = rates.mean(axis=1)
    std_err = float(np.std(per_trial, ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    result = RateResult(per_user=rates.mean(axis=0), mean=float(per_trial.mean()),
                        trials=trials, std_err=std_err)
    logger.debug("ergodic rate M=%d K=%d tau=%d rho_p=%g rho_d=%g: %.6f +- %.6f bits",
                 config.M, config.K, config.tau, config.rho_p, config.rho_d,
                 result.mean, result.std_err)
    return result


def _scalar_or_array(value):
    return float(value) if np.ndim(value) == 0 else value


def _closed_form_terms(M, K, rho_d, eta_sq):
    """SINR numerator and denominator of the closed-form rate."""
    eta_sq = np.asarray(eta_sq, dtype=float)
    rho_d = np.asarray(rho_d, dtype=float)
    if np.any(eta_sq < 0) or np.any(eta_sq > 1):
        raise DomainError(f"eta_sq must lie in [0, 1], got {eta_sq!r}")
    if np.any(rho_d < 0):
        raise DomainError(f"rho_d must be nonnegative, got {rho_d!r}")
    a_sq = gain_squared(K, rho_d)
    numerator = rho_d * a_sq * eta_sq * (M + 1)
    denominator = rho_d * a_sq * (K - eta_sq) + a_sq + QUANT_NOISE_POWER
    return numerator, denominator


def closed_form_rate(M, K, rho_d, eta_sq):
    """Closed-form per-user rate with MRC on the LMMSE estimate.

    log2(1 + rho_d a^2 eta^2 (M+1) / (rho_d a^2 (K - eta^2) + a^2 + 1 - 2/pi)),
    a^2 the data-phase Bussgang gain. Accepts numpy arrays.
    """
    numerator, denominator = _closed_form_terms(M, K, rho_d, eta_sq)
    return _scalar_or_array(np.log2(1.0 + numerator / denominator))


def conventional_rate(M, K, rho_d, tau, rho_p):
    """Infinite-resolution analog of closed_form_rate.

    Same structure with the quantization terms removed and the unquantized
    LMMSE estimate variance tau rho_p / (1 + tau rho_p). Accepts numpy arrays.
    """
    rho_d = np.asarray(rho_d, dtype=float)
    rho_p = np.asarray(rho_p, dtype=float)
    if np.any(rho_d < 0) or np.any(rho_p < 0):
        raise DomainError("powers must be nonnegative")
    trained = np.multiply(tau, rho_p)
    eta_sq = trained / (1.0 + trained)
    return _scalar_or_array(np.log2(1.0 + rho_d * eta_sq * (M + 1) / (rho_d * (K - eta_sq) + 1.0)))


def appendix_moments_mc(config: SystemConfig, trials: int, seed: Optional[int] = None,
                        workers: int = 1) -> MomentReport:
    """Simulated vs predicted moments behind the closed-form rate.

    E||h_k||^2 -> eta^2 M, E|h_k^H h_i|^2 (i != k) -> eta^2 M,
    E|h_k^H A_d e_k|^2 -> a^2 eta^2 (1 - eta^2) M, E|h_k^H A_d h_k|^2 -> a^2 eta^4 (M^2 + M),
    where h_k is the estimate column, h_i the true channel and e_k the error.
    Sample means run over all users (and user pairs) in every trial.
    """
    trials = _check_trials(trials, MIN_MOMENT_TRIALS)
    seed = config.seed if seed is None else seed
    M, K = config.M, config.K
    pilots = make_dft_pilots(config.tau, K)
    W = estimator_matrix(pilots, config.rho_p)
    a_sq = float(gain_squared(K, config.rho_d))
    off_diagonal = ~np.eye(K, dtype=bool)

    def trial(i):
        rng = trial_rng(seed, i)
        H = draw_channel(M, K, rng)
        H_hat = simulate_training(config, H, pilots, rng).entries @ W.T
        E = H.H - H_hat
        norms = np.sum(np.abs(H_hat) ** 2, axis=0)
        cross = np.abs(H_hat.conj().T @ H.H) ** 2
        err = np.abs(np.sum(H_hat.conj() * E, axis=0)) ** 2
        return (
            norms.mean(),
            cross[off_diagonal].mean() if K > 1 else np.nan,
            a_sq * err.mean(),
            a_sq * np.mean(norms ** 2),
        )

    means = _run_trials(trial, trials, 4, workers).mean(axis=0)
    eta_sq = estimate_quality(pilots, config.rho_p, M).eta_sq
    predicted = (
        eta_sq * M,
        eta_sq * M,
        a_sq * eta_sq * (1.0 - eta_sq) * M,
        a_sq * eta_sq ** 2 * (M * M + M),
    )
    names = ("estimate_energy", "cross_user", "estimation_error", "desired_signal")
    checks = []
    for name, sim, pred in zip(names, means, predicted):
        if K == 1 and name == "cross_user":
            continue
        gap = abs(sim - pred)
        checks.append(MomentCheck(name, float(sim), float(pred), float(gap / pred if pred > 0 else gap)))
    return MomentReport(tuple(checks), eta_sq=eta_sq, alpha_d=float(np.sqrt(a_sq)), trials=trials)


def detection_error_rate(config: SystemConfig, slots: int, seed: Optional[int] = None,
                         perfect_csi: bool = False) -> float:
    """Bit-error rate of sign decisions on the MRC output, one data slot per block.

    Symbols follow config.symbols: BPSK decides on Re s_hat only, QPSK on the
    real and imaginary parts separately. Gaussian symbols carry no bits.
    """
    if config.symbols == "gaussian":
        raise ConfigError("bit-error rate needs a BPSK or QPSK constellation, not gaussian symbols")
    slots = _check_trials(slots)
    seed = config.seed if seed is None else seed
    pilots = make_dft_pilots(config.tau, config.K)
    W = None if perfect_csi else estimator_matrix(pilots, config.rho_p)
    bits_per_symbol = 2 if config.symbols == "qpsk" else 1
    errors = 0
    for i in range(slots):
        rng = trial_rng(seed, i)
        H = draw_channel(config.M, config.K, rng)
        if perfect_csi:
            estimate = ChannelEstimate(H.H)
        else:
            estimate = ChannelEstimate(simulate_training(config, H, pilots, rng).entries @ W.T)
        s = draw_symbols(config.K, rng, config.symbols)
        s_hat = mrc_detect(estimate, simulate_data_slot(config, H, s, rng))
        errors += int(np.sum(np.sign(s.real) != np.where(s_hat.real >= 0, 1.0, -1.0)))
        if bits_per_symbol == 2:
            errors += int(np.sum(np.sign(s.imag) != np.where(s_hat.imag >= 0, 1.0, -1.0)))
    return errors / (slots * config.K * bits_per_symbol)
