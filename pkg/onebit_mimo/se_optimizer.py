"""
Spectral Efficiency Optimizer - Python
Author: NimbusDFIR
Description: Sum spectral efficiency at low SNR and the choice of training
length (and training/data energy split) that maximizes it.

Case I: users spend a fixed energy P = rho*T per coherence interval and choose
tau and the training fraction gamma (gamma*P = tau*rho_p).
Case II: training and data use the same power rho, only tau is chosen.

tau is searched over the integers K..T-1 (tau = T leaves no data symbols and
gives zero); ties go to the smallest tau. For Case I the inner search over
gamma is a golden-section search, guarded by a dense gamma grid.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .bussgang_lmmse import low_snr_quality
from .errors import ConfigError, DomainError
from .rate_analysis import closed_form_rate, conventional_rate

logger = logging.getLogger(__name__)

RECEIVERS = ("one-bit", "conventional")
GAMMA_EPS = 1e-9
GAMMA_TOL = 1e-8
GAMMA_GRID_POINTS = 1000

INVPHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INVPHI2 = (3 - math.sqrt(5)) / 2  # 1 / phi^2


@dataclass(frozen=True)
class EnergyBudget:
    """Per-user energy P over a coherence interval of T symbols, P = rho*T."""
    T: int
    P: float
    rho: float

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.P < 0 or self.rho < 0:
            raise ConfigError(f"energy budget must be nonnegative, got P={self.P}, rho={self.rho}")
        if not math.isclose(self.P, self.rho * self.T, rel_tol=1e-12, abs_tol=1e-300):
            raise ConfigError(f"P={self.P} does not equal rho*T={self.rho * self.T}")

    @classmethod
    def from_average(cls, rho: float, T: int) -> "EnergyBudget":
        return cls(T=T, P=rho * T, rho=rho)

    @classmethod
    def from_energy(cls, P: float, T: int) -> "EnergyBudget":
        return cls(T=T, P=P, rho=P / T)

    def split(self, gamma, tau):
        """(rho_p, rho_d) spending gamma*P on tau pilots and the rest on T - tau data symbols."""
        if np.any(np.asarray(tau) >= self.T):
            raise DomainError(f"tau must leave data symbols (tau < T={self.T})")
        return np.multiply(gamma, self.P) / tau, (1.0 - np.asarray(gamma)) * self.P / (self.T - np.asarray(tau))


@dataclass(frozen=True)
class SeCoefficients:
    """Coefficients of S(gamma, tau) = (T-tau)K/T log2(1 + a1 tau / (a2 tau^2 + a3 tau + a4))."""
    a1: float
    a2: float
    a3: float
    a4: float

    def se(self, tau, K: int, T: int):
        ratio = self.a1 * tau / (self.a2 * tau * tau + self.a3 * tau + self.a4)
        return (T - tau) * K / T * np.log2(1.0 + ratio)


@dataclass(frozen=True)
class TraceEntry:
    tau: int
    gamma: Optional[float]
    se: float
    fallback: bool = False


@dataclass(frozen=True)
class OptimizationResult:
    tau_star: int
    gamma_star: Optional[float]
    se_star: float
    trace: Tuple[TraceEntry, ...]
    receiver: str = "one-bit"
    fallbacks: int = 0


def _check_receiver(receiver):
    if receiver not in RECEIVERS:
        raise ConfigError(f"receiver must be one of {RECEIVERS}, got {receiver!r}")


def _check_tau(tau, K, T):
    tau = np.asarray(tau)
    if np.any(tau < K) or np.any(tau > T):
        raise DomainError(f"need K <= tau <= T (K={K}, T={T}), got tau={tau!r}")


def _check_bounds(M, K, T):
    if M < 1 or K < 1:
        raise ConfigError(f"M and K must be positive (M={M}, K={K})")
    if T <= K:
        raise ConfigError(f"no feasible training length: need T > K, got T={T}, K={K}")


def sum_spectral_efficiency(per_user_rates, tau: int, T: int) -> float:
    """((T - tau)/T) * sum_k R_k."""
    rates = np.asarray(per_user_rates, dtype=float).reshape(-1)
    _check_tau(tau, rates.shape[0], T)
    return float((T - tau) / T * np.sum(rates))


def low_snr_se(M, K, T, tau, rho_p, rho_d):
    """Sum SE with the low-SNR surrogate sigma^2 in place of eta^2. Accepts arrays."""
    _check_tau(tau, K, T)
    sigma_sq = low_snr_quality(tau, rho_p, K)
    return (T - np.asarray(tau)) * K / T * closed_form_rate(M, K, rho_d, sigma_sq)


def conventional_se(M, K, T, tau, rho_p, rho_d):
    _check_tau(tau, K, T)
    return (T - np.asarray(tau)) * K / T * conventional_rate(M, K, rho_d, tau, rho_p)


def se_coefficients(gamma, M: int, K: int, T: int, P: float) -> SeCoefficients:
    """a1..a4 of the rational form. Accepts an array of gamma.

    Putting rho_p = gamma P / tau and rho_d = (1 - gamma) P / (T - tau) into
    low_snr_se and clearing denominators gives a tau^2 coefficient of
    -(pi^2 + 2 pi gamma P).
    """
    g = np.asarray(gamma, dtype=float)
    pi = math.pi
    g_term = g - g * g
    return SeCoefficients(
        a1=4.0 * (M + 1) * g_term * P * P,
        a2=-(pi * pi + 2.0 * P * pi * g),
        a3=(4.0 * P * P * (g - 1.0) * g
            + K * P * pi * (pi - 2.0 * pi * g + 2.0 * g * (1.0 + P - P * g))
            + pi * pi * T + 2.0 * P * pi * g * T),
        a4=K * K * P * P * (pi * pi - 2.0 * pi) * g_term + K * P * (pi * pi - 2.0 * pi) * g * T,
    )


def _se_rational(gamma, tau, M, K, T, P):
    return se_coefficients(gamma, M, K, T, P).se(tau, K, T)


def se_gamma_tau(gamma, tau, M: int, K: int, T: int, P: float):
    """Low-SNR sum SE as a function of the training fraction gamma and tau."""
    if np.any(np.asarray(gamma) <= 0) or np.any(np.asarray(gamma) >= 1):
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    _check_tau(tau, K, T)
    if P <= 0:
        raise DomainError(f"P must be positive, got {P}")
    value = _se_rational(gamma, tau, M, K, T, P)
    return float(value) if np.ndim(value) == 0 else value


def _conventional_gamma_tau(gamma, tau, M, K, T, P):
    rho_p, rho_d = EnergyBudget.from_energy(P, T).split(gamma, tau)
    return (T - tau) * K / T * conventional_rate(M, K, rho_d, tau, rho_p)


def conventional_se_gamma_tau(gamma, tau, M: int, K: int, T: int, P: float):
    """Infinite-resolution counterpart of se_gamma_tau (tau < T)."""
    if np.any(np.asarray(gamma) <= 0) or np.any(np.asarray(gamma) >= 1):
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    _check_tau(tau, K, T - 1)
    return _conventional_gamma_tau(gamma, tau, M, K, T, P)


def golden_section_search(f: Callable[[float], float], a: float, b: float,
                          tol: float = GAMMA_TOL) -> Tuple[float, float]:
    """Maximize a unimodal f on [a, b]; returns (x, f(x)) with the bracket shrunk below tol."""
    (a, b) = (min(a, b), max(a, b))
    h = b - a
    if h <= tol:
        x = (a + b) / 2
        return x, f(x)

    # Required steps to achieve tolerance
    n = int(math.ceil(math.log(tol / h) / math.log(INVPHI)))

    c = a + INVPHI2 * h
    d = a + INVPHI * h
    yc = f(c)
    yd = f(d)

    for _ in range(n - 1):
        if yc > yd:
            b = d
            d = c
            yd = yc
            h = INVPHI * h
            c = a + INVPHI2 * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INVPHI * h
            d = a + INVPHI * h
            yd = f(d)

    return (c, yc) if yc > yd else (d, yd)


def _is_unimodal(values: np.ndarray) -> bool:
    """True when the sequence never rises again after it starts falling."""
    steps = np.sign(np.diff(values))
    steps = steps[steps != 0]
    return not np.any((steps[:-1] < 0) & (steps[1:] > 0))


def _case1_objective(receiver):
    return _se_rational if receiver == "one-bit" else _conventional_gamma_tau


def optimize_case1(M: int, K: int, T: int, P: float, receiver: str = "one-bit") -> OptimizationResult:
    """Jointly choose tau and the training energy fraction gamma under the budget P."""
    _check_receiver(receiver)
    _check_bounds(M, K, T)
    if not P > 0:
        raise ConfigError(f"energy budget P must be positive, got {P}")
    objective = _case1_objective(receiver)
    grid = np.arange(1, GAMMA_GRID_POINTS + 1) / (GAMMA_GRID_POINTS + 1)

    trace = []
    best = None
    fallbacks = 0
    for tau in range(K, T):
        def f(gamma, tau=tau):
            return float(objective(gamma, tau, M, K, T, P))

        gamma, se = golden_section_search(f, GAMMA_EPS, 1.0 - GAMMA_EPS)
        values = objective(grid, tau, M, K, T, P)
        i = int(np.argmax(values))
        fallback = not _is_unimodal(values) or values[i] > se + 1e-12 * max(1.0, abs(se))
        if fallback:
            fallbacks += 1
            lo = grid[i - 1] if i > 0 else GAMMA_EPS
            hi = grid[i + 1] if i + 1 < grid.size else 1.0 - GAMMA_EPS
            gamma, se = golden_section_search(f, lo, hi)
            if values[i] > se:
                gamma, se = float(grid[i]), float(values[i])
            logger.info("tau=%d: S not unimodal in gamma on the grid, refined around gamma=%.4f",
                        tau, grid[i])
        entry = TraceEntry(tau=tau, gamma=float(gamma), se=float(se), fallback=fallback)
        trace.append(entry)
        if best is None or entry.se > best.se:
            best = entry

    logger.debug("case I %s M=%d K=%d T=%d P=%g: tau*=%d gamma*=%.6f S*=%.6f",
                 receiver, M, K, T, P, best.tau, best.gamma, best.se)
    return OptimizationResult(tau_star=best.tau, gamma_star=best.gamma, se_star=best.se,
                              trace=tuple(trace), receiver=receiver, fallbacks=fallbacks)


def optimize_case2(M: int, K: int, T: int, rho: float, receiver: str = "one-bit") -> OptimizationResult:
    """Exhaustive scan of tau with equal training and data power rho."""
    _check_receiver(receiver)
    _check_bounds(M, K, T)
    if rho < 0:
        raise ConfigError(f"rho must be nonnegative, got {rho}")
    taus = np.arange(K, T)
    se_fn = low_snr_se if receiver == "one-bit" else conventional_se
    values = np.asarray(se_fn(M, K, T, taus, rho, rho), dtype=float)
    i = int(np.argmax(values))
    trace = tuple(TraceEntry(tau=int(t), gamma=None, se=float(v)) for t, v in zip(taus, values))
    return OptimizationResult(tau_star=int(taus[i]), gamma_star=None, se_star=float(values[i]),
                              trace=trace, receiver=receiver)
