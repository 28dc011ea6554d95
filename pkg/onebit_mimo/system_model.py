"""
System Model - Python
Author: NimbusDFIR
Description: Uplink one-bit massive MIMO system model. Draws Rayleigh channels,
builds DFT pilot blocks, and produces the sign-quantized observations of the
training and data phases.

Conventions:
  - complex Gaussian draws have real and imaginary parts N(0, 1/2)
  - sign(0) is +1, so the quantizer is total on finite inputs
  - every Monte Carlo trial draws from its own generator, trial_rng(seed, i)
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DimensionError, DomainError

SYMBOL_KINDS = ("qpsk", "bpsk", "gaussian")
INV_SQRT2 = 1.0 / np.sqrt(2.0)


def frozen_array(values, dtype=complex):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemConfig:
    """Scalar system parameters. Powers are linear; dB only exists at the CLI."""
    M: int
    K: int
    T: int
    tau: int
    rho_p: float
    rho_d: float
    seed: int = 0
    symbols: str = "qpsk"

    def __post_init__(self):
        for name in ("M", "K", "T", "tau", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.M < 1 or self.K < 1:
            raise ConfigError(f"M and K must be positive (M={self.M}, K={self.K})")
        if not self.K <= self.tau <= self.T:
            raise ConfigError(f"need K <= tau <= T, got K={self.K}, tau={self.tau}, T={self.T}")
        for name in ("rho_p", "rho_d"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be a finite nonnegative linear SNR, got {value!r}")
            object.__setattr__(self, name, value)
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}")
        if self.symbols not in SYMBOL_KINDS:
            raise ConfigError(f"symbols must be one of {SYMBOL_KINDS}, got {self.symbols!r}")

    @property
    def energy(self) -> float:
        """Energy per user per coherence interval, tau*rho_p + (T - tau)*rho_d."""
        return self.tau * self.rho_p + (self.T - self.tau) * self.rho_d

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class PilotMatrix:
    """tau x K pilot block Phi."""
    entries: np.ndarray
    kind: str = "dft"

    def __post_init__(self):
        arr = frozen_array(self.entries)
        if arr.ndim != 2:
            raise DimensionError(f"pilot matrix must be 2-D, got shape {arr.shape}")
        object.__setattr__(self, "entries", arr)

    @property
    def tau(self) -> int:
        return self.entries.shape[0]

    @property
    def K(self) -> int:
        return self.entries.shape[1]

    def outer(self) -> np.ndarray:
        """Phi Phi^H (tau x tau)."""
        return self.entries @ self.entries.conj().T

    def gram(self) -> np.ndarray:
        """Phi^H Phi (K x K)."""
        return self.entries.conj().T @ self.entries

    def row_energy(self) -> np.ndarray:
        return np.sum(np.abs(self.entries) ** 2, axis=1)


@dataclass(frozen=True)
class ChannelSample:
    """One M x K channel realization, i.i.d. CN(0, 1) entries."""
    H: np.ndarray

    def __post_init__(self):
        arr = frozen_array(self.H)
        if arr.ndim != 2:
            raise DimensionError(f"channel must be M x K, got shape {arr.shape}")
        object.__setattr__(self, "H", arr)

    @property
    def M(self) -> int:
        return self.H.shape[0]

    @property
    def K(self) -> int:
        return self.H.shape[1]


@dataclass(frozen=True)
class QuantizedBlock:
    """Output of the one-bit ADCs; every entry lies in (+-1 +- 1j)/sqrt(2)."""
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", frozen_array(self.entries))

    @property
    def shape(self):
        return self.entries.shape


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for Monte Carlo trial `index` under master `seed`.

    Streams are keyed by counter, so trial i draws the same numbers no matter
    which worker runs it or in which order.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def complex_gaussian(shape, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * INV_SQRT2


def draw_channel(M: int, K: int, rng: np.random.Generator) -> ChannelSample:
    return ChannelSample(complex_gaussian((M, K), rng))


def draw_symbols(K: int, rng: np.random.Generator, kind: str = "qpsk") -> np.ndarray:
    """K unit-power data symbols: QPSK, real BPSK or CN(0, 1)."""
    if kind == "qpsk":
        bits = rng.integers(0, 2, size=(2, K))
        return ((1 - 2 * bits[0]) + 1j * (1 - 2 * bits[1])) * INV_SQRT2
    if kind == "bpsk":
        return (1.0 - 2.0 * rng.integers(0, 2, size=K)).astype(complex)
    if kind == "gaussian":
        return complex_gaussian(K, rng)
    raise ConfigError(f"unknown symbol kind {kind!r}")


def make_dft_pilots(tau: int, K: int) -> PilotMatrix:
    """First K columns of the tau-point DFT matrix, entries exp(-j 2 pi n k / tau)."""
    if K < 1 or tau < 1:
        raise DimensionError(f"tau and K must be positive, got tau={tau}, K={K}")
    if K > tau:
        raise DimensionError(f"need K <= tau for orthogonal pilots, got K={K}, tau={tau}")
    n = np.arange(tau)[:, None]
    k = np.arange(K)[None, :]
    return PilotMatrix(np.exp(-2j * np.pi * n * k / tau), kind="dft")


def random_pilots(tau: int, K: int, rng: np.random.Generator) -> PilotMatrix:
    """i.i.d. CN(0, 1) pilots. Not unit-modulus, so only the dense path accepts them."""
    if K < 1 or tau < 1:
        raise DimensionError(f"tau and K must be positive, got tau={tau}, K={K}")
    return PilotMatrix(complex_gaussian((tau, K), rng), kind="random")


def quantize_one_bit(Y) -> QuantizedBlock:
    """Sign of real and imaginary parts, scaled onto the unit-power set R."""
    Y = np.asarray(Y, dtype=complex)
    if not np.all(np.isfinite(Y)):
        raise DomainError("one-bit quantizer needs finite inputs")
    re = np.where(Y.real >= 0, 1.0, -1.0)
    im = np.where(Y.imag >= 0, 1.0, -1.0)
    return QuantizedBlock((re + 1j * im) * INV_SQRT2)


def _check_channel(config: SystemConfig, H: ChannelSample):
    if H.H.shape != (config.M, config.K):
        raise DimensionError(f"channel shape {H.H.shape} does not match M={config.M}, K={config.K}")


def simulate_training(config: SystemConfig, H: ChannelSample, pilots: PilotMatrix,
                      rng: np.random.Generator) -> QuantizedBlock:
    """M x tau quantized pilot observation Q(sqrt(rho_p) H Phi^T + N_p)."""
    _check_channel(config, H)
    if (pilots.tau, pilots.K) != (config.tau, config.K):
        raise DimensionError(
            f"pilot block is {pilots.tau}x{pilots.K}, config expects {config.tau}x{config.K}")
    noise = complex_gaussian((config.M, config.tau), rng)
    Y = np.sqrt(config.rho_p) * (H.H @ pilots.entries.T) + noise
    return quantize_one_bit(Y)


def simulate_data_slot(config: SystemConfig, H: ChannelSample, s,
                       rng: np.random.Generator) -> QuantizedBlock:
    """M x 1 quantized data observation Q(sqrt(rho_d) H s + n_d)."""
    _check_channel(config, H)
    s = np.asarray(s, dtype=complex).reshape(-1)
    if s.shape[0] != config.K:
        raise DimensionError(f"expected {config.K} symbols, got {s.shape[0]}")
    noise = complex_gaussian(config.M, rng)
    y = np.sqrt(config.rho_d) * (H.H @ s) + noise
    return quantize_one_bit(y.reshape(config.M, 1))
