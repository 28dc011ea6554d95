"""
One-bit massive MIMO toolkit: system model, Bussgang LMMSE channel estimation,
achievable-rate analysis and training-length optimization.
"""

__version__ = "1.0.0"

from .bussgang_lmmse import (
    bussgang_gain,
    estimate_quality,
    lmmse_estimate,
    pilot_autocorrelation,
)
from .errors import ConfigError, DimensionError, DomainError, NumericalError, OneBitMimoError
from .rate_analysis import (
    appendix_moments_mc,
    closed_form_rate,
    conventional_rate,
    ergodic_rate_mc,
    mrc_detect,
)
from .se_optimizer import low_snr_se, optimize_case1, optimize_case2, se_gamma_tau, sum_spectral_efficiency
from .system_model import (
    SystemConfig,
    make_dft_pilots,
    quantize_one_bit,
    simulate_data_slot,
    simulate_training,
)

__all__ = [
    "__version__",
    "ConfigError", "DimensionError", "DomainError", "NumericalError", "OneBitMimoError",
    "SystemConfig", "make_dft_pilots", "quantize_one_bit", "simulate_training", "simulate_data_slot",
    "bussgang_gain", "pilot_autocorrelation", "lmmse_estimate", "estimate_quality",
    "mrc_detect", "ergodic_rate_mc", "closed_form_rate", "conventional_rate", "appendix_moments_mc",
    "sum_spectral_efficiency", "low_snr_se", "se_gamma_tau", "optimize_case1", "optimize_case2",
]
