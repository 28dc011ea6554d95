"""Shared fixtures for the onebit_mimo test suite."""

import numpy as np
import pytest

from onebit_mimo.system_model import SystemConfig, make_dft_pilots


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def dft_pilots():
    """tau = K = 8 DFT pilots."""
    return make_dft_pilots(8, 8)


@pytest.fixture
def long_pilots():
    """tau = 16, K = 8 DFT pilots."""
    return make_dft_pilots(16, 8)


@pytest.fixture
def small_config():
    return SystemConfig(M=16, K=4, T=50, tau=8, rho_p=0.1, rho_d=0.1, seed=11)
