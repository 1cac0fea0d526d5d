"""Multicarrier continuous-variable QKD: key rates, thresholds, regions and simulation."""

from .channel_model import ChannelEnsemble, SubChannel
from .errors import (
    ConfigurationError,
    ConsistencyError,
    DataError,
    DomainError,
    McvqkdError,
    ParameterError,
    RegimeError,
    RegimeWarning,
    StateError,
)
from .gaussian_core import entropy_g, symplectic_eigenvalues, unitary_fft, unitary_ifft
from .keyrate_oneway import keyrate_oneway
from .keyrate_twoway import keyrate_twoway
from .montecarlo_sim import simulate_block, verify_fft_noise_invariance
from .multiuser_mqa import capacity_region, private_region, svd_private_capacities, sum_capacity
from .protocol import KeyRateResult, ProtocolConfig, TwoWaySplits
from .rates import keyrate
from .threshold_solver import (
    max_eve_variance,
    tolerable_excess_noise_closed_form,
    tolerable_excess_noise_multicarrier,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelEnsemble",
    "ConfigurationError",
    "ConsistencyError",
    "DataError",
    "DomainError",
    "KeyRateResult",
    "McvqkdError",
    "ParameterError",
    "ProtocolConfig",
    "RegimeError",
    "RegimeWarning",
    "StateError",
    "SubChannel",
    "TwoWaySplits",
    "capacity_region",
    "entropy_g",
    "keyrate",
    "keyrate_oneway",
    "keyrate_twoway",
    "max_eve_variance",
    "private_region",
    "simulate_block",
    "sum_capacity",
    "svd_private_capacities",
    "symplectic_eigenvalues",
    "tolerable_excess_noise_closed_form",
    "tolerable_excess_noise_multicarrier",
    "unitary_fft",
    "unitary_ifft",
    "verify_fft_noise_invariance",
]
