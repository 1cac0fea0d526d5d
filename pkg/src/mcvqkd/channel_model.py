"""Sub-channel parameters, slot selection, cloner excess noise, private capacity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import DomainError, ParameterError, StateError

_GAIN_TOL = 1e-12


@dataclass(frozen=True)
class SubChannel:
    """One Gaussian sub-channel.

    ``fourier_gain`` is the power gain |F(T)|^2 that every rate formula uses;
    ``transmittance`` is the phase-space amplitude with equal real and
    imaginary parts when built from a gain. Eve's beam splitter takes the
    complementary gain.
    """

    transmittance: complex
    fourier_gain: float
    noise_variance: float
    eve_variance: float = 1.0
    eve_fourier_gain: Optional[float] = None

    def __post_init__(self) -> None:
        t = complex(self.transmittance)
        if not (0.0 <= t.real <= 1 / math.sqrt(2) + _GAIN_TOL and 0.0 <= t.imag <= 1 / math.sqrt(2) + _GAIN_TOL):
            raise ParameterError("Re T and Im T must lie in [0, 1/sqrt(2)]")
        if not 0.0 <= self.fourier_gain <= 1.0:
            raise ParameterError(f"fourier gain {self.fourier_gain} outside [0, 1]")
        if not self.noise_variance > 0:
            raise ParameterError("noise variance must be positive")
        if not self.eve_variance >= 1.0:
            raise ParameterError(f"Eve variance W={self.eve_variance} must be >= 1")
        complement = 1.0 - self.fourier_gain
        if self.eve_fourier_gain is None:
            object.__setattr__(self, "eve_fourier_gain", complement)
        elif abs(self.eve_fourier_gain - complement) > _GAIN_TOL:
            raise ParameterError("Eve gain must equal 1 - fourier gain")
        object.__setattr__(self, "transmittance", t)

    @classmethod
    def from_gain(cls, gain: float, noise_variance: float, eve_variance: float = 1.0) -> "SubChannel":
        if not 0.0 <= gain <= 1.0:
            raise ParameterError(f"gain {gain} outside [0, 1]")
        amp = math.sqrt(gain / 2.0)
        return cls(complex(amp, amp), gain, noise_variance, eve_variance)

    @property
    def nu(self) -> float:
        """Noise-to-gain ratio; infinite for a dead slot."""
        if self.fourier_gain <= 0.0:
            return math.inf
        return self.noise_variance / self.fourier_gain

    @property
    def excess_noise(self) -> float:
        return excess_noise(self.eve_variance, self.eve_fourier_gain)


def select_good_subchannels(slots: Sequence[SubChannel], nu_eve: float) -> list[int]:
    """Indices of slots whose noise-to-gain ratio is strictly below ``nu_eve``."""
    if not nu_eve >= 0:
        raise ParameterError("nu_eve must be non-negative")
    return [i for i, s in enumerate(slots) if s.fourier_gain > 0.0 and s.nu < nu_eve]


@dataclass(frozen=True)
class ChannelEnsemble:
    slots: tuple
    nu_eve: float
    selected: tuple = field(default=None)

    def __post_init__(self) -> None:
        slots = tuple(self.slots)
        if not slots:
            raise ParameterError("an ensemble needs at least one slot")
        if not self.nu_eve > 0:
            raise ParameterError("nu_eve must be positive")
        good = select_good_subchannels(slots, self.nu_eve)
        if self.selected is None:
            chosen = tuple(good)
        else:
            chosen = tuple(int(i) for i in self.selected)
            bad = [i for i in chosen if i not in good]
            if bad:
                raise ParameterError(f"selected slots {bad} do not satisfy nu < nu_eve")
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "selected", chosen)

    @classmethod
    def uniform(
        cls,
        n: int,
        gain: float,
        noise_variance: float,
        eve_variance: float = 1.0,
        nu_eve: float = math.inf,
    ) -> "ChannelEnsemble":
        slot = SubChannel.from_gain(gain, noise_variance, eve_variance)
        return cls(tuple(slot for _ in range(n)), nu_eve)

    @property
    def n(self) -> int:
        return len(self.slots)

    @property
    def l(self) -> int:  # noqa: E743
        return len(self.selected)

    def selected_slots(self) -> list[SubChannel]:
        return [self.slots[i] for i in self.selected]

    def _require_selection(self) -> list[SubChannel]:
        chosen = self.selected_slots()
        if not chosen:
            raise StateError("no sub-channel passes the nu_eve selection")
        return chosen

    @property
    def t_bar(self) -> float:
        return averaged_fourier_gain(self)

    @property
    def eve_gain_bar(self) -> float:
        chosen = self._require_selection()
        return math.fsum(s.eve_fourier_gain for s in chosen) / len(chosen)

    @property
    def w_bar(self) -> float:
        chosen = self._require_selection()
        return math.fsum(s.eve_variance for s in chosen) / len(chosen)

    @property
    def noise_bar(self) -> float:
        chosen = self._require_selection()
        return math.fsum(s.noise_variance for s in chosen) / len(chosen)

    @property
    def nu_min(self) -> float:
        return min(s.nu for s in self._require_selection())

    def reselect(self) -> "ChannelEnsemble":
        """Ensemble restricted to the currently selected slots."""
        return ChannelEnsemble(tuple(self.selected_slots()), self.nu_eve)


def averaged_fourier_gain(ensemble: ChannelEnsemble) -> float:
    chosen = ensemble._require_selection()
    return math.fsum(s.fourier_gain for s in chosen) / len(chosen)


def excess_noise(eve_variance_W: float, eve_fourier_gain: float) -> float:
    """Entangling-cloner excess noise (W - 1) g_E / (1 - g_E)."""
    if not eve_variance_W >= 1.0:
        raise ParameterError(f"W={eve_variance_W} must be >= 1")
    if not 0.0 <= eve_fourier_gain:
        raise ParameterError("Eve gain must be non-negative")
    if eve_fourier_gain >= 1.0:
        raise DomainError("Eve gain >= 1 means total interception; excess noise diverges")
    return (eve_variance_W - 1.0) * eve_fourier_gain / (1.0 - eve_fourier_gain)


def eve_variance_for_excess_noise(noise: float, t_bar: float) -> float:
    """Inverse of ``excess_noise`` with Eve gain 1 - t_bar."""
    if noise < 0:
        raise ParameterError("excess noise must be non-negative")
    if not 0.0 < t_bar < 1.0:
        raise ParameterError("t_bar must lie in (0, 1)")
    return 1.0 + noise * t_bar / (1.0 - t_bar)


def sigma_x_squared(noise: float, vacuum_noise: float = 1.0) -> float:
    """Total added noise seen by a sub-channel: vacuum plus excess."""
    if not vacuum_noise > 0:
        raise ParameterError("vacuum noise must be positive")
    return vacuum_noise + noise


def _ratio_r(modulation_variance: float, fourier_gain: float, sigma_x2: float) -> float:
    if not modulation_variance > 0:
        raise ParameterError("modulation variance must be positive")
    if not 0.0 <= fourier_gain <= 1.0:
        raise ParameterError("fourier gain outside [0, 1]")
    if not sigma_x2 > 0:
        raise ParameterError("sigma_X^2 must be positive")
    a = modulation_variance * fourier_gain
    return (a + sigma_x2) / (1.0 + sigma_x2 * a)


def private_noise_variance(modulation_variance: float, fourier_gain: float, sigma_x2: float) -> float:
    """Equivalent noise variance whose SNR reproduces the private capacity.

    With R = (s g + X)/(1 + X s g) the private SNR is R - 1, so the
    returned variance is s/(R - 1), or +inf when R <= 1.
    """
    r = _ratio_r(modulation_variance, fourier_gain, sigma_x2)
    if r <= 1.0:
        return math.inf
    return modulation_variance / (r - 1.0)


def private_capacity_subchannel_raw(
    modulation_variance: float, fourier_gain: float, sigma_x2: float, convention: str = "real"
) -> float:
    r = _ratio_r(modulation_variance, fourier_gain, sigma_x2)
    if r <= 0.0:
        return -math.inf
    return _convention_factor(convention) * 0.5 * math.log2(r)


def private_capacity_subchannel(
    modulation_variance: float, fourier_gain: float, sigma_x2: float, convention: str = "real"
) -> float:
    """Private classical capacity of one sub-channel, clamped at zero.

    ``convention="complex"`` counts both quadratures (twice the real value).
    """
    return max(0.0, private_capacity_subchannel_raw(modulation_variance, fourier_gain, sigma_x2, convention))


def _convention_factor(convention: str) -> float:
    if convention == "real":
        return 1.0
    if convention == "complex":
        return 2.0
    raise ParameterError(f"unknown quadrature convention {convention!r}")


@dataclass(frozen=True)
class DirectionalEstimatorStats:
    """Inputs to the RR/DR private capacity of one sub-channel.

    ``eve_term`` is Eve's conditional information in bits.
    """

    modulation_variance: float
    sigma_x2: float
    squeezing: float = 1.0
    eve_term: float = 0.0


_DIRECTIONAL_FIELDS = ("modulation_variance", "sigma_x2", "squeezing", "eve_term")


def _coerce_stats(stats) -> DirectionalEstimatorStats:
    if isinstance(stats, DirectionalEstimatorStats):
        return stats
    if isinstance(stats, Mapping):
        missing = [k for k in _DIRECTIONAL_FIELDS if k not in stats]
        if missing:
            raise ParameterError(f"estimator statistics missing fields: {missing}")
        return DirectionalEstimatorStats(**{k: float(stats[k]) for k in _DIRECTIONAL_FIELDS})
    raise ParameterError(f"unsupported estimator statistics type {type(stats).__name__}")


def private_capacity_directional(
    estimator_stats: Union[DirectionalEstimatorStats, Mapping, Iterable],
) -> float:
    """Best sub-channel value of 0.5 log2((mod + X)/(s + X)) - eve_term, floored at 0.

    Accepts one record or an iterable of records (one per sub-channel).
    """
    if isinstance(estimator_stats, (DirectionalEstimatorStats, Mapping)):
        records = [_coerce_stats(estimator_stats)]
    else:
        records = [_coerce_stats(s) for s in estimator_stats]
    if not records:
        raise ParameterError("no estimator statistics supplied")
    best = -math.inf
    for st in records:
        if not (st.modulation_variance > 0 and st.squeezing > 0 and st.sigma_x2 > 0):
            raise ParameterError("variances and squeezing must be positive")
        info = 0.5 * math.log2((st.modulation_variance + st.sigma_x2) / (st.squeezing + st.sigma_x2))
        best = max(best, info - st.eve_term)
    return max(0.0, best)


def multicarrier_dominates(ensemble: ChannelEnsemble, single_carrier_gain: float) -> bool:
    """True when the averaged multicarrier gain beats the single-carrier gain."""
    return ensemble.t_bar > single_carrier_gain
