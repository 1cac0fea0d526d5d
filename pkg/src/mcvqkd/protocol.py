"""Protocol configuration and key-rate result types shared by the rate modules."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

from .channel_model import ChannelEnsemble
from .errors import ConfigurationError, DomainError, ConsistencyError, ParameterError, RegimeError, RegimeWarning
from .gaussian_core import SymplecticSpectrum

DIRECTIONS = ("one_way", "two_way")
MEASUREMENTS = ("hom", "het")
RECONCILIATIONS = ("dr", "rr")

REGIME_FLOOR = 10.0
REGIME_COMFORT = 100.0


def check_regime(single_carrier_variance: float) -> None:
    """Reject modulation variances too small for the large-modulation spectra."""
    if not single_carrier_variance >= REGIME_FLOOR:
        raise RegimeError(
            f"single-carrier modulation variance {single_carrier_variance} is below {REGIME_FLOOR}; "
            "the asymptotic spectra require sigma_omega0^2 >> 1"
        )
    if single_carrier_variance < REGIME_COMFORT:
        warnings.warn(
            f"modulation variance {single_carrier_variance} is inside the marginal band "
            f"[{REGIME_FLOOR}, {REGIME_COMFORT})",
            RegimeWarning,
            stacklevel=3,
        )


@dataclass(frozen=True)
class TwoWaySplits:
    """Optional explicit factors for spectrum entries known only through products.

    ``None`` means the symmetric split (equal factors).
    """

    wp: Optional[tuple] = None
    omega: Optional[tuple] = None
    pi: Optional[tuple] = None
    gamma: Optional[tuple] = None


@dataclass(frozen=True)
class ProtocolConfig:
    direction: str = "one_way"
    measurement: str = "hom"
    reconciliation: str = "rr"
    single_carrier_variance: float = 100.0
    multicarrier_variance: Optional[float] = None
    squeezing: float = 1.0
    shot_noise: float = 1.0
    beam_splitter: float = 0.5
    vacuum_noise: float = 1.0
    ensemble: Optional[ChannelEnsemble] = None
    t_bar: Optional[float] = None
    w_bar: Optional[float] = None
    quadrature_convention: str = "real"
    rr_het_form: str = "standard"
    twoway_rr_het_form: str = "literal"
    splits: TwoWaySplits = field(default_factory=TwoWaySplits)
    strict_splits: bool = False

    def __post_init__(self) -> None:
        if self.direction not in DIRECTIONS:
            raise ParameterError(f"direction must be one of {DIRECTIONS}")
        if self.measurement not in MEASUREMENTS:
            raise ParameterError(f"measurement must be one of {MEASUREMENTS}")
        if self.reconciliation not in RECONCILIATIONS:
            raise ParameterError(f"reconciliation must be one of {RECONCILIATIONS}")
        if not self.single_carrier_variance > 0:
            raise ParameterError("single-carrier variance must be positive")
        if self.multicarrier_variance is not None and not self.multicarrier_variance > 0:
            raise ParameterError("multicarrier variance must be positive")
        if not (self.shot_noise > 0 and self.vacuum_noise > 0):
            raise ParameterError("shot noise and vacuum noise must be positive")
        if not 0.0 < self.beam_splitter < 1.0:
            raise ParameterError("beam splitter transmittance must lie in (0, 1)")
        if self.quadrature_convention not in ("real", "complex"):
            raise ParameterError("quadrature_convention must be real or complex")
        if self.rr_het_form not in ("standard", "alternate"):
            raise ParameterError("rr_het_form must be standard or alternate")
        if self.twoway_rr_het_form not in ("literal", "linear"):
            raise ParameterError("twoway_rr_het_form must be literal or linear")
        mod = self.modulation_variance
        if not (1.0 / mod < self.squeezing < mod or self.squeezing == 1.0):
            raise ParameterError(f"squeezing {self.squeezing} outside ({1 / mod}, {mod})")
        if self.ensemble is not None and self.multicarrier_variance is not None:
            budget = self.ensemble.n * self.single_carrier_variance
            if self.ensemble.l * self.multicarrier_variance > budget * (1 + 1e-12):
                raise ParameterError("per-slot variance budget exceeds the single-carrier budget")

    @property
    def modulation_variance(self) -> float:
        """Per-subcarrier modulation variance; defaults to the single-carrier one."""
        if self.multicarrier_variance is None:
            return self.single_carrier_variance
        return self.multicarrier_variance

    @property
    def variant(self) -> str:
        return f"{self.direction}/{self.reconciliation}/{self.measurement}"

    def resolved(self) -> tuple[float, float]:
        """Averaged (T_bar, W_bar): explicit overrides win over the ensemble."""
        if self.t_bar is not None:
            t = float(self.t_bar)
        elif self.ensemble is not None:
            t = self.ensemble.t_bar
        else:
            raise ConfigurationError("need either t_bar or an ensemble")
        if self.w_bar is not None:
            w = float(self.w_bar)
        elif self.ensemble is not None and self.ensemble.l:
            w = self.ensemble.w_bar
        else:
            w = 1.0
        if not 0.0 < t < 1.0:
            raise ParameterError(f"T_bar={t} must lie in (0, 1)")
        if not w >= 1.0:
            raise ParameterError(f"W_bar={w} must be >= 1")
        return t, w

    def with_values(self, **changes) -> "ProtocolConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class KeyRateResult:
    rate_bits: float
    mutual_info_term: float
    eve_term: float
    spectra: dict
    t_bar: float
    w_bar: float
    variant: str

    @property
    def rate_clamped(self) -> float:
        return max(0.0, self.rate_bits)

    @property
    def parameters_echo(self) -> tuple[float, float]:
        return self.t_bar, self.w_bar


def make_result(info: float, eve: float, spectra: dict, t: float, w: float, variant: str) -> KeyRateResult:
    return KeyRateResult(info - eve, info, eve, spectra, t, w, variant)


def physical_spectrum(label: str, values) -> SymplecticSpectrum:
    """Build a spectrum, turning an unphysical eigenvalue into a consistency error."""
    try:
        return SymplecticSpectrum(values)
    except DomainError as exc:
        raise ConsistencyError(f"spectrum {label} is unphysical: {exc}") from exc


def split_pair(product: float, explicit: Optional[tuple], label: str) -> tuple[float, float]:
    if explicit is None:
        root = math.sqrt(product)
        return root, root
    if len(explicit) != 2:
        raise ConfigurationError(f"{label} split needs two factors")
    a, b = (float(v) for v in explicit)
    if not math.isclose(a * b, product, rel_tol=1e-9, abs_tol=1e-15):
        raise ConfigurationError(f"{label} factors multiply to {a * b}, expected {product}")
    return a, b
