"""Entangling-cloner statistics.

Eve couples each selected sub-channel into one arm of an EPR pair of
variance W through a beam splitter of gain 1 - T. Everything here works
with the averaged gain T and averaged W of the selected slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DataError, ParameterError
from .gaussian_core import is_psd

_CS_TOL = 1e-9

_I2 = np.eye(2)
_Z2 = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class QuadraturePairStats:
    var_a: float
    var_b: float
    cov_ab: float

    def __post_init__(self) -> None:
        if not (self.var_a > 0 and self.var_b > 0):
            raise ParameterError("second moments must be positive")


def conditional_variance(stats: QuadraturePairStats) -> float:
    """var(a | b) = <a^2> - <ab>^2 / <b^2>."""
    prod = stats.var_a * stats.var_b
    excess = stats.cov_ab ** 2 - prod
    if excess > _CS_TOL * prod:
        raise DataError(f"Cauchy-Schwarz violated: cov^2={stats.cov_ab ** 2} > {prod}")
    return max(0.0, stats.var_a - stats.cov_ab ** 2 / stats.var_b)


def estimator_coefficient(stats: QuadraturePairStats) -> float:
    """Optimal linear estimator weight <ab>/<b^2>; the sign is kept."""
    if stats.var_b == 0:
        raise ParameterError("zero denominator in estimator coefficient")
    return stats.cov_ab / stats.var_b


def _check_tw(t_bar: float, w_bar: float, *, closed: bool = False) -> None:
    lo_ok = t_bar >= 0.0 if closed else t_bar > 0.0
    hi_ok = t_bar <= 1.0 if closed else t_bar < 1.0
    if not (lo_ok and hi_ok):
        raise ParameterError(f"T_bar={t_bar} outside {'[0, 1]' if closed else '(0, 1)'}")
    if not w_bar >= 1.0:
        raise ParameterError(f"W_bar={w_bar} must be >= 1")


def conditional_variances_oneway(t_bar: float, w_bar: float) -> tuple[float, float]:
    """(var(B|A), var(E|A)) for the one-way cloner."""
    _check_tw(t_bar, w_bar, closed=True)
    bob = (1.0 - t_bar) * w_bar + t_bar
    eve = (1.0 - t_bar) + t_bar * w_bar
    return bob, eve


@dataclass(frozen=True)
class EveCovarianceOneWay:
    t_bar: float
    W: float
    modulation_variance: float
    sigma2_B_given_A: float
    sigma2_E_given_A: float
    kappa: float
    mu: float
    theta: float
    bob_variance: float
    eve_variance: float

    def eve_matrix(self) -> np.ndarray:
        """4x4 covariance of Eve's reflected mode and retained ancilla."""
        return np.block([[self.eve_variance * _I2, self.kappa * _Z2], [self.kappa * _Z2, self.W * _I2]])

    def bob_matrix(self) -> np.ndarray:
        return self.bob_variance * _I2

    def cross_block(self) -> np.ndarray:
        """Correlations of (reflected mode, ancilla) with Bob's mode."""
        return np.vstack([self.mu * _I2, self.theta * _Z2])

    def joint_matrix(self) -> np.ndarray:
        """6x6 covariance ordered (Eve reflected, Eve ancilla, Bob)."""
        c = self.cross_block()
        return np.block([[self.eve_matrix(), c], [c.T, self.bob_matrix()]])


def eve_covariance_oneway(t_bar: float, w_bar: float, modulation_variance: float = 1.0) -> EveCovarianceOneWay:
    _check_tw(t_bar, w_bar, closed=True)
    if not modulation_variance > 0:
        raise ParameterError("modulation variance must be positive")
    bob_c, eve_c = conditional_variances_oneway(t_bar, w_bar)
    epr = w_bar * w_bar - 1.0
    cov = EveCovarianceOneWay(
        t_bar=t_bar,
        W=w_bar,
        modulation_variance=modulation_variance,
        sigma2_B_given_A=bob_c,
        sigma2_E_given_A=eve_c,
        kappa=math.sqrt(t_bar * epr),
        mu=(w_bar - modulation_variance) * math.sqrt((1.0 - t_bar) * t_bar),
        theta=math.sqrt((1.0 - t_bar) * epr),
        bob_variance=(1.0 - t_bar) * w_bar + t_bar * modulation_variance,
        eve_variance=(1.0 - t_bar) * modulation_variance + t_bar * w_bar,
    )
    for name, m in (("Eve", cov.eve_matrix()), ("joint", cov.joint_matrix())):
        if not is_psd(m, tol=1e-9 * max(1.0, np.abs(m).max())):
            raise ConsistencyError(f"{name} covariance is not PSD at T={t_bar}, W={w_bar}")
    return cov


def holevo_from_conditionals(variance: float, conditional_variance: float) -> float:
    """0.5 log2(variance / conditional); negative values are returned raw."""
    if not conditional_variance > 0:
        raise ParameterError("conditional variance must be positive")
    if not variance > 0:
        raise ParameterError("variance must be positive")
    return 0.5 * math.log2(variance / conditional_variance)


@dataclass(frozen=True)
class HomEstimatorVariances:
    x_given_e: float
    p_given_e: float
    eve_x: float
    eve_p: float
    lower_bound: float
    shot_noise: float


def hom_estimator_variances(
    fourier_gain: float,
    sigma_x2: float,
    modulation_variance: float,
    squeezing: float = 1.0,
    shot_noise: float = 1.0,
) -> HomEstimatorVariances:
    """Conditional variances of the homodyne estimators on one sub-channel.

    Squeezing must lie strictly between 1/modulation and modulation.
    """
    if not 0.0 < fourier_gain <= 1.0:
        raise ParameterError("fourier gain must lie in (0, 1]")
    if not (sigma_x2 >= 0 and modulation_variance > 0 and shot_noise > 0):
        raise ParameterError("variances must be positive")
    if not 1.0 / modulation_variance < squeezing < modulation_variance:
        if not (modulation_variance == 1.0 and squeezing == 1.0):
            raise ParameterError(
                f"squeezing {squeezing} outside ({1 / modulation_variance}, {modulation_variance})"
            )
    g = fourier_gain
    floor = g * (sigma_x2 + 1.0 / modulation_variance) * shot_noise
    x = g * (sigma_x2 + squeezing) * shot_noise
    p = g * (sigma_x2 + 1.0 / squeezing) * shot_noise
    eve = shot_noise / (g * (sigma_x2 + 1.0 / modulation_variance))
    if x < floor * (1 - 1e-12) or p < floor * (1 - 1e-12):
        raise ConsistencyError("estimator variance below its lower bound")
    return HomEstimatorVariances(x, p, eve, eve, floor, shot_noise)


@dataclass(frozen=True)
class QuadratureTerms:
    info_x: float
    info_p: float
    chi_x: float
    chi_p: float


def homodyne_quadrature_terms(
    est: HomEstimatorVariances, estimator_x2: float, estimator_p2: float
) -> QuadratureTerms:
    """Per-quadrature Bob information and Eve Holevo terms from estimator variances."""
    if not (estimator_x2 > 0 and estimator_p2 > 0):
        raise ParameterError("estimator second moments must be positive")
    return QuadratureTerms(
        info_x=0.5 * math.log2(estimator_x2 / est.x_given_e),
        info_p=0.5 * math.log2(estimator_p2 / est.p_given_e),
        chi_x=0.5 * math.log2(estimator_x2 / est.eve_x),
        chi_p=0.5 * math.log2(estimator_p2 / est.eve_p),
    )


def keyrate_per_quadrature(terms: QuadratureTerms) -> tuple[float, float]:
    """(S_x, S_p) as information minus Eve's Holevo term per quadrature."""
    return terms.info_x - terms.chi_x, terms.info_p - terms.chi_p


@dataclass(frozen=True)
class HetEstimatorVariances:
    x: float
    p: float
    splitter_ratio: float
    received_variance: float


def received_variance(t_bar: float, single_carrier_variance: float, noise_variance: float) -> float:
    """Per-quadrature variance at the receiver: T sigma0^2 + sigma_N^2."""
    if not (0 <= t_bar <= 1 and single_carrier_variance > 0 and noise_variance >= 0):
        raise ParameterError("invalid received-variance inputs")
    return t_bar * single_carrier_variance + noise_variance


def het_estimator_variances(
    received: float, beam_splitter: float = 0.5, shot_noise: float = 1.0
) -> HetEstimatorVariances:
    """Heterodyne conditional variances; their product is shot_noise^2."""
    if not 0.0 < beam_splitter < 1.0:
        raise ParameterError("beam splitter transmittance must lie in (0, 1)")
    if not (received > 0 and shot_noise > 0):
        raise ParameterError("received variance and shot noise must be positive")
    h = (1.0 - beam_splitter) / beam_splitter
    x = (h * received + 1.0) / (received + h) * shot_noise
    return HetEstimatorVariances(x=x, p=shot_noise * shot_noise / x, splitter_ratio=h, received_variance=received)
