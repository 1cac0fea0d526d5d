"""Two-way key rates: both channel legs share the averaged (T, W).

Several spectrum entries are pinned down only through products of unnamed
factors. Those factors are split symmetrically unless the caller supplies
them via ``TwoWaySplits``. The hom and DR-het rates do not depend on the
split. The RR-het rate sums entropies of the individual Gamma factors, so
strict mode refuses to guess them.

Eve's eight-mode covariance puts her full reflected-mode variance in the
leading block. With the conditional variance there instead, the matrix
fails the PSD check for most parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attack_model import conditional_variances_oneway, eve_covariance_oneway
from .errors import ConfigurationError, ConsistencyError, ParameterError
from .gaussian_core import entropy_g, is_psd
from .protocol import (
    KeyRateResult,
    ProtocolConfig,
    TwoWaySplits,
    check_regime,
    make_result,
    physical_spectrum,
    split_pair,
)

_I2 = np.eye(2)
_Z2 = np.diag([1.0, -1.0])
_O2 = np.zeros((2, 2))


@dataclass(frozen=True)
class TwoWayCovariances:
    t_bar: float
    W: float
    modulation_variance: float
    lambda_B: float
    lambda_E: float
    xi: float
    mu_dd: float
    theta_dd: float
    kappa: float
    eve_variance: float
    bob_matrix: np.ndarray
    eve_matrix: np.ndarray


def twoway_covariances(t_bar: float, w_bar: float, sigma_omega2: float) -> TwoWayCovariances:
    if not 0.0 < t_bar < 1.0:
        raise ParameterError(f"T_bar={t_bar} must lie in (0, 1)")
    if not w_bar >= 1.0:
        raise ParameterError(f"W_bar={w_bar} must be >= 1")
    if not sigma_omega2 >= 1.0:
        raise ParameterError("modulation variance must be >= 1")
    t, w, s = t_bar, w_bar, sigma_omega2
    one = eve_covariance_oneway(t, w, s)
    lam_b = t * s + (1 - t * t) * w + t * s
    xi = t * (1 - t) * s + (1 - t) ** 2 * w + t * w
    lam_e = xi + (1 - t) * s
    mu_dd = -math.sqrt(1 - t) * one.mu
    theta_dd = -math.sqrt(1 - t) * one.theta
    k = one.kappa
    corr = t * math.sqrt(s * s - 1)
    bob = np.block([[s * _I2, corr * _Z2], [corr * _Z2, lam_b * _I2]])
    eve = np.block(
        [
            [one.eve_variance * _I2, k * _Z2, mu_dd * _I2, _O2],
            [k * _Z2, w * _I2, theta_dd * _Z2, _O2],
            [mu_dd * _I2, theta_dd * _Z2, lam_e * _I2, k * _Z2],
            [_O2, _O2, k * _Z2, w * _I2],
        ]
    )
    for name, m in (("Bob", bob), ("Eve", eve)):
        if not is_psd(m, tol=1e-9 * max(1.0, np.abs(m).max())):
            raise ConsistencyError(f"two-way {name} covariance is not PSD at T={t}, W={w}, s={s}")
    return TwoWayCovariances(t, w, s, lam_b, lam_e, xi, mu_dd, theta_dd, k, one.eve_variance, bob, eve)


def gamma_product(t_bar: float, w_bar: float) -> float:
    t, w = t_bar, w_bar
    return (1 + w * (1 + t ** 3 + (1 - t) * (1 + t * t) * w)) / (t * (1 + t))


def _gamma_factors(t: float, w: float, splits: TwoWaySplits, strict: bool) -> tuple[float, float, float]:
    prod = gamma_product(t, w)
    if splits.gamma is None:
        if strict:
            raise ConfigurationError("strict mode needs explicit Gamma factors for the RR heterodyne rate")
        root = prod ** (1.0 / 3.0)
        return root, root, root
    if len(splits.gamma) != 3:
        raise ConfigurationError("Gamma split needs three factors")
    g = tuple(float(v) for v in splits.gamma)
    if not math.isclose(g[0] * g[1] * g[2], prod, rel_tol=1e-9):
        raise ConfigurationError(f"Gamma factors multiply to {g[0] * g[1] * g[2]}, expected {prod}")
    return g


def twoway_spectra(
    t_bar: float,
    w_bar: float,
    sigma_omega0_2: float,
    measurement: str = "hom",
    reconciliation: str = "rr",
    splits: TwoWaySplits = TwoWaySplits(),
    strict: bool = False,
) -> dict:
    """Labeled spectra plus a ``products`` entry holding the split products."""
    check_regime(sigma_omega0_2)
    t, w, s0 = t_bar, w_bar, sigma_omega0_2
    if not 0.0 < t < 1.0 or not w >= 1.0:
        raise ParameterError("need 0 < T_bar < 1 and W_bar >= 1")
    wp1, wp2 = split_pair(t, splits.wp, "wp")
    om2, om4 = split_pair((1 - t) ** 2, splits.omega, "omega")
    pi_prod = math.sqrt((1 - t) ** 3 * (1 + t ** 3) / t) * w
    pi1, _pi2 = split_pair(pi_prod, splits.pi, "pi")
    gamma = math.sqrt(1 + t * t * (t * t + t - 2))
    ell = math.sqrt(1 + 3 * t + t * t)
    out = {
        "B": physical_spectrum("B", [t * s0 / wp2, t * s0 / wp1]),
        "E": physical_spectrum("E", [(1 - t) ** 2 * s0 / om2, (1 - t) ** 2 * s0 / om4, w, w]),
    }
    if measurement == "hom":
        out["B|A"] = physical_spectrum("B|A", [gamma * s0, math.sqrt(t * (1 - t * t)) * w * s0 / gamma])
        if reconciliation == "rr":
            out["E|B"] = physical_spectrum("E|B", [pi1 * s0, w, 1.0])
        else:
            out["E|A"] = physical_spectrum("E|A", [ell * (1 - t) * s0, math.sqrt(1 - t * t) * s0 * w / ell, w, 1.0])
    else:
        out["B|A"] = physical_spectrum("B|A", [(1 - t * t) * s0, w])
        if reconciliation == "rr":
            g1, g2, g3 = _gamma_factors(t, w, splits, strict)
            out["E|B"] = physical_spectrum("E|B", [g1, g2, g3, (1 - t * t) * s0])
        else:
            out["E|A"] = physical_spectrum("E|A", [(1 - t * t) * s0, w, 1.0, 1.0])
    out["products"] = {
        "wp": wp1 * wp2,
        "omega": om2 * om4,
        "pi": pi_prod,
        "gamma": gamma_product(t, w),
        "gamma_factor": gamma,
        "ell": ell,
    }
    return out


def rate_terms_twoway(
    measurement: str,
    reconciliation: str,
    t: float,
    w: float,
    *,
    rr_het_form: str = "literal",
    splits: TwoWaySplits = TwoWaySplits(),
    strict: bool = False,
) -> tuple[float, float]:
    g_w = entropy_g(w)
    if measurement == "hom" and reconciliation == "rr":
        return 0.5 * math.log2((1 - t + t * t) / (1 - t) ** 2), g_w
    if measurement == "hom" and reconciliation == "dr":
        return 0.5 * math.log2(t / (1 - t) ** 2), g_w
    if measurement == "het" and reconciliation == "dr":
        return math.log2(t / (1 - t) ** 2), 2.0 * g_w
    if measurement == "het" and reconciliation == "rr":
        _bob_c, eve_c = conditional_variances_oneway(t, w)
        lead = 2.0 ** t if rr_het_form == "literal" else t
        denom = eve_c * (1 - t) * (1 + t * t + w - t * t * w)
        gammas = _gamma_factors(t, w, splits, strict)
        info = math.log2(lead * (1 + t) / denom)
        return info, 2.0 * g_w - math.fsum(entropy_g(g) for g in gammas)
    raise ParameterError(f"unknown variant {measurement}/{reconciliation}")


def keyrate_twoway(config: ProtocolConfig) -> KeyRateResult:
    if config.direction != "two_way":
        raise ParameterError("keyrate_twoway needs a two_way configuration")
    t, w = config.resolved()
    spectra = twoway_spectra(
        t, w, config.single_carrier_variance, config.measurement, config.reconciliation,
        config.splits, config.strict_splits,
    )
    spectra.pop("products")
    twoway_covariances(t, w, config.modulation_variance)
    info, eve = rate_terms_twoway(
        config.measurement, config.reconciliation, t, w,
        rr_het_form=config.twoway_rr_het_form, splits=config.splits, strict=config.strict_splits,
    )
    return make_result(info, eve, spectra, t, w, config.variant)
