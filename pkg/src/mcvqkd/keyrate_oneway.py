"""Asymptotic one-way key rates and the spectra behind them.

Only the averaged gain T and Eve variance W enter. Spectra are the
large-modulation forms, so the modulation variance must be at least 10.
"""

from __future__ import annotations

import math

from .attack_model import conditional_variances_oneway, homodyne_quadrature_terms, keyrate_per_quadrature
from .errors import ParameterError
from .gaussian_core import entropy_g
from .protocol import KeyRateResult, ProtocolConfig, check_regime, make_result, physical_spectrum

__all__ = [
    "homodyne_quadrature_terms",
    "keyrate_oneway",
    "keyrate_oneway_per_slot",
    "keyrate_per_quadrature",
    "rate_terms_oneway",
    "spectra_oneway",
]


def spectra_oneway(config: ProtocolConfig) -> dict:
    check_regime(config.single_carrier_variance)
    t, w = config.resolved()
    s0 = config.single_carrier_variance
    bob_c, eve_c = conditional_variances_oneway(t, w)
    out = {"B": physical_spectrum("B", [t * s0]), "E": physical_spectrum("E", [(1 - t) * s0, w])}
    out["BE"] = physical_spectrum("BE", [s0, 1.0, 1.0])
    if config.measurement == "hom":
        out["B|A"] = physical_spectrum("B|A", [math.sqrt(bob_c * t * s0)])
        if config.reconciliation == "rr":
            out["E|B"] = physical_spectrum("E|B", [math.sqrt((1 - t) * s0 * w / t), 1.0])
        else:
            out["E|A"] = physical_spectrum("E|A", [math.sqrt(eve_c * (1 - t) * s0), math.sqrt(bob_c * w / eve_c)])
    else:
        out["B|A"] = physical_spectrum("B|A", [bob_c])
        if config.reconciliation == "rr":
            out["E|B"] = physical_spectrum("E|B", [(1 - t + bob_c) / t, 1.0])
        else:
            out["E|A"] = physical_spectrum("E|A", [bob_c, 1.0])
    return out


def rate_terms_oneway(measurement: str, reconciliation: str, t: float, w: float, rr_het_form: str = "standard") -> tuple[float, float]:
    """(information term, Eve term) in bits for one variant at (T, W)."""
    bob_c, eve_c = conditional_variances_oneway(t, w)
    g_w = entropy_g(w)
    if measurement == "hom" and reconciliation == "rr":
        return 0.5 * math.log2(w / ((1 - t) * bob_c)), g_w
    if measurement == "hom" and reconciliation == "dr":
        # Eve's conditional entropy keeps one non-trivial eigenvalue
        info = 0.5 * math.log2(t * eve_c / ((1 - t) * bob_c))
        return info, g_w - entropy_g(math.sqrt(w * bob_c / eve_c))
    if measurement == "het" and reconciliation == "rr":
        lead = 1.0 / (1 - t) if rr_het_form == "standard" else t / (1 - t)
        return math.log2(lead) - entropy_g(bob_c), g_w
    if measurement == "het" and reconciliation == "dr":
        return math.log2(t / (1 - t)), g_w
    raise ParameterError(f"unknown variant {measurement}/{reconciliation}")


def keyrate_oneway(config: ProtocolConfig) -> KeyRateResult:
    if config.direction != "one_way":
        raise ParameterError("keyrate_oneway needs a one_way configuration")
    spectra = spectra_oneway(config)
    t, w = config.resolved()
    info, eve = rate_terms_oneway(config.measurement, config.reconciliation, t, w, config.rr_het_form)
    return make_result(info, eve, spectra, t, w, config.variant)


def keyrate_oneway_per_slot(config: ProtocolConfig) -> float:
    """Diagnostic: mean of the rate evaluated slot by slot instead of at averaged (T, W)."""
    if config.ensemble is None or not config.ensemble.l:
        raise ParameterError("per-slot evaluation needs an ensemble with selected slots")
    rates = []
    for slot in config.ensemble.selected_slots():
        info, eve = rate_terms_oneway(
            config.measurement, config.reconciliation, slot.fourier_gain, slot.eve_variance, config.rr_het_form
        )
        rates.append(info - eve)
    return math.fsum(rates) / len(rates)
