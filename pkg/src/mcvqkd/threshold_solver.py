"""Security thresholds: where the key rate crosses zero.

Excess noise N and Eve variance W are tied by N = (W - 1) g_E / (1 - g_E)
with Eve gain g_E = 1 - T, so every threshold is found by bisection on
the rate written as a function of W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

from .channel_model import ChannelEnsemble, eve_variance_for_excess_noise, excess_noise
from .errors import ConsistencyError, ParameterError
from .multiuser_mqa import svd_transformed_eve_gain
from .protocol import ProtocolConfig
from .rates import keyrate

BISECT_MAXITER = 200
BISECT_XTOL = 1e-12
RESIDUAL_TOL = 1e-9
W_CAP = 1e6
CERT_STEP = 1e-3

CLOSED_FORM_VARIANTS = ("rr_one_way_single", "dr_one_way_single", "rr_two_way_single", "dr_two_way_single")
_TWO_WAY_REFERENCE = {"rr_two_way_single": 0.8, "dr_two_way_single": 0.75}


@dataclass(frozen=True)
class BisectionResult:
    root: float
    lo: float
    hi: float
    residual: float
    iterations: int


def bisect_decreasing(f: Callable[[float], float], lo: float, hi: float,
                      xtol: float = BISECT_XTOL, maxiter: int = BISECT_MAXITER) -> BisectionResult:
    """Root of f with f(lo) > 0 >= f(hi).

    Returns the last point with a positive value, so the rate is positive at
    the threshold side of the bracket. The residual is |f(root)|.
    """
    flo, fhi = f(lo), f(hi)
    if not (flo > 0 >= fhi):
        raise ParameterError(f"no sign change on [{lo}, {hi}]: f={flo}, {fhi}")
    it = 0
    while it < maxiter and hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm > 0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
        it += 1
    root, val = (lo, flo) if abs(flo) <= abs(fhi) else (hi, fhi)
    return BisectionResult(root, lo, hi, abs(val), it)


def dr_single_carrier_condition(noise: float) -> float:
    """Left side of the DR single-carrier condition; equals e^2 at the threshold."""
    r = math.sqrt(1.0 + noise)
    return ((r + 1.0) / (r - 1.0)) ** r / (1.0 + noise)


def tolerable_excess_noise_closed_form(variant: str) -> float:
    if variant == "rr_one_way_single":
        return 0.5 * (math.sqrt(1.0 + 16.0 / math.e ** 2) - 1.0)
    if variant == "dr_one_way_single":
        target = math.e ** 2
        res = bisect_decreasing(lambda n: dr_single_carrier_condition(n) - target, 1e-6, 10.0)
        return res.root
    if variant in _TWO_WAY_REFERENCE:
        return _TWO_WAY_REFERENCE[variant]
    raise ParameterError(f"unknown closed-form variant {variant!r}; choose from {CLOSED_FORM_VARIANTS}")


def rr_product_condition(t_bar: float, noise: float, sigma0_2: float, vacuum_noise: float = 1.0,
                         grouping: str = "product") -> float:
    """Value of the coherent-state RR product that must stay below 1.

    ``product`` multiplies the two gain-weighted brackets;
    ``nested`` applies the gain once to the product of the unweighted brackets.
    """
    sx = vacuum_noise + noise
    if grouping == "product":
        return t_bar * (sx + 1.0) * t_bar * (sx + 1.0 / sigma0_2)
    if grouping == "nested":
        return t_bar * (sx + 1.0) * (sx + 1.0 / sigma0_2)
    raise ParameterError(f"unknown grouping {grouping!r}")


def rr_product_bound(t_bar: float, sigma0_2: float, vacuum_noise: float = 1.0,
                     grouping: str = "product", step: float = 1e-3, limit: float = 100.0) -> float:
    """Largest N on a coarse grid with the product condition below 1; 0 if none."""
    best = 0.0
    n = 0.0
    while n <= limit:
        if rr_product_condition(t_bar, n, sigma0_2, vacuum_noise, grouping) < 1.0:
            best = n
        else:
            break
        n += step
    return best


def dr_bound(t_bar: float) -> float:
    """DR upper bound 2 - 1/T on tolerable excess noise."""
    if not 0.0 < t_bar <= 1.0:
        raise ParameterError("T_bar must lie in (0, 1]")
    return 2.0 - 1.0 / t_bar


@dataclass(frozen=True)
class ThresholdResult:
    quantity: str
    value: float
    method: str
    bracket: tuple
    residual: float
    status: str
    protocol_echo: Optional[ProtocolConfig] = None
    closed_form_bound: Optional[float] = None
    constant: Optional[float] = None
    ratio: Optional[float] = None
    margin: Optional[float] = None

    @property
    def t_bar(self) -> Optional[float]:
        return None if self.protocol_echo is None else self.protocol_echo.t_bar


def _rate_in_w(config: ProtocolConfig, t_bar: float) -> Callable[[float], float]:
    def rate(w: float) -> float:
        return keyrate(replace(config, t_bar=t_bar, w_bar=w)).rate_bits
    return rate


def _solve_w(config: ProtocolConfig, t_bar: float, w_hi_start: float = 2.0) -> tuple[str, BisectionResult | None, float]:
    rate = _rate_in_w(config, t_bar)
    if rate(1.0) <= 0.0:
        return "no_headroom", None, 1.0
    hi = max(w_hi_start, 1.0 + 1e-9)
    while rate(hi) > 0.0:
        if hi >= W_CAP:
            return "unbounded", None, hi
        hi = min(2.0 * hi, W_CAP)
    return "ok", bisect_decreasing(rate, 1.0, hi), hi


def max_eve_variance(config: ProtocolConfig, t_bar_grid: Iterable[float]) -> list[ThresholdResult]:
    """Largest W with a positive rate at each T; rows sorted by T."""
    out = []
    for t in sorted(float(x) for x in t_bar_grid):
        if not 0.0 < t < 1.0:
            raise ParameterError(f"grid value {t} outside (0, 1)")
        cfg = replace(config, t_bar=t, w_bar=None)
        status, res, hi = _solve_w(cfg, t)
        if res is None:
            value = 1.0 if status == "no_headroom" else math.inf
            out.append(ThresholdResult("eve_variance", value, "bisection", (1.0, hi), 0.0 if status == "no_headroom" else math.nan, status, cfg))
            continue
        out.append(ThresholdResult("eve_variance", res.root, "bisection", (res.lo, res.hi), res.residual, status, cfg))
    return out


def _baseline_threshold(config: ProtocolConfig, t_single: float) -> float:
    w = _solve_w(replace(config, t_bar=t_single, w_bar=None), t_single)
    if w[1] is None:
        return 0.0 if w[0] == "no_headroom" else math.inf
    return (w[1].root - 1.0) * (1.0 - t_single) / t_single


def tolerable_excess_noise_multicarrier(
    config: ProtocolConfig,
    single_carrier_gain: Optional[float] = None,
    grouping: str = "product",
) -> ThresholdResult:
    """Largest excess noise with a positive rate at the configured T.

    With ``single_carrier_gain`` the result also carries the measured ratio
    to the single-carrier threshold and the matching comparison constant.
    """
    t, _ = config.resolved()
    cfg = replace(config, t_bar=t, w_bar=None)
    if config.reconciliation == "dr":
        bound = max(0.0, dr_bound(t))
    else:
        bound = rr_product_bound(t, config.single_carrier_variance, config.vacuum_noise, grouping)
    # start the search at the closed-form bound; bracket expansion follows
    w_start = eve_variance_for_excess_noise(bound, t) if bound > 0 else 2.0
    status, res, hi = _solve_w(cfg, t, w_start)
    if res is None:
        value = 0.0 if status == "no_headroom" else math.inf
        n_hi = (hi - 1.0) * (1.0 - t) / t
        return ThresholdResult("excess_noise", value, "bisection", (0.0, n_hi), 0.0 if status == "no_headroom" else math.nan,
                               "no_positive_rate" if status == "no_headroom" else "unbounded", cfg, bound)
    to_n = lambda w: (w - 1.0) * (1.0 - t) / t  # noqa: E731
    n_tol = to_n(res.root)
    ratio = constant = margin = None
    if single_carrier_gain is not None:
        if not 0.0 < single_carrier_gain < 1.0:
            raise ParameterError("single-carrier gain must lie in (0, 1)")
        base = _baseline_threshold(config, single_carrier_gain)
        ratio = math.inf if base == 0.0 else n_tol / base
        if config.reconciliation == "dr":
            constant = 1.0 / single_carrier_gain - 1.0 / t
        else:
            constant = (rr_product_condition(t, n_tol, config.single_carrier_variance, config.vacuum_noise, grouping)
                        - rr_product_condition(single_carrier_gain, n_tol, config.single_carrier_variance,
                                               config.vacuum_noise, grouping))
    if config.reconciliation == "dr" and config.measurement == "hom" and config.direction == "one_way":
        margin = math.e ** 2 - dr_single_carrier_condition(n_tol) if n_tol > 0 else None
    return ThresholdResult("excess_noise", n_tol, "bisection", (to_n(res.lo), to_n(res.hi)), res.residual, "ok", cfg,
                           bound, constant, ratio, margin)


def improvement_ratio_kappa(single: Sequence[float], multi: Sequence[float]) -> float:
    """Single-carrier over multicarrier excess noise; inputs are (W, Eve gain)."""
    n_single = excess_noise(*single)
    n_multi = excess_noise(*multi)
    if n_multi == 0.0:
        return 1.0 if n_single == 0.0 else math.inf
    return n_single / n_multi


def aggregate_tolerance(w_bar: float, eve_gain_bar: float) -> float:
    """(1 - g_E) / ((W - 1) g_E): grows as Eve's coupling shrinks."""
    if eve_gain_bar <= 0.0 or w_bar <= 1.0:
        return math.inf
    return (1.0 - eve_gain_bar) / ((w_bar - 1.0) * eve_gain_bar)


def svd_threshold_boost(ensemble: ChannelEnsemble, v: Sequence[float]) -> tuple[float, float]:
    """Aggregate tolerance before and after SVD precoding of the selected slots."""
    vs = [float(x) for x in v]
    slots = ensemble.selected_slots()
    if len(vs) != len(slots):
        raise ParameterError("need one SVD gain per selected slot")
    if any(x < 1.0 for x in vs):
        raise ParameterError("SVD gains must be >= 1")
    before = math.fsum(s.eve_fourier_gain for s in slots) / len(slots)
    after = math.fsum(svd_transformed_eve_gain(s.eve_fourier_gain, x) for s, x in zip(slots, vs)) / len(slots)
    w_bar = ensemble.w_bar
    n_amqd = aggregate_tolerance(w_bar, before)
    n_svd = aggregate_tolerance(w_bar, after)
    if any(x > 1.0 for x in vs) and w_bar > 1.0 and not n_svd > n_amqd:
        raise ConsistencyError("SVD precoding failed to raise the aggregate tolerance")
    return n_amqd, n_svd
