"""Capacity and private-capacity regions when K users share one sub-channel set.

All users see the same selected slots, so every corner point (one user
holding the whole variance budget) equals the sum capacity. Capacities
count both quadratures: log2(1 + SNR) per slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .channel_model import (
    ChannelEnsemble,
    excess_noise,
    private_capacity_subchannel,
    sigma_x_squared,
)
from .errors import DomainError, ParameterError, StateError

_BUDGET_RTOL = 1e-9


@dataclass(frozen=True)
class RegionPoint:
    per_user_rates: tuple

    def __post_init__(self) -> None:
        rates = tuple(float(r) for r in self.per_user_rates)
        if any(r < 0 or math.isnan(r) for r in rates):
            raise ParameterError("per-user rates must be non-negative")
        object.__setattr__(self, "per_user_rates", rates)

    def within(self, region: "CapacityRegion", tol: float = 1e-12) -> bool:
        if len(self.per_user_rates) != region.users:
            return False
        if math.fsum(self.per_user_rates) > region.sum_capacity + tol:
            return False
        return all(r <= c + tol for r, c in zip(self.per_user_rates, region.corner_points))

    def mix(self, other: "RegionPoint", weight: float) -> "RegionPoint":
        """Time-sharing combination weight*self + (1 - weight)*other."""
        if not 0.0 <= weight <= 1.0:
            raise ParameterError("weight must lie in [0, 1]")
        return RegionPoint(weight * a + (1 - weight) * b for a, b in zip(self.per_user_rates, other.per_user_rates))


@dataclass(frozen=True)
class CapacityRegion:
    corner_points: tuple
    sum_capacity: float
    symmetric_capacity: float
    private: bool
    eve_terms: tuple = ()
    noise_form_sum: Optional[float] = None
    allocation: tuple = field(default=(), compare=False)

    @property
    def users(self) -> int:
        return len(self.corner_points)

    @property
    def noise_form_symmetric(self) -> Optional[float]:
        if self.noise_form_sum is None:
            return None
        return self.noise_form_sum / self.users


def _check_users(users: int) -> None:
    if int(users) != users or users < 1:
        raise ParameterError("number of users must be a positive integer")


def uniform_allocation(ensemble: ChannelEnsemble, modulation_variance: float) -> list[float]:
    if not modulation_variance > 0:
        raise ParameterError("modulation variance must be positive")
    return [float(modulation_variance)] * ensemble.l


def waterfill_allocation(ensemble: ChannelEnsemble, modulation_variance: float) -> list[float]:
    """Per-slot variances maximizing the sum capacity under a mean budget."""
    if not modulation_variance > 0:
        raise ParameterError("modulation variance must be positive")
    chosen = ensemble.selected_slots()
    if not chosen:
        raise StateError("no selected sub-channels to allocate")
    floors = [s.noise_variance / s.fourier_gain for s in chosen]
    total = modulation_variance * len(chosen)
    order = sorted(range(len(chosen)), key=lambda i: floors[i])
    level = 0.0
    for count in range(len(order), 0, -1):
        active = order[:count]
        level = (total + math.fsum(floors[i] for i in active)) / count
        if level > floors[active[-1]]:
            break
    alloc = [max(0.0, level - f) for f in floors]
    # renormalize against rounding so the budget holds exactly
    scale = total / math.fsum(alloc)
    return [a * scale for a in alloc]


def allocate(ensemble: ChannelEnsemble, modulation_variance: float, mode: str = "uniform") -> list[float]:
    if mode == "uniform":
        return uniform_allocation(ensemble, modulation_variance)
    if mode == "waterfill":
        return waterfill_allocation(ensemble, modulation_variance)
    raise ParameterError(f"unknown allocation mode {mode!r}")


def _gains(ensemble: ChannelEnsemble, gain_scale: Optional[Sequence[float]] = None) -> list[float]:
    gains = [s.fourier_gain for s in ensemble.selected_slots()]
    if gain_scale is not None:
        if len(gain_scale) != len(gains):
            raise ParameterError("gain scale length must match the number of selected slots")
        gains = [g * v for g, v in zip(gains, gain_scale)]
    return gains


def sum_capacity(
    ensemble: ChannelEnsemble,
    sigma_omega_i2: Sequence[float],
    modulation_variance: Optional[float] = None,
    gain_scale: Optional[Sequence[float]] = None,
) -> float:
    """Sum over selected slots of log2(1 + var_i g_i / noise_i).

    When ``modulation_variance`` is given the allocation's mean must match it.
    """
    alloc = [float(v) for v in sigma_omega_i2]
    if len(alloc) != ensemble.l:
        raise ParameterError(f"allocation has {len(alloc)} entries for {ensemble.l} selected slots")
    if any(v < 0 for v in alloc):
        raise ParameterError("allocations must be non-negative")
    if modulation_variance is not None and alloc:
        mean = math.fsum(alloc) / len(alloc)
        if abs(mean - modulation_variance) > _BUDGET_RTOL * max(1.0, modulation_variance):
            raise ParameterError(f"allocation mean {mean} violates budget {modulation_variance}")
    gains = _gains(ensemble, gain_scale)
    noises = [s.noise_variance for s in ensemble.selected_slots()]
    return math.fsum(math.log2(1.0 + v * g / n) for v, g, n in zip(alloc, gains, noises))


def symmetric_capacity(ensemble: ChannelEnsemble, users: int, sigma_omega_i2: Sequence[float]) -> float:
    _check_users(users)
    return sum_capacity(ensemble, sigma_omega_i2) / users


def corner_points(ensemble: ChannelEnsemble, users: int, sigma_omega_i2: Sequence[float]) -> list[float]:
    """Rate of user k when the full budget goes to k, for each k."""
    _check_users(users)
    c = sum_capacity(ensemble, sigma_omega_i2)
    return [c] * users


def corner_point_vectors(ensemble: ChannelEnsemble, users: int, sigma_omega_i2: Sequence[float]) -> list[RegionPoint]:
    corners = corner_points(ensemble, users, sigma_omega_i2)
    return [RegionPoint(c if j == k else 0.0 for j in range(users)) for k, c in enumerate(corners)]


def capacity_region(
    ensemble: ChannelEnsemble,
    users: int,
    sigma_omega_i2: Sequence[float],
    gain_scale: Optional[Sequence[float]] = None,
) -> CapacityRegion:
    _check_users(users)
    total = sum_capacity(ensemble, sigma_omega_i2, gain_scale=gain_scale)
    corners = [total] * users
    return CapacityRegion(tuple(corners), total, total / users, False, allocation=tuple(sigma_omega_i2))


def noise_form_private_sum(
    ensemble: ChannelEnsemble,
    sigma_omega_i2: Sequence[float],
    vacuum_noise: float = 1.0,
    gain_scale: Optional[Sequence[float]] = None,
) -> float:
    """Sum of per-slot private capacities (both quadratures), each floored at 0."""
    gains = _gains(ensemble, gain_scale)
    total = []
    for slot, var, g in zip(ensemble.selected_slots(), sigma_omega_i2, gains):
        if var <= 0:
            total.append(0.0)
            continue
        noise = excess_noise(slot.eve_variance, 1.0 - g) if g < 1.0 else 0.0
        total.append(private_capacity_subchannel(var, g, sigma_x_squared(noise, vacuum_noise), "complex"))
    return math.fsum(total)


def private_region(
    ensemble: ChannelEnsemble,
    users: int,
    eve_terms: Sequence[float],
    sigma_omega_i2: Sequence[float],
    vacuum_noise: float = 1.0,
    gain_scale: Optional[Sequence[float]] = None,
) -> CapacityRegion:
    """Private corners C_k - eve_k and sum C_sum - sum(eve), all floored at 0."""
    _check_users(users)
    eve = tuple(float(e) for e in eve_terms)
    if len(eve) != users:
        raise ParameterError(f"{len(eve)} eve terms for {users} users")
    if any(e < 0 for e in eve):
        raise ParameterError("eve terms must be non-negative")
    c = sum_capacity(ensemble, sigma_omega_i2, gain_scale=gain_scale)
    corners = tuple(max(0.0, c - e) for e in eve)
    s_sum = max(0.0, c - math.fsum(eve))
    noise_form = noise_form_private_sum(ensemble, sigma_omega_i2, vacuum_noise, gain_scale)
    return CapacityRegion(corners, s_sum, s_sum / users, True, eve, noise_form, tuple(sigma_omega_i2))


def svd_gain(nu_eve: float, sigma_N2: float, lambda_max2: float, gain_max: float) -> float:
    """Gain boost from precoding on the strongest singular direction."""
    if not (sigma_N2 > 0 and lambda_max2 > 0 and gain_max > 0):
        raise ParameterError("noise, eigenvalue and gain must be positive")
    denom = nu_eve - sigma_N2 / gain_max
    if denom <= 0:
        raise DomainError("nu_eve is too small for any secure transmission")
    return (nu_eve - sigma_N2 / lambda_max2) / denom


def svd_transformed_eve_gain(eve_gain: float, v: float) -> float:
    if not 0.0 <= eve_gain < 1.0:
        raise ParameterError("Eve gain must lie in [0, 1)")
    if v < 1.0:
        raise ParameterError("SVD gain must be >= 1")
    if not (1.0 - eve_gain) <= 1.0 / v:
        raise DomainError(f"SVD gain {v} too large for Eve gain {eve_gain}")
    return max(0.0, 1.0 - v * (1.0 - eve_gain))


def svd_private_capacities(
    ensemble: ChannelEnsemble,
    users: int,
    v: Sequence[float],
    eve_terms: Sequence[float],
    sigma_omega_i2: Sequence[float],
    vacuum_noise: float = 1.0,
    svd_eve_terms: Optional[Sequence[float]] = None,
) -> CapacityRegion:
    """Private region after scaling each selected slot's gain by v_i.

    ``svd_eve_terms`` defaults to the original Eve terms; if given, their sum
    may not exceed the original sum.
    """
    vs = [float(x) for x in v]
    if len(vs) != ensemble.l:
        raise ParameterError("need one SVD gain per selected slot")
    if any(x < 1.0 for x in vs):
        raise ParameterError("SVD gains must be >= 1")
    for slot, x in zip(ensemble.selected_slots(), vs):
        svd_transformed_eve_gain(slot.eve_fourier_gain, x)
    reduced = list(eve_terms) if svd_eve_terms is None else [float(e) for e in svd_eve_terms]
    if math.fsum(reduced) > math.fsum(eve_terms) + 1e-12:
        raise ParameterError("SVD Eve terms may not exceed the original Eve terms")
    return private_region(ensemble, users, reduced, sigma_omega_i2, vacuum_noise, gain_scale=vs)
