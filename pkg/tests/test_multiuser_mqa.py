import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcvqkd.channel_model import ChannelEnsemble, SubChannel
from mcvqkd.errors import DomainError, ParameterError
from mcvqkd.multiuser_mqa import (
    RegionPoint,
    allocate,
    capacity_region,
    corner_point_vectors,
    corner_points,
    noise_form_private_sum,
    private_region,
    sum_capacity,
    svd_gain,
    svd_private_capacities,
    svd_transformed_eve_gain,
    symmetric_capacity,
    waterfill_allocation,
)

V = 1.875 / 1.8


def two_slot():
    return ChannelEnsemble.uniform(2, 0.5, 0.25)


def three_slot():
    slots = (SubChannel.from_gain(0.9, 0.2), SubChannel.from_gain(0.7, 0.3), SubChannel.from_gain(0.6, 0.25))
    return ChannelEnsemble(slots, math.inf)


def test_sum_capacity_examples():
    assert sum_capacity(two_slot(), [1.0, 1.0]) == pytest.approx(2 * math.log2(3), abs=1e-14)
    dead = ChannelEnsemble.uniform(3, 0.0, 1.0)
    assert dead.l == 0 and sum_capacity(dead, []) == 0.0
    one = ChannelEnsemble.uniform(1, 0.5, 0.5)
    assert sum_capacity(one, [1.0]) == 1.0


def test_budget_violation():
    with pytest.raises(ParameterError):
        sum_capacity(two_slot(), [1.0, 2.0], modulation_variance=1.0)
    with pytest.raises(ParameterError):
        sum_capacity(two_slot(), [1.0])


def test_symmetric_and_corners():
    ens = two_slot()
    c = sum_capacity(ens, [1.0, 1.0])
    assert symmetric_capacity(ens, 1, [1.0, 1.0]) == c
    assert symmetric_capacity(ens, 2, [1.0, 1.0]) == pytest.approx(1.5849625, abs=1e-7)
    assert corner_points(ens, 2, [1.0, 1.0]) == [c, c]
    sym = [symmetric_capacity(ens, k, [1.0, 1.0]) for k in range(1, 20)]
    assert all(a > b for a, b in zip(sym, sym[1:]))
    vecs = corner_point_vectors(ens, 2, [1.0, 1.0])
    assert vecs[0].per_user_rates == (c, 0.0)
    with pytest.raises(ParameterError):
        symmetric_capacity(ens, 0, [1.0, 1.0])


def test_private_region_examples():
    ens = two_slot()
    c = capacity_region(ens, 2, [1.0, 1.0])
    p0 = private_region(ens, 2, [0.0, 0.0], [1.0, 1.0])
    assert p0.corner_points == c.corner_points and p0.sum_capacity == c.sum_capacity
    p = private_region(ens, 2, [0.5, 0.5], [1.0, 1.0])
    assert p.sum_capacity == pytest.approx(2 * math.log2(3) - 1.0)
    assert p.symmetric_capacity == p.sum_capacity / 2
    assert p.corner_points[0] == pytest.approx(2 * math.log2(3) - 0.5)
    # unit sigma_X^2 on every slot leaves no private SNR
    assert p.noise_form_sum == 0.0
    with pytest.raises(ParameterError):
        private_region(ens, 2, [0.5], [1.0, 1.0])


def test_svd_gain_examples():
    assert svd_gain(2.0, 0.1, 0.8, 0.5) == pytest.approx(V, rel=1e-14)
    assert svd_gain(2.0, 0.1, 0.5, 0.5) == 1.0
    assert svd_gain(1e12, 0.1, 0.8, 0.5) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        svd_gain(0.1, 0.1, 0.8, 0.5)


def test_svd_transformed_eve_gain():
    assert svd_transformed_eve_gain(0.5, 1.0) == 0.5
    assert svd_transformed_eve_gain(0.5, V) == pytest.approx(0.4791667, abs=1e-7)
    assert svd_transformed_eve_gain(0.5, 2.0) == 0.0
    with pytest.raises(DomainError):
        svd_transformed_eve_gain(0.5, 2.5)


def test_svd_region_identity_and_improvement():
    ens = two_slot()
    base = private_region(ens, 2, [0.5, 0.5], [1.0, 1.0], vacuum_noise=0.5)
    same = svd_private_capacities(ens, 2, [1.0, 1.0], [0.5, 0.5], [1.0, 1.0], vacuum_noise=0.5)
    assert same == base
    up = svd_private_capacities(ens, 2, [V, V], [0.5, 0.5], [1.0, 1.0], vacuum_noise=0.5)
    assert up.sum_capacity > base.sum_capacity
    # recomputation oracle: per-term SNR scaled by v
    assert up.sum_capacity == pytest.approx(2 * math.log2(1 + 2 * V) - 1.0, abs=1e-14)
    # the noise form needs var * gain > 1 once sigma_X^2 < 1
    base = private_region(ens, 2, [0.5, 0.5], [4.0, 4.0], vacuum_noise=0.5)
    up = svd_private_capacities(ens, 2, [V, V], [0.5, 0.5], [4.0, 4.0], vacuum_noise=0.5)
    assert up.noise_form_sum > base.noise_form_sum > 0
    with pytest.raises(ParameterError):
        svd_private_capacities(ens, 2, [0.9, 1.0], [0.5, 0.5], [1.0, 1.0])


def test_three_slot_two_user_fixture():
    ens = three_slot()
    alloc = [1.0, 1.0, 1.0]
    c = capacity_region(ens, 2, alloc)
    expect = math.fsum(math.log2(1 + g / n) for g, n in ((0.9, 0.2), (0.7, 0.3), (0.6, 0.25)))
    assert c.sum_capacity == pytest.approx(expect, abs=1e-14)
    assert c.symmetric_capacity == c.sum_capacity / 2
    assert list(c.corner_points) == [c.sum_capacity] * 2
    alloc = [2.0, 2.0, 2.0]
    base = private_region(ens, 2, [0.4, 0.6], alloc, vacuum_noise=0.5)
    assert base.noise_form_sum > 0
    for k in range(3):
        v = [1.0, 1.0, 1.0]
        v[k] = 1.05
        up = svd_private_capacities(ens, 2, v, [0.4, 0.6], alloc, vacuum_noise=0.5)
        assert up.sum_capacity > base.sum_capacity
        assert up.noise_form_sum > base.noise_form_sum


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2),
       st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2),
       st.floats(0.0, 1.0))
def test_time_sharing_stays_in_region(a, b, lam):
    region = capacity_region(three_slot(), 2, [1.0, 1.0, 1.0])
    c = region.sum_capacity
    pa = RegionPoint(x * c / 2 for x in a)
    pb = RegionPoint(x * c / 2 for x in b)
    assert pa.within(region) and pb.within(region)
    assert pa.mix(pb, lam).within(region)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2), st.floats(1e-3, 0.09))
def test_gain_enlargement_is_monotone(k, bump):
    ens = three_slot()
    slots = list(ens.slots)
    s = slots[k]
    slots[k] = SubChannel.from_gain(s.fourier_gain + bump, s.noise_variance)
    bigger = ChannelEnsemble(tuple(slots), math.inf)
    alloc = [1.0, 1.0, 1.0]
    assert sum_capacity(bigger, alloc) >= sum_capacity(ens, alloc)


def test_waterfill_beats_uniform_and_keeps_budget():
    ens = three_slot()
    wf = waterfill_allocation(ens, 0.5)
    assert math.fsum(wf) == pytest.approx(1.5, rel=1e-12)
    assert all(x >= 0 for x in wf)
    assert sum_capacity(ens, wf, modulation_variance=0.5) >= sum_capacity(ens, allocate(ens, 0.5)) - 1e-12
    with pytest.raises(ParameterError):
        allocate(ens, 0.5, "greedy")


def test_noise_form_uses_complex_convention():
    ens = ChannelEnsemble.uniform(1, 0.8, 0.1)
    s, g, x = 2.0, 0.8, 0.5
    r = (s * g + x) / (1 + x * s * g)
    assert noise_form_private_sum(ens, [s], vacuum_noise=0.5) == pytest.approx(math.log2(r))
