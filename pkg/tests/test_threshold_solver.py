import math
import time
from dataclasses import replace

import numpy as np
import pytest

import oracles
from mcvqkd.channel_model import ChannelEnsemble
from mcvqkd.errors import ConsistencyError, ParameterError
from mcvqkd.protocol import ProtocolConfig
from mcvqkd.rates import keyrate
from mcvqkd.threshold_solver import (
    bisect_decreasing,
    dr_bound,
    dr_single_carrier_condition,
    improvement_ratio_kappa,
    max_eve_variance,
    rr_product_bound,
    rr_product_condition,
    svd_threshold_boost,
    tolerable_excess_noise_closed_form,
    tolerable_excess_noise_multicarrier,
)

ONE_WAY = [("hom", "rr"), ("hom", "dr"), ("het", "rr"), ("het", "dr")]


def test_closed_forms():
    rr = tolerable_excess_noise_closed_form("rr_one_way_single")
    assert rr == pytest.approx(float(oracles.rr_single_threshold()), abs=1e-15)
    dr = tolerable_excess_noise_closed_form("dr_one_way_single")
    assert dr == pytest.approx(float(oracles.dr_single_threshold()), abs=1e-10)
    assert abs(dr_single_carrier_condition(dr) - math.e ** 2) <= 1e-9
    assert tolerable_excess_noise_closed_form("dr_two_way_single") == 0.75
    assert tolerable_excess_noise_closed_form("rr_two_way_single") == 0.8
    with pytest.raises(ParameterError):
        tolerable_excess_noise_closed_form("bogus")


def test_dr_condition_below_e_squared_at_point_eight():
    # mpmath gives 7.34975501136; still short of e^2 so the root lies above 0.8
    assert dr_single_carrier_condition(0.8) == pytest.approx(float(oracles.dr_single_lhs(0.8)), rel=1e-13)
    assert dr_single_carrier_condition(0.8) < math.e ** 2


def test_dr_bound():
    assert dr_bound(0.5) == 0.0
    assert dr_bound(0.9) == pytest.approx(0.8888889, abs=1e-7)


@pytest.mark.parametrize("meas,recon", ONE_WAY)
def test_w_max_against_high_precision_root(meas, recon):
    res = max_eve_variance(ProtocolConfig("one_way", meas, recon), [0.9])[0]
    assert res.status == "ok"
    assert res.value == pytest.approx(float(oracles.w_max(f"{recon}_{meas}", 0.9)), abs=1e-9)


def test_rr_hom_w_max_bracketed_by_scan():
    res = max_eve_variance(ProtocolConfig(), [0.9])[0]
    assert 4.0 < res.value < 4.2
    s4 = keyrate(ProtocolConfig(t_bar=0.9, w_bar=4.0)).rate_bits
    s42 = keyrate(ProtocolConfig(t_bar=0.9, w_bar=4.2)).rate_bits
    assert s4 == pytest.approx(0.0443, abs=1e-4) and s42 == pytest.approx(-0.0033, abs=1e-4)


def test_dr_het_w_max_by_entropy_inversion():
    # rate is log2(T/(1-T)) - g(W): invert g on a dense grid
    grid = np.linspace(1.0, 20.0, 190_001)
    g = np.array([float(oracles.g(x)) for x in grid[::100]])
    coarse = grid[::100][np.argmax(g > math.log2(9))]
    res = max_eve_variance(ProtocolConfig(measurement="het", reconciliation="dr"), [0.9])[0]
    assert coarse - 0.01 <= res.value <= coarse
    assert res.value == pytest.approx(6.647028, abs=1e-6)


@pytest.mark.parametrize("direction", ["one_way", "two_way"])
@pytest.mark.parametrize("meas,recon", ONE_WAY)
def test_w_max_monotone_in_t(direction, meas, recon):
    grid = np.linspace(0.61, 0.98, 15)
    rows = max_eve_variance(ProtocolConfig(direction, meas, recon), grid)
    values = [r.value for r in rows]
    assert all(b >= a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("direction", ["one_way", "two_way"])
@pytest.mark.parametrize("meas,recon", ONE_WAY)
def test_threshold_certificate(direction, meas, recon):
    for t in (0.7, 0.9):
        cfg = ProtocolConfig(direction, meas, recon)
        res = max_eve_variance(cfg, [t])[0]
        assert res.status == "ok"
        w = res.value
        assert abs(keyrate(replace(cfg, t_bar=t, w_bar=w)).rate_bits) <= 1e-9
        inside = 1.0 + (w - 1.0) * (1 - 1e-3)
        assert keyrate(replace(cfg, t_bar=t, w_bar=inside)).rate_bits > 0
        assert keyrate(replace(cfg, t_bar=t, w_bar=res.bracket[1])).rate_bits <= 0


def test_no_headroom_reported():
    res = tolerable_excess_noise_multicarrier(ProtocolConfig(reconciliation="dr", t_bar=0.4))
    assert res.status == "no_positive_rate" and res.value == 0.0
    w = max_eve_variance(ProtocolConfig(reconciliation="dr"), [0.4])[0]
    assert w.status == "no_headroom" and w.value == 1.0


def test_dr_hom_margin_and_bound():
    res = tolerable_excess_noise_multicarrier(ProtocolConfig(reconciliation="dr", t_bar=0.9))
    assert res.closed_form_bound == pytest.approx(dr_bound(0.9))
    assert res.value <= res.closed_form_bound
    assert res.margin == pytest.approx(math.e ** 2 - dr_single_carrier_condition(res.value))


def test_rr_product_bracket_start():
    assert rr_product_condition(0.9, 0.0, 100.0) > 1.0
    assert rr_product_bound(0.9, 100.0) == 0.0
    assert rr_product_condition(0.5, 0.2, 100.0, grouping="nested") == pytest.approx(0.5 * 2.2 * 1.21)
    res = tolerable_excess_noise_multicarrier(ProtocolConfig(t_bar=0.9))
    assert res.status == "ok" and res.value == pytest.approx(0.353973, abs=1e-6)


def test_rr_closed_form_recovered_at_high_transmittance():
    # asymptotic spectra need T*sigma0^2 margins, so the modulation grows here
    cfg = ProtocolConfig(single_carrier_variance=1e7, t_bar=1 - 1e-5)
    res = tolerable_excess_noise_multicarrier(cfg)
    assert res.value == pytest.approx(tolerable_excess_noise_closed_form("rr_one_way_single"), abs=1e-3)
    cfg = ProtocolConfig(reconciliation="dr", single_carrier_variance=1e7, t_bar=1 - 1e-5)
    res = tolerable_excess_noise_multicarrier(cfg)
    assert res.value == pytest.approx(tolerable_excess_noise_closed_form("dr_one_way_single"), abs=1e-3)


def test_two_way_dr_ratio_at_least_one():
    for single in (0.6, 0.75, 0.85):
        for t in (0.86, 0.9, 0.95):
            cfg = ProtocolConfig("two_way", "hom", "dr", t_bar=t)
            res = tolerable_excess_noise_multicarrier(cfg, single_carrier_gain=single)
            assert res.ratio >= 1.0
            assert res.constant == pytest.approx(1 / single - 1 / t)


def test_kappa():
    assert improvement_ratio_kappa((2.0, 0.5), (2.0, 0.5)) == 1.0
    assert improvement_ratio_kappa((2.0, 0.5), (2.0, 0.25)) == pytest.approx(3.0)
    assert improvement_ratio_kappa((2.0, 0.5), (1.0, 0.25)) == math.inf


def test_svd_threshold_boost():
    ens = ChannelEnsemble.uniform(2, 0.5, 0.1, eve_variance=2.0)
    a, b = svd_threshold_boost(ens, [1.0, 1.0])
    assert a == b
    a, b = svd_threshold_boost(ens, [1.875 / 1.8] * 2)
    assert b > a
    assert b == pytest.approx((1 - 0.47916667) / 0.47916667, rel=1e-6)


def test_bisection_guards():
    with pytest.raises(ParameterError):
        bisect_decreasing(lambda x: x, 0.0, 1.0)
    res = bisect_decreasing(lambda x: 1.0 - x, 0.0, 4.0)
    assert res.root == pytest.approx(1.0, abs=1e-12) and res.residual <= 1e-12


def test_closed_form_timings():
    t0 = time.perf_counter()
    tolerable_excess_noise_closed_form("rr_one_way_single")
    assert time.perf_counter() - t0 < 1e-3
    t0 = time.perf_counter()
    tolerable_excess_noise_closed_form("dr_one_way_single")
    assert time.perf_counter() - t0 < 1e-2


def test_svd_ordering_violation_is_consistency_error(monkeypatch):
    import mcvqkd.threshold_solver as ts

    monkeypatch.setattr(ts, "svd_transformed_eve_gain", lambda g, v: g)
    ens = ChannelEnsemble.uniform(2, 0.5, 0.1, eve_variance=2.0)
    with pytest.raises(ConsistencyError):
        ts.svd_threshold_boost(ens, [1.04, 1.04])
