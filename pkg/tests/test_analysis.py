import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randlase import oracles
from randlase.analysis import (BracketError, InsufficientStatistics, OrderSeries, Scenario,
                               ScanParam, SpectrumRow, Verdict, bisect_threshold, bump_amplitude,
                               classify_stability, default_window, letokhov_prediction,
                               mean_scattering_order, observation_band, spectral_scan, tail_ratio)
from randlase.medium import ChannelGeometry, CloudGeometry, Medium
from randlase.spectral import SpectralModel
from randlase.transport import RunConfig, Tally, run


def series(values, window):
    return OrderSeries(np.asarray(values, dtype=float), 1000, window)


def test_tail_ratio_exact_geometric():
    n = np.arange(60)
    q, err = tail_ratio(series(7 * 0.8 ** n, (20, 59)))
    assert q == pytest.approx(0.8, rel=1e-12)
    assert err == pytest.approx(0.0, abs=1e-12)


def test_tail_ratio_constant():
    q, err = tail_ratio(series(np.full(40, 3.0), (10, 39)))
    assert q == pytest.approx(1.0, abs=1e-15) and err == pytest.approx(0.0, abs=1e-15)


def test_window_validation():
    with pytest.raises(ValueError):
        series(np.ones(10), (3, 5))
    with pytest.raises(InsufficientStatistics):
        tail_ratio(series(np.zeros(20), (5, 15)))
    with pytest.raises(InsufficientStatistics):
        default_window(np.zeros(10, dtype=int))


def test_default_window_upper_half():
    counts = np.zeros(100, dtype=int)
    counts[:61] = 500
    assert default_window(counts) == (30, 60)


def test_synthetic_noise_coverage():
    rng = np.random.default_rng(2024)
    n = np.arange(80)
    hits = 0
    for _ in range(1000):
        q_true = rng.uniform(0.9, 1.05)
        y = 5.0 * q_true ** n * (1 + 0.03 * rng.standard_normal(n.size))
        q, err = tail_ratio(series(y, (30, 79)))
        hits += abs(q - q_true) <= 2 * err
    assert hits >= 950


@given(st.floats(1e-6, 1e6), st.floats(0.5, 1.5), st.integers(0, 2 ** 32 - 1))
def test_tail_ratio_scale_invariant(c, q0, seed):
    rng = np.random.default_rng(seed)
    y = q0 ** np.arange(50) * np.exp(0.05 * rng.standard_normal(50))
    a = tail_ratio(series(y, (20, 49)))
    b = tail_ratio(series(c * y, (20, 49)))
    assert b[0] == pytest.approx(a[0], rel=1e-9)
    assert b[1] == pytest.approx(a[1], rel=1e-6, abs=1e-12)


def _synthetic_tally(q, n_orders=200, launched=100_000):
    t = Tally(max_order=n_orders)
    n = np.arange(n_orders + 1)
    t.escaped[0] = 1e3 * q ** n
    t.escape_counts[:] = 1000
    t.photons_launched = launched
    return t


def test_synthetic_verdicts():
    assert classify_stability(_synthetic_tally(1.2)).verdict is Verdict.DIVERGING
    assert classify_stability(_synthetic_tally(0.9)).verdict is Verdict.CONVERGING
    t = _synthetic_tally(0.9)
    t.diverged = True
    assert classify_stability(t).verdict is Verdict.DIVERGING
    t = _synthetic_tally(0.9)
    t.truncated_weight = 2 * t.total_escaped
    assert classify_stability(t).verdict is Verdict.DIVERGING


def test_no_statistics_is_inconclusive():
    t = Tally(max_order=10)
    t.photons_launched = 5
    assert classify_stability(t).verdict is Verdict.INCONCLUSIVE


def test_passive_run_converges_at_loss_ratio():
    m = Medium(CloudGeometry(radius=5.0))
    t = run(m, SpectralModel(beta0=0.05), RunConfig(n_photons=50_000, seed=3))
    rep = classify_stability(t)
    assert rep.verdict is Verdict.CONVERGING
    # leakage through the surface adds to the conversion loss, so q < 1 - beta
    assert 0.8 < rep.q < 0.95


def test_verdict_monotone_in_pump():
    m = Medium(CloudGeometry(radius=15.0), overlap_gain=True)
    cfg = RunConfig(n_photons=20_000, seed=8, phase_function="isotropic")
    order = {Verdict.CONVERGING: 0, Verdict.INCONCLUSIVE: 1, Verdict.DIVERGING: 2}
    seen = [order[classify_stability(run(m, SpectralModel(rabi_2v=p, gain_kappa=1e-4), cfg)).verdict]
            for p in (0.0, 5.0, 20.0)]
    assert seen == sorted(seen)
    assert seen[0] == 0 and seen[-1] == 2


@pytest.mark.parametrize("lo, hi, tol", [(0.0, 1.0, 1e-3), (2.0, 10.0, 0.01), (-5.0, 5.0, 0.3)])
def test_bisection_probe_count(lo, hi, tol):
    calls = []

    def verdict(x):
        calls.append(x)
        return Verdict.DIVERGING if x > 0.3141 + lo else Verdict.CONVERGING

    crit, br, probes, resolved = bisect_threshold(verdict, lo, hi, rtol=0.0, atol=tol)
    assert resolved
    assert probes == math.ceil(math.log2((hi - lo) / tol))
    assert len(calls) == probes + 2
    assert br[0] <= crit <= br[1] and br[1] - br[0] <= tol
    assert br[0] <= 0.3141 + lo <= br[1]


def test_bisection_inconclusive_stops():
    def verdict(x):
        if x < 0.4:
            return Verdict.CONVERGING
        return Verdict.DIVERGING if x > 0.6 else Verdict.INCONCLUSIVE

    crit, br, probes, resolved = bisect_threshold(verdict, 0.0, 1.0, atol=1e-3)
    assert not resolved and crit == 0.5 and br == (0.0, 1.0)


def test_bisection_bad_bracket():
    with pytest.raises(BracketError):
        bisect_threshold(lambda x: Verdict.DIVERGING, 0.0, 1.0)
    with pytest.raises(BracketError):
        bisect_threshold(lambda x: Verdict.CONVERGING, 1.0, 0.0)


def test_letokhov_prediction_values():
    sc = Scenario(Medium(CloudGeometry(radius=20.0), overlap_gain=True),
                  SpectralModel(rabi_2v=30.0), RunConfig())
    bare = letokhov_prediction(sc, ScanParam.GAIN_G0)
    assert bare == pytest.approx(3 * 400 / math.pi ** 2, rel=1e-14)
    corr = letokhov_prediction(sc, ScanParam.GAIN_G0, extrapolation=True)
    assert corr == pytest.approx(3 * 20.71 ** 2 / math.pi ** 2, rel=1e-14)
    # the pump form converts the same gain length back through kappa
    sc2 = replace(sc, spectral=replace(sc.spectral, gain_kappa=1e-4))
    pump = letokhov_prediction(sc2, ScanParam.PUMP_RABI)
    assert 1e-4 * pump ** 2 == pytest.approx(1 / bare, rel=1e-12)
    assert letokhov_prediction(replace(sc, medium=Medium(CloudGeometry(radius=20.0))),
                               ScanParam.GAIN_G0) is None


def test_with_param_gain_sets_peak():
    sc = Scenario(Medium(overlap_gain=True), SpectralModel(rabi_2v=30.0, delta_c=0.7), RunConfig())
    assert sc.with_param("gain_g0", 0.0123).peak_gain() == pytest.approx(0.0123, rel=1e-14)
    assert sc.with_param("cloud_radius", 7.0).medium.cloud.radius == 7.0
    assert sc.with_param("pump_rabi", 12.0).spectral.rabi_2v == 12.0


def test_mean_order_ballistic_limit():
    t = run(Medium(CloudGeometry(radius=1e-3)), SpectralModel(), RunConfig(n_photons=2000))
    assert mean_scattering_order(t) < 0.01


def test_mean_order_matches_walker():
    cfg = RunConfig(n_photons=20_000, seed=4, phase_function="isotropic", max_order=2000)
    mc = mean_scattering_order(run(Medium(CloudGeometry(radius=5.0)), SpectralModel(), cfg))
    ref = oracles.random_walk_orders(5.0, 20_000, seed=77).mean()
    # 2e4 histories: the standard error of either mean is ~0.1
    assert mc == pytest.approx(ref, rel=0.03)


def test_mean_order_diffusive_scaling():
    w10 = oracles.random_walk_orders(5.0, 20_000, seed=1).mean()
    w20 = oracles.random_walk_orders(10.0, 20_000, seed=2).mean()
    assert w20 / w10 == pytest.approx(4.0, rel=0.15)
    cfg = RunConfig(n_photons=20_000, seed=9, phase_function="isotropic", max_order=3000)
    m10 = mean_scattering_order(run(Medium(CloudGeometry(radius=5.0)), SpectralModel(), cfg))
    m20 = mean_scattering_order(run(Medium(CloudGeometry(radius=10.0)), SpectralModel(), cfg))
    assert m20 / m10 == pytest.approx(w20 / w10, rel=0.05)


def test_observation_band():
    sel, frac = observation_band(36, math.radians(45), math.radians(10))
    assert list(sel) == [7, 8, 9, 10]
    assert frac == pytest.approx((math.cos(math.radians(35)) - math.cos(math.radians(55))) / 2)


def _scan_base(beta0=0.0, kappa=0.0):
    return Scenario(Medium(CloudGeometry(radius=2.0), overlap_gain=True),
                    SpectralModel(rabi_2v=30.0, gain_kappa=kappa, gain_width=2.0, beta0=beta0,
                                  beta_mode="lorentzian", beta_width=2.0),
                    RunConfig(n_photons=1500, seed=5))


def test_spectral_scan_bookkeeping():
    grid = np.linspace(-4, 4, 5)
    rows = spectral_scan(_scan_base(beta0=0.05, kappa=1e-5), grid, [1.0, 4.0])
    assert len(rows) == 10
    for r in rows:
        assert r.sum == r.elastic + r.anti_stokes
    assert any(r.anti_stokes > 0 for r in rows)


def test_passive_scan_is_flat_without_conversion():
    rows = spectral_scan(_scan_base(), np.linspace(-4, 4, 5), [1.0, 4.0])
    for b0 in (1.0, 4.0):
        vals = {r.elastic for r in rows if r.b0 == b0}
        assert len(vals) == 1
    assert all(r.anti_stokes == 0.0 for r in rows)


def test_bump_amplitude():
    rows = [SpectrumRow(dc, 1.0, 0.0, 0.0, s, False)
            for dc, s in ((-2, 1.0), (-1, 2.0), (0.1, 5.0), (2, 3.0))]
    assert bump_amplitude(rows, 1.0) == 3.0
    with pytest.raises(ValueError):
        bump_amplitude(rows, 2.0)
