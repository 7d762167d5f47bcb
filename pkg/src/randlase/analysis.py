"""Stability verdicts, threshold bisection and spectral scans over MC tallies."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .medium import CloudGeometry, Medium, cloud_for_b0
from .rng import derive_seed
from .spectral import SpectralModel, letokhov_gain_length, letokhov_radius, sigma_sc
from .transport import RunConfig, Tally, run

EXTRAPOLATION = 0.71


class InsufficientStatistics(ValueError):
    """The tail window holds too few (or zero) escapes to fit a ratio."""


class BracketError(ValueError):
    pass


class Verdict(str, enum.Enum):
    CONVERGING = "converging"
    DIVERGING = "diverging"
    INCONCLUSIVE = "inconclusive"


class ScanParam(str, enum.Enum):
    PUMP_RABI = "pump_rabi"
    GAIN_G0 = "gain_g0"
    CLOUD_RADIUS = "cloud_radius"


@dataclass(frozen=True)
class OrderSeries:
    intensities: np.ndarray
    n_photons: int
    window: tuple[int, int]

    def __post_init__(self):
        lo, hi = self.window
        if not (0 <= lo and hi < len(self.intensities) and hi - lo >= 4):
            raise InsufficientStatistics(f"window {self.window} too short or out of range")
        if np.any(np.asarray(self.intensities) < 0):
            raise ValueError("intensities must be >= 0")


@dataclass(frozen=True)
class StabilityReport:
    q: float
    q_err: float
    verdict: Verdict
    truncated_fraction: float
    window: tuple[int, int] | None = None
    q_cone: float | None = None
    q_cone_err: float | None = None
    diverged: bool = False


@dataclass(frozen=True)
class ThresholdReport:
    scan_param: ScanParam
    critical_value: float
    bracket: tuple[float, float]
    analytic_letokhov: float | None
    relative_gap: float | None
    probes: int
    resolved: bool
    critical_gain_length: float | None = None

    def to_dict(self) -> dict:
        return {
            "scan_param": self.scan_param.value,
            "critical_value": self.critical_value,
            "bracket": list(self.bracket),
            "analytic_letokhov": self.analytic_letokhov,
            "relative_gap": self.relative_gap,
            "probes": self.probes,
            "resolved": self.resolved,
            "critical_gain_length": self.critical_gain_length,
        }


@dataclass(frozen=True)
class Scenario:
    """One fully specified MC run: the unit a scan perturbs."""

    medium: Medium
    spectral: SpectralModel
    run: RunConfig

    def simulate(self, workers: int = 1, backend: str | None = None) -> Tally:
        return run(self.medium, self.spectral, self.run, workers=workers, backend=backend)

    def with_param(self, param: ScanParam | str, value: float) -> "Scenario":
        param = ScanParam(param)
        if param is ScanParam.PUMP_RABI:
            return replace(self, spectral=replace(self.spectral, rabi_2v=value))
        if param is ScanParam.GAIN_G0:
            sp = self.spectral
            if sp.rabi_2v <= 0:
                raise ValueError("gain_g0 scans need a nonzero rabi_2v")
            p = sp.rabi_2v / sp.gamma
            x = 2.0 * sp.delta_c / sp.gain_width
            kappa = value * (1.0 + x * x) / (self.medium.cloud.n0 * sp.sigma0 * p * p)
            return replace(self, spectral=replace(sp, gain_kappa=kappa))
        cloud = self.medium.cloud
        if cloud.gaussian:
            factor = cloud.cutoff / cloud.sigma_r
            cloud = replace(cloud, sigma_r=value, cutoff=factor * value)
        else:
            cloud = replace(cloud, radius=value)
        return replace(self, medium=replace(self.medium, cloud=cloud))

    def peak_gain(self) -> float:
        from .spectral import gain_per_density
        return self.medium.cloud.n0 * gain_per_density(self.spectral)


# -- tail analysis --------------------------------------------------------------

def default_window(counts: np.ndarray, min_count: int = 100) -> tuple[int, int]:
    """Upper half of the orders holding at least ``min_count`` escapes."""
    ok = np.nonzero(np.asarray(counts) >= min_count)[0]
    if ok.size == 0:
        raise InsufficientStatistics(f"no order holds {min_count} escapes")
    lo, hi = int(ok[0]), int(ok[-1])
    return (lo + hi + 1) // 2, hi


def tail_ratio(series: OrderSeries) -> tuple[float, float]:
    """Geometric ratio I_{n+1}/I_n from a least-squares fit of log I_n over the window."""
    lo, hi = series.window
    y = np.asarray(series.intensities[lo:hi + 1], dtype=float)
    if np.any(y <= 0):
        raise InsufficientStatistics("zero intensity inside the tail window")
    n = np.arange(lo, hi + 1, dtype=float)
    logy = np.log(y)
    nc = n - n.mean()
    sxx = float(nc @ nc)
    slope = float(nc @ (logy - logy.mean())) / sxx
    resid = logy - logy.mean() - slope * nc
    dof = len(n) - 2
    se = math.sqrt(float(resid @ resid) / dof / sxx)
    q = math.exp(slope)
    return q, q * se


def _verdict(q: float, q_err: float) -> Verdict:
    if q - 2.0 * q_err > 1.0:
        return Verdict.DIVERGING
    if q + 2.0 * q_err < 1.0:
        return Verdict.CONVERGING
    return Verdict.INCONCLUSIVE


def classify_stability(tally: Tally, cfg: RunConfig | None = None,
                       min_count: int = 100) -> StabilityReport:
    """Converging / diverging verdict from the tail of the elastic order series."""
    trunc = tally.truncated_fraction
    forced = tally.diverged or trunc > 0.5
    q = q_err = math.nan
    window = None
    q_cone = q_cone_err = None
    verdict = Verdict.INCONCLUSIVE
    try:
        window = default_window(tally.escape_counts, min_count)
        q, q_err = tail_ratio(OrderSeries(tally.escaped_elastic, tally.photons_launched, window))
        verdict = _verdict(q, q_err)
        try:
            cone = tally.detector_cone.sum(axis=0)
            q_cone, q_cone_err = tail_ratio(OrderSeries(cone, tally.photons_launched, window))
        except InsufficientStatistics:
            pass
    except InsufficientStatistics:
        pass
    if forced:
        verdict = Verdict.DIVERGING
    return StabilityReport(q, q_err, verdict, trunc, window, q_cone, q_cone_err, tally.diverged)


def mean_scattering_order(tally: Tally) -> float:
    w = tally.escaped_elastic
    total = w.sum()
    if total <= 0:
        raise ValueError("tally holds no escaped elastic weight")
    return float(np.arange(len(w)) @ w / total)


def order_ratios(weights: np.ndarray, orders: Sequence[int]) -> np.ndarray:
    """Successive ratios w[n+1]/w[n] for each n in ``orders``."""
    w = np.asarray(weights, dtype=float)
    idx = np.asarray(list(orders))
    return w[idx + 1] / w[idx]


# -- threshold search -----------------------------------------------------------

def bisect_threshold(verdict_of: Callable[[float], Verdict], lo: float, hi: float,
                     rtol: float = 0.05, atol: float = 0.0, max_probes: int = 64):
    """Bisect a monotone converging -> diverging transition.

    Returns ``(critical, (lo, hi), probes, resolved)``; an inconclusive probe
    ends the search and is reported as the critical value with the current
    (wider than requested) bracket.
    """
    if not lo < hi:
        raise BracketError("bracket must satisfy lo < hi")
    if verdict_of(lo) is not Verdict.CONVERGING or verdict_of(hi) is not Verdict.DIVERGING:
        raise BracketError(f"bracket ({lo}, {hi}) does not straddle the threshold; widen it")
    probes = 0
    while probes < max_probes:
        mid = 0.5 * (lo + hi)
        if hi - lo <= max(atol, rtol * abs(mid)):
            return mid, (lo, hi), probes, True
        probes += 1
        v = verdict_of(mid)
        if v is Verdict.CONVERGING:
            lo = mid
        elif v is Verdict.DIVERGING:
            hi = mid
        else:
            return mid, (lo, hi), probes, False
    return 0.5 * (lo + hi), (lo, hi), probes, False


def transport_length(scenario: Scenario) -> float:
    m, sp = scenario.medium, scenario.spectral
    return 1.0 / (m.cloud.n0 * sigma_sc(sp.delta_emit, sp) * m.trap_fraction)


def letokhov_prediction(scenario: Scenario, param: ScanParam,
                        extrapolation: bool = False) -> float | None:
    """Diffusion-theory critical value of ``param`` for a uniform overlap-gain sphere."""
    m = scenario.medium
    if not m.overlap_gain or m.cloud.gaussian:
        return None
    l_tr = transport_length(scenario)
    ext = EXTRAPOLATION * l_tr if extrapolation else 0.0
    if param is ScanParam.CLOUD_RADIUS:
        l_g = 1.0 / scenario.peak_gain() if scenario.peak_gain() > 0 else math.inf
        return letokhov_radius(l_tr, l_g) - ext
    l_g = letokhov_gain_length(m.cloud.radius + ext, l_tr)
    if param is ScanParam.GAIN_G0:
        return l_g
    sp = scenario.spectral
    x = 2.0 * sp.delta_c / sp.gain_width
    per_p2 = m.cloud.n0 * sp.sigma0 * sp.gain_kappa / (1.0 + x * x)
    if per_p2 <= 0:
        return None
    return sp.gamma * math.sqrt(1.0 / l_g / per_p2)


def threshold_scan(base: Scenario, scan_param: ScanParam | str, bracket: tuple[float, float],
                   tol: float = 0.05, extrapolation: bool = False, workers: int = 1,
                   retries: int = 2, min_count: int = 100) -> ThresholdReport:
    """Locate the instability point in ``scan_param`` by bisection over MC runs.

    All probes share the base seed.  Inconclusive probes are re-run with 4x
    photons up to ``retries`` times.
    """
    param = ScanParam(scan_param)

    def verdict_of(value: float) -> Verdict:
        sc = base.with_param(param, value)
        n = sc.run.n_photons
        for _ in range(retries + 1):
            v = classify_stability(replace(sc, run=replace(sc.run, n_photons=n)).simulate(workers),
                                   min_count=min_count).verdict
            if v is not Verdict.INCONCLUSIVE:
                return v
            n *= 4
        return v

    critical, br, probes, resolved = bisect_threshold(verdict_of, *bracket, rtol=tol)
    analytic = letokhov_prediction(base, param, extrapolation)
    crit_lg = None
    if param is ScanParam.GAIN_G0:
        # compare as gain lengths
        crit_lg = 1.0 / critical
        value = crit_lg
    else:
        crit_lg = _gain_length_at(base.with_param(param, critical))
        value = critical
    gap = abs(value - analytic) / analytic if analytic else None
    return ThresholdReport(param, critical, br, analytic, gap, probes, resolved, crit_lg)


def _gain_length_at(scenario: Scenario) -> float | None:
    g = scenario.peak_gain()
    return 1.0 / g if g > 0 else None


# -- spectral scan ----------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumRow:
    delta_c: float
    b0: float
    elastic: float
    anti_stokes: float
    sum: float
    diverged: bool


def observation_band(n_theta: int, angle: float, half_width: float):
    """Angular bins whose centres lie within ``half_width`` of ``angle`` and their solid-angle fraction."""
    edges = np.linspace(0.0, math.pi, n_theta + 1)
    centres = 0.5 * (edges[:-1] + edges[1:])
    sel = np.nonzero(np.abs(centres - angle) <= half_width + 1e-12)[0]
    if sel.size == 0:
        sel = np.array([min(int(angle / math.pi * n_theta), n_theta - 1)])
    frac = float(np.sum(np.cos(edges[sel]) - np.cos(edges[sel + 1])) / 2.0)
    return sel, frac


def observed_intensity(tally: Tally, angle: float, half_width: float) -> tuple[float, float]:
    """Elastic and anti-Stokes weight per photon per unit solid-angle fraction in the band."""
    sel, frac = observation_band(tally.n_theta_bins, angle, half_width)
    n = max(tally.photons_launched, 1)
    band = tally.angular_hist[:, sel, :].sum(axis=(1, 2))
    return float(band[0] / (n * frac)), float(band[1] / (n * frac))


def spectral_scan(base: Scenario, delta_c_grid: Sequence[float], b0_values: Sequence[float],
                  observation_angle: float = math.radians(45.0),
                  half_width: float = math.radians(10.0), workers: int = 1) -> list[SpectrumRow]:
    """Observed elastic / anti-Stokes intensity vs control detuning, one row per (delta_c, b0).

    Each b0 row draws from its own derived seed; the points of a row share it,
    so the detuning dependence is free of sampling noise between points.
    """
    if len(delta_c_grid) == 0:
        raise ValueError("delta_c grid must be nonempty")
    rows = []
    cloud0 = base.medium.cloud
    for k, b0 in enumerate(b0_values):
        cloud = cloud_for_b0(b0, cloud0.shape, cloud0.n0, base.spectral.sigma0,
                             _cutoff_factor(cloud0))
        medium = replace(base.medium, cloud=cloud)
        cfg = replace(base.run, seed=derive_seed(base.run.seed, k))
        for dc in delta_c_grid:
            sp = replace(base.spectral, delta_c=float(dc))
            tally = run(medium, sp, cfg, workers=workers)
            el, aS = observed_intensity(tally, observation_angle, half_width)
            rows.append(SpectrumRow(float(dc), float(b0), el, aS, el + aS, tally.diverged))
    return rows


def _cutoff_factor(cloud: CloudGeometry) -> float:
    return cloud.cutoff / cloud.sigma_r if cloud.gaussian else 4.0


def bump_amplitude(rows: Sequence[SpectrumRow], b0: float) -> float:
    """Sum-channel value nearest delta_c = 0 minus the mean of the two grid ends."""
    sel = sorted((r for r in rows if r.b0 == b0), key=lambda r: r.delta_c)
    if not sel:
        raise ValueError(f"no rows for b0={b0}")
    centre = min(sel, key=lambda r: abs(r.delta_c))
    return centre.sum - 0.5 * (sel[0].sum + sel[-1].sum)
