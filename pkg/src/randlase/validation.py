"""Built-in oracle suite run by ``randlase validate``."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import oracles
from .analysis import mean_scattering_order, order_ratios
from .medium import CloudGeometry, Medium
from .rng import PhotonStream, derive_seed
from .spectral import RegionKind, SpectralModel, kinetic_lengths
from .transport import (Photon, PhaseFunction, RunConfig, russian_roulette, run,
                        sample_free_path, sample_phase_function)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    expected: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: value={self.value:.6g} expected={self.expected:.6g} "
                f"tol={self.tolerance:.3g} {self.detail}").rstrip()


def check_kinetic_identity(n: int = 10_000, seed: int = 0) -> CheckResult:
    rnd = random.Random(seed)
    worst = 0.0
    regions = list(RegionKind)
    for _ in range(n):
        model = SpectralModel(rabi_2v=rnd.uniform(0, 50), delta_c=rnd.uniform(-5, 5),
                              gain_kappa=rnd.uniform(0, 1e-3), gain_width=rnd.uniform(0.1, 5),
                              beta0=rnd.uniform(0, 0.99), beta_mode=rnd.choice(["constant", "lorentzian"]),
                              beta_width=rnd.uniform(0.1, 5))
        k = kinetic_lengths(rnd.uniform(-5, 5), model, rnd.uniform(0, 3), rnd.choice(regions),
                            overlap=rnd.random() < 0.3)
        worst = max(worst, abs(k.l_ls_inv - (k.l_ex_inv - k.l_sc_inv)))
    return CheckResult("kinetic_identity", worst <= 1e-12, worst, 0.0, 1e-12)


def check_conservation(n_photons: int = 100_000, seed: int = 1, workers: int = 1) -> CheckResult:
    medium = Medium(CloudGeometry(radius=5.0))
    tally = run(medium, SpectralModel(), RunConfig(n_photons=n_photons, seed=seed), workers=workers)
    ratio = tally.total_escaped / n_photons
    return CheckResult("conservation_b0_10", abs(ratio - 1.0) <= 0.002, ratio, 1.0, 0.002,
                       f"truncated={tally.truncated_weight:.3g}")


def check_beer_lambert(n_photons: int = 1_000_000, seed: int = 2, b0: float = 6.0,
                       workers: int = 1) -> CheckResult:
    medium = Medium(CloudGeometry(radius=b0 / 2.0))
    cfg = RunConfig(n_photons=n_photons, seed=seed, source="external_pencil")
    tally = run(medium, SpectralModel(), cfg, workers=workers)
    p = oracles.ballistic_fraction(b0)
    frac = tally.escape_counts[0] / n_photons
    sigma = math.sqrt(p * (1.0 - p) / n_photons)
    return CheckResult("beer_lambert", abs(frac - p) <= 3.0 * sigma, frac, p, 3.0 * sigma)


def free_path_samples(n: int, seed: int = 3, trap_fraction: float = 0.5) -> np.ndarray:
    """Accepted Woodcock flight lengths from the centre of a very large cloud."""
    medium = Medium(CloudGeometry(radius=1e4), trap_fraction=trap_fraction)
    spectral = SpectralModel()
    out = np.empty(n)
    for i in range(n):
        rng = PhotonStream(seed, i)
        out[i] = sample_free_path(Photon((0.0, 0.0, 0.0), (0.0, 0.0, 1.0)), medium, spectral, rng).distance
    return out


def check_free_path_ks(n: int = 100_000, seed: int = 3) -> CheckResult:
    mu_t = 0.5
    samples = free_path_samples(n, seed, trap_fraction=mu_t)
    p = stats.kstest(samples, "expon", args=(0.0, 1.0 / mu_t)).pvalue
    return CheckResult("free_path_ks", p > 0.01, p, 0.01, 0.0, "p-value must exceed 0.01")


def phase_cosines(n: int, kind: str = "dipole", seed: int = 4) -> np.ndarray:
    rnd = np.random.default_rng(seed)
    out = np.empty(n)
    for i in range(n):
        v = rnd.normal(size=3)
        d = tuple(v / np.linalg.norm(v))
        nd = sample_phase_function(d, kind, PhotonStream(seed, i))
        out[i] = nd[0] * d[0] + nd[1] * d[1] + nd[2] * d[2]
    return out


def check_dipole_moment(n: int = 200_000, seed: int = 4) -> CheckResult:
    mu = phase_cosines(n, "dipole", seed)
    m2 = float(np.mean(mu * mu))
    sigma = float(np.std(mu * mu) / math.sqrt(n))
    exp = oracles.dipole_moment(2)
    return CheckResult("dipole_second_moment", abs(m2 - exp) <= 3.0 * sigma, m2, exp, 3.0 * sigma)


def check_roulette(n: int = 1_000_000, seed: int = 5, weight: float = 1e-5) -> CheckResult:
    cfg = RunConfig(w_min=1e-4, roulette_survive=0.1)
    w = np.empty(n)
    for i in range(n):
        ph = Photon((0.0, 0.0, 0.0), (0.0, 0.0, 1.0), weight=weight)
        russian_roulette(ph, cfg, PhotonStream(seed, i))
        w[i] = ph.weight
    mean = float(w.mean())
    sigma = float(w.std() / math.sqrt(n))
    return CheckResult("roulette_unbiased", abs(mean - weight) <= 3.0 * sigma, mean, weight, 3.0 * sigma)


def check_mean_order(n: int = 100_000, seed: int = 6, b0: float = 10.0,
                     workers: int = 1) -> CheckResult:
    R = b0 / 2.0
    cfg = RunConfig(n_photons=n, seed=seed, phase_function="isotropic", max_order=2000)
    mc = mean_scattering_order(run(Medium(CloudGeometry(radius=R)), SpectralModel(), cfg,
                                   workers=workers))
    ref = float(oracles.random_walk_orders(R, n, seed=derive_seed(seed, 0) % 2 ** 32).mean())
    rel = abs(mc - ref) / ref
    return CheckResult("mean_order_vs_walker", rel <= 0.02, mc, ref, 0.02, f"rel={rel:.4f}")


def check_order_ratio(n_photons: int = 20_000_000, seed: int = 7, workers: int = 1,
                      tol: float = 0.014) -> CheckResult:
    medium = Medium(CloudGeometry(radius=50.0))
    spectral = SpectralModel(beta0=0.3)
    tally = run(medium, spectral, RunConfig(n_photons=n_photons, seed=seed), workers=workers)
    ratios = order_ratios(tally.collision_weight, range(5, 20))
    worst = float(np.max(np.abs(ratios - 0.7)))
    return CheckResult("collision_order_ratio", worst <= tol, float(ratios.mean()), 0.7, tol,
                       f"worst deviation={worst:.4f}")


def run_suite(workers: int = 1, quick: bool = False) -> list[CheckResult]:
    scale = 0.1 if quick else 1.0
    n = lambda k: max(1000, int(k * scale))  # noqa: E731
    return [
        check_kinetic_identity(),
        check_conservation(n(100_000), workers=workers),
        check_beer_lambert(n(1_000_000), workers=workers),
        check_free_path_ks(n(100_000)),
        check_dipole_moment(n(200_000)),
        check_roulette(n(1_000_000)),
        check_mean_order(n(100_000), workers=workers),
        check_order_ratio(n(20_000_000), workers=workers, tol=0.014 if not quick else 0.05),
    ]
