"""Independent reference computations used to check the transport engine.

Nothing here shares code with the engine: the random walker draws straight
exponential flights with numpy's generator, and the integrals use adaptive
quadrature.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def random_walk_orders(radius: float, n_histories: int, seed: int = 0,
                       mean_free_path: float = 1.0, max_steps: int = 100_000) -> np.ndarray:
    """Number of scatterings before escape from the centre of a uniform sphere.

    Isotropic scattering, no absorption, unit weights; vectorised over histories.
    """
    rng = np.random.default_rng(seed)
    pos = np.zeros((n_histories, 3))
    orders = np.zeros(n_histories, dtype=np.int64)
    alive = np.ones(n_histories, dtype=bool)
    r2 = radius * radius
    for _ in range(max_steps):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        mu = rng.uniform(-1.0, 1.0, idx.size)
        phi = rng.uniform(0.0, 2.0 * math.pi, idx.size)
        st = np.sqrt(1.0 - mu * mu)
        step = rng.exponential(mean_free_path, idx.size)
        pos[idx, 0] += step * st * np.cos(phi)
        pos[idx, 1] += step * st * np.sin(phi)
        pos[idx, 2] += step * mu
        out = np.einsum("ij,ij->i", pos[idx], pos[idx]) > r2
        alive[idx[out]] = False
        orders[idx[~out]] += 1
    return orders


def gaussian_line_integral(origin, direction, sigma_r: float, cutoff: float,
                           n0: float = 1.0) -> float:
    """Quadrature of a truncated Gaussian density along a ray to the cutoff sphere."""
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    b = o @ d
    c = o @ o - cutoff * cutoff
    disc = b * b - c
    if disc <= 0:
        return 0.0
    s0 = max(0.0, -b - math.sqrt(disc))
    s1 = -b + math.sqrt(disc)
    if s1 <= s0:
        return 0.0

    def f(s):
        x = o + s * d
        return n0 * math.exp(-(x @ x) / (2.0 * sigma_r * sigma_r))

    val, _ = integrate.quad(f, s0, s1, epsabs=1e-10, epsrel=1e-12, limit=200)
    return val


def dipole_moment(k: int) -> float:
    """<mu**k> under p(mu) = 3/8 (1 + mu**2), by quadrature."""
    val, _ = integrate.quad(lambda m: m ** k * 0.375 * (1.0 + m * m), -1.0, 1.0)
    return val


def ballistic_fraction(b0: float) -> float:
    return math.exp(-b0)
