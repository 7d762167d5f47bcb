"""Monte-Carlo photon transport with delta tracking, channel gain and order tallies.

Each photon history is a loop of free flight (Woodcock tracking against the
resonant majorant), exponential gain along the channel part of the flight,
and a collision that either scatters elastically (scattering order + 1) or
converts the photon to the anti-Stokes channel, which leaves the cloud
without further interaction.  Escaped weight is tallied per scattering order.

The per-history functions below are the pure-Python implementation.  The
compiled kernel in ``_kernel.pyx`` replays exactly the same arithmetic and
random-draw sequence, so both backends produce bit-identical tallies.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .medium import Medium
from .rng import PhotonStream
from .spectral import SpectralModel, beta_inel, gain_per_density, sigma_sc

try:
    from . import _kernel
except ImportError:  # pragma: no cover - exercised only without a compiler
    _kernel = None

WEIGHT_CAP = 1e300
EXP_LIMIT = 709.0
BLOCK_SIZE = 4096


class PhaseFunction(str, enum.Enum):
    ISOTROPIC = "isotropic"
    DIPOLE = "dipole"


class Source(str, enum.Enum):
    CENTER_POINT_DIPOLE = "center_point_dipole"
    CHANNEL_RAMAN = "channel_raman"
    EXTERNAL_PENCIL = "external_pencil"


class Channel(enum.IntEnum):
    RAMAN_ELASTIC = 0
    ANTI_STOKES = 1


_PHASE_CODES = {PhaseFunction.ISOTROPIC: 0, PhaseFunction.DIPOLE: 1}
_SOURCE_CODES = {Source.CENTER_POINT_DIPOLE: 0, Source.CHANNEL_RAMAN: 1,
                 Source.EXTERNAL_PENCIL: 2}


@dataclass(frozen=True)
class RunConfig:
    n_photons: int = 10_000
    max_order: int = 400
    w_min: float = 1e-4
    roulette_survive: float = 0.1
    detector_cone_half_angle: float = 0.1
    phase_function: PhaseFunction = PhaseFunction.DIPOLE
    seed: int = 1
    source: Source = Source.CENTER_POINT_DIPOLE
    n_theta_bins: int = 36
    n_order_buckets: int = 10

    def __post_init__(self):
        object.__setattr__(self, "phase_function", PhaseFunction(self.phase_function))
        object.__setattr__(self, "source", Source(self.source))
        if self.n_photons < 0:
            raise ValueError("n_photons must be >= 0")
        if self.max_order < 0:
            raise ValueError("max_order must be >= 0")
        if not 0.0 < self.roulette_survive < 1.0:
            raise ValueError("roulette_survive must lie in (0, 1)")
        if not 0.0 <= self.detector_cone_half_angle <= math.pi:
            raise ValueError("detector_cone_half_angle must lie in [0, pi]")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.n_theta_bins < 1 or self.n_order_buckets < 1:
            raise ValueError("histogram dimensions must be >= 1")


@dataclass(slots=True)
class Photon:
    pos: tuple
    dir: tuple
    delta: float = 0.0
    weight: float = 1.0
    order: int = 0
    channel: Channel = Channel.RAMAN_ELASTIC
    alive: bool = True
    diverged: bool = False


@dataclass(frozen=True)
class FlightOutcome:
    collided: bool
    position: tuple
    distance: float

    @property
    def escaped(self) -> bool:
        return not self.collided


@dataclass
class Tally:
    """Mergeable accumulator of escaped weight per order, channel and angle."""

    max_order: int = 400
    n_theta_bins: int = 36
    n_order_buckets: int = 10
    escaped: np.ndarray = field(default=None)
    escape_counts: np.ndarray = field(default=None)
    collision_weight: np.ndarray = field(default=None)
    detector_cone: np.ndarray = field(default=None)
    angular_hist: np.ndarray = field(default=None)
    truncated_weight: float = 0.0
    truncated_count: int = 0
    photons_launched: int = 0
    diverged: bool = False

    def __post_init__(self):
        n = self.max_order + 1
        if self.escaped is None:
            self.escaped = np.zeros((2, n))
        if self.escape_counts is None:
            self.escape_counts = np.zeros(n, dtype=np.int64)
        if self.collision_weight is None:
            self.collision_weight = np.zeros(n)
        if self.detector_cone is None:
            self.detector_cone = np.zeros((2, n))
        if self.angular_hist is None:
            self.angular_hist = np.zeros((2, self.n_theta_bins, self.n_order_buckets))

    @classmethod
    def empty_for(cls, cfg: RunConfig) -> "Tally":
        return cls(cfg.max_order, cfg.n_theta_bins, cfg.n_order_buckets)

    @property
    def escaped_elastic(self) -> np.ndarray:
        return self.escaped[Channel.RAMAN_ELASTIC]

    @property
    def escaped_anti_stokes(self) -> np.ndarray:
        return self.escaped[Channel.ANTI_STOKES]

    @property
    def total_escaped(self) -> float:
        return float(self.escaped.sum())

    @property
    def truncated_fraction(self) -> float:
        total = self.total_escaped + self.truncated_weight
        return self.truncated_weight / total if total > 0 else 0.0

    def merge(self, other: "Tally") -> "Tally":
        if (self.max_order, self.n_theta_bins, self.n_order_buckets) != (
                other.max_order, other.n_theta_bins, other.n_order_buckets):
            raise ValueError("cannot merge tallies with different shapes")
        return Tally(
            self.max_order, self.n_theta_bins, self.n_order_buckets,
            self.escaped + other.escaped,
            self.escape_counts + other.escape_counts,
            self.collision_weight + other.collision_weight,
            self.detector_cone + other.detector_cone,
            self.angular_hist + other.angular_hist,
            self.truncated_weight + other.truncated_weight,
            self.truncated_count + other.truncated_count,
            self.photons_launched + other.photons_launched,
            self.diverged or other.diverged,
        )

    __add__ = merge

    def accumulate(self, other: "Tally") -> None:
        """In-place :meth:`merge`."""
        if (self.max_order, self.n_theta_bins, self.n_order_buckets) != (
                other.max_order, other.n_theta_bins, other.n_order_buckets):
            raise ValueError("cannot merge tallies with different shapes")
        self.escaped += other.escaped
        self.escape_counts += other.escape_counts
        self.collision_weight += other.collision_weight
        self.detector_cone += other.detector_cone
        self.angular_hist += other.angular_hist
        self.truncated_weight += other.truncated_weight
        self.truncated_count += other.truncated_count
        self.photons_launched += other.photons_launched
        self.diverged = self.diverged or other.diverged

    def record_escape(self, photon: Photon, cone_cos: float) -> None:
        ch, order, w = int(photon.channel), photon.order, photon.weight
        dx, dz = photon.dir[0], photon.dir[2]
        self.escaped[ch, order] += w
        if ch == 0:
            self.escape_counts[order] += 1
        theta = math.acos(max(-1.0, min(1.0, dx)))
        b = int(theta / math.pi * self.n_theta_bins)
        if b >= self.n_theta_bins:
            b = self.n_theta_bins - 1
        self.angular_hist[ch, b, order_bucket(order, self.n_order_buckets)] += w
        if dz >= cone_cos:
            self.detector_cone[ch, order] += w


def order_bucket(order: int, n_buckets: int) -> int:
    """Logarithmic order bucket: 0, 1, 2-3, 4-7, ... capped at ``n_buckets - 1``."""
    return min(order.bit_length(), n_buckets - 1)


# -- sampling primitives ------------------------------------------------------

def dipole_cos(u: float) -> float:
    """Invert the CDF of p(mu) = 3/8 (1 + mu**2) on [-1, 1]."""
    t = 4.0 * u - 2.0
    a = (t + math.sqrt(t * t + 1.0)) ** (1.0 / 3.0)
    mu = a - 1.0 / a
    return max(-1.0, min(1.0, mu))


def rotate(d, mu: float, phi: float) -> tuple:
    """Direction at polar cosine ``mu`` and azimuth ``phi`` about ``d``."""
    dx, dy, dz = d
    st = math.sqrt(max(0.0, 1.0 - mu * mu))
    cp = math.cos(phi)
    sp = math.sin(phi)
    if math.fabs(dz) > 0.99999:
        nx = st * cp
        ny = st * sp
        nz = mu if dz > 0.0 else -mu
    else:
        tmp = math.sqrt(1.0 - dz * dz)
        nx = st * (dx * dz * cp - dy * sp) / tmp + dx * mu
        ny = st * (dy * dz * cp + dx * sp) / tmp + dy * mu
        nz = -st * cp * tmp + dz * mu
    norm = math.sqrt(nx * nx + ny * ny + nz * nz)
    return nx / norm, ny / norm, nz / norm


def sample_phase_function(in_dir, kind: PhaseFunction | str, rng: PhotonStream) -> tuple:
    if PhaseFunction(kind) is PhaseFunction.ISOTROPIC:
        mu = 2.0 * rng.uniform() - 1.0
        phi = 2.0 * math.pi * rng.uniform()
        st = math.sqrt(max(0.0, 1.0 - mu * mu))
        return st * math.cos(phi), st * math.sin(phi), mu
    mu = dipole_cos(rng.uniform())
    phi = 2.0 * math.pi * rng.uniform()
    return rotate(in_dir, mu, phi)


def sample_dipole_emission(rng: PhotonStream) -> tuple:
    """Dipole pattern (3/8)(1 + cos^2) about the x polarisation axis."""
    mu = dipole_cos(rng.uniform())
    phi = 2.0 * math.pi * rng.uniform()
    st = math.sqrt(max(0.0, 1.0 - mu * mu))
    return mu, st * math.cos(phi), st * math.sin(phi)


def emit_source(cfg: RunConfig, medium: Medium, rng: PhotonStream,
                spectral: SpectralModel | None = None) -> Photon:
    delta = spectral.delta_emit if spectral is not None else 0.0
    R = medium.cloud.bound
    if cfg.source is Source.EXTERNAL_PENCIL:
        return Photon((0.0, 0.0, -R), (0.0, 0.0, 1.0), delta)
    if cfg.source is Source.CENTER_POINT_DIPOLE:
        return Photon((0.0, 0.0, 0.0), sample_dipole_emission(rng), delta)

    rho = min(medium.channel_radius, R)
    if not rho > 0:
        raise ValueError("channel_raman source needs a gain channel")
    cloud = medium.cloud
    while True:
        z = (2.0 * rng.uniform() - 1.0) * R
        r = rho * math.sqrt(rng.uniform())
        phi = 2.0 * math.pi * rng.uniform()
        x = r * math.cos(phi)
        y = r * math.sin(phi)
        r2 = x * x + y * y + z * z
        if r2 > R * R:
            continue
        if cloud.gaussian:
            s = cloud.sigma_r
            if rng.uniform() >= math.exp(-r2 / (2.0 * s * s)):
                continue
        break
    return Photon((x, y, z), sample_dipole_emission(rng), delta)


def sample_free_path(photon: Photon, medium: Medium, spectral: SpectralModel,
                     rng: PhotonStream) -> FlightOutcome:
    """Woodcock tracking to the next real collision or to the cloud boundary."""
    p, d = photon.pos, photon.dir
    sph = medium.sphere_interval(p, d)
    s_exit = max(0.0, sph[1]) if sph is not None else 0.0
    mu = medium.majorant(spectral, photon.delta)
    s = 0.0
    if mu > 0.0:
        while True:
            s += rng.exponential() / mu
            if s >= s_exit:
                break
            x = (p[0] + s * d[0], p[1] + s * d[1], p[2] + s * d[2])
            c = medium.scattering_coeff(x, spectral, photon.delta)
            if c >= mu or (c > 0.0 and rng.uniform() * mu < c):
                return FlightOutcome(True, x, s)
    exit_pos = (p[0] + s_exit * d[0], p[1] + s_exit * d[1], p[2] + s_exit * d[2])
    return FlightOutcome(False, exit_pos, s_exit)


def apply_gain(photon: Photon, flight: FlightOutcome, medium: Medium,
               spectral: SpectralModel) -> float:
    """Multiply the weight by exp(integral of g over the channel part of the flight)."""
    gpd = gain_per_density(spectral)
    if gpd > 0.0:
        expo = gpd * medium.gain_path_integral(photon.pos, photon.dir, flight.distance)
        factor = math.exp(expo) if expo < EXP_LIMIT else math.inf
        photon.weight = photon.weight * factor
        if photon.weight > WEIGHT_CAP:
            photon.weight = WEIGHT_CAP
            photon.diverged = True
    return photon.weight


def collide(photon: Photon, spectral: SpectralModel, kind: PhaseFunction | str,
            rng: PhotonStream) -> Channel:
    """Elastic scattering or conversion to the anti-Stokes channel; updates ``photon``."""
    beta = beta_inel(photon.delta, spectral)
    converted = beta > 0.0 and (beta >= 1.0 or rng.uniform() < beta)
    photon.dir = sample_phase_function(photon.dir, kind, rng)
    if converted:
        photon.channel = Channel.ANTI_STOKES
    else:
        photon.order += 1
    return photon.channel


def russian_roulette(photon: Photon, cfg: RunConfig, rng: PhotonStream) -> bool:
    """Unbiased termination of low-weight photons; returns whether it survives."""
    if photon.weight >= cfg.w_min:
        return True
    if rng.uniform() < cfg.roulette_survive:
        photon.weight = photon.weight / cfg.roulette_survive
        return True
    photon.weight = 0.0
    photon.alive = False
    return False


def trace(photon: Photon, medium: Medium, spectral: SpectralModel, cfg: RunConfig,
          rng: PhotonStream, tally: Tally) -> None:
    cone_cos = math.cos(cfg.detector_cone_half_angle)
    while True:
        flight = sample_free_path(photon, medium, spectral, rng)
        apply_gain(photon, flight, medium, spectral)
        if photon.diverged:
            tally.diverged = True
        if flight.escaped:
            photon.pos = flight.position
            tally.record_escape(photon, cone_cos)
            break
        photon.pos = flight.position
        tally.collision_weight[photon.order] += photon.weight
        if collide(photon, spectral, cfg.phase_function, rng) is Channel.ANTI_STOKES:
            # transparent at the shifted frequency: straight out of the cloud
            tally.record_escape(photon, cone_cos)
            break
        if photon.order > cfg.max_order:
            tally.truncated_weight += photon.weight
            tally.truncated_count += 1
            break
        if not russian_roulette(photon, cfg, rng):
            break
    photon.alive = False


# -- ensemble driver ----------------------------------------------------------

def _python_block(medium, spectral, cfg, start, count) -> Tally:
    tally = Tally.empty_for(cfg)
    for i in range(start, start + count):
        rng = PhotonStream(cfg.seed, i)
        trace(emit_source(cfg, medium, rng, spectral), medium, spectral, cfg, rng, tally)
    tally.photons_launched = count
    return tally


def pack_params(medium: Medium, spectral: SpectralModel, cfg: RunConfig):
    """Flatten the run description for the compiled kernel."""
    delta = spectral.delta_emit
    overlap = medium.overlap_gain
    trap_sc = medium.scattering_per_density(spectral, delta)
    fp = np.array([
        medium.cloud.bound,
        medium.cloud.sigma_r if medium.cloud.gaussian else 0.0,
        medium.cloud.n0,
        medium.channel_radius,
        trap_sc,
        trap_sc if overlap else 0.0,
        gain_per_density(spectral),
        medium.majorant(spectral, delta),
        beta_inel(delta, spectral),
        cfg.w_min,
        cfg.roulette_survive,
        math.cos(cfg.detector_cone_half_angle),
        delta,
    ], dtype=np.float64)
    ip = np.array([
        1 if medium.cloud.gaussian else 0,
        _PHASE_CODES[cfg.phase_function],
        _SOURCE_CODES[cfg.source],
        cfg.max_order,
        cfg.n_theta_bins,
        cfg.n_order_buckets,
    ], dtype=np.int64)
    return fp, ip


def _compiled_block(packed, cfg, start, count) -> Tally:
    fp, ip = packed
    tally = Tally.empty_for(cfg)
    scalars = np.zeros(4)
    _kernel.trace_block(fp, ip, cfg.seed, start, count, tally.escaped,
                        tally.escape_counts, tally.collision_weight,
                        tally.detector_cone, tally.angular_hist, scalars)
    tally.truncated_weight = float(scalars[0])
    tally.diverged = bool(scalars[1])
    tally.truncated_count = int(scalars[2])
    tally.photons_launched = count
    return tally


def available_backends() -> list[str]:
    return (["cython"] if _kernel is not None else []) + ["python"]


def default_backend() -> str:
    forced = os.environ.get("RANDLASE_BACKEND")
    if forced:
        if forced not in available_backends():
            raise RuntimeError(f"backend {forced!r} unavailable; have {available_backends()}")
        return forced
    return available_backends()[0]


def run(medium: Medium, spectral: SpectralModel, cfg: RunConfig,
        workers: int = 1, backend: str | None = None) -> Tally:
    """Trace ``cfg.n_photons`` histories and return the merged tally.

    Photons are split into fixed blocks of ``BLOCK_SIZE`` whose tallies are
    merged in block order, so the result is bitwise independent of ``workers``.
    """
    backend = backend or default_backend()
    if backend not in available_backends():
        raise ValueError(f"unknown backend {backend!r}")
    if cfg.source is Source.CHANNEL_RAMAN and not medium.channel_radius > 0:
        raise ValueError("channel_raman source needs a gain channel")
    blocks = [(s, min(BLOCK_SIZE, cfg.n_photons - s))
              for s in range(0, cfg.n_photons, BLOCK_SIZE)]
    if backend == "cython":
        packed = pack_params(medium, spectral, cfg)
        job = lambda b: _compiled_block(packed, cfg, *b)  # noqa: E731
    else:
        job = lambda b: _python_block(medium, spectral, cfg, *b)  # noqa: E731

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))
    else:
        parts = [job(b) for b in blocks]

    total = Tally.empty_for(cfg)
    for part in parts:
        total.accumulate(part)
    return total
