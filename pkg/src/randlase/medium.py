"""Cloud geometry, the cylindrical gain channel and ray integrals."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .spectral import RegionKind, SpectralModel, sigma_sc

SQRT2 = math.sqrt(2.0)
SQRT_2PI = math.sqrt(2.0 * math.pi)


class CloudShape(str, enum.Enum):
    UNIFORM_SPHERE = "uniform_sphere"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class CloudGeometry:
    """Spherical cloud: uniform (``radius``) or Gaussian (``sigma_r``, hard ``cutoff``)."""

    shape: CloudShape = CloudShape.UNIFORM_SPHERE
    radius: float = 5.0
    sigma_r: float = 1.0
    cutoff: float = 4.0
    n0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "shape", CloudShape(self.shape))
        if self.n0 < 0:
            raise ValueError("n0 must be >= 0")
        if self.shape is CloudShape.UNIFORM_SPHERE:
            if self.radius < 0:
                raise ValueError("radius must be >= 0")
        else:
            if not self.sigma_r > 0:
                raise ValueError("sigma_r must be > 0")
            if self.cutoff < 3.0 * self.sigma_r:
                raise ValueError("cutoff must be >= 3 * sigma_r")

    @property
    def bound(self) -> float:
        """Radius of the support sphere."""
        if self.shape is CloudShape.UNIFORM_SPHERE:
            return self.radius
        return self.cutoff

    @property
    def gaussian(self) -> bool:
        return self.shape is CloudShape.GAUSSIAN


@dataclass(frozen=True)
class ChannelGeometry:
    """Gain cylinder about the z-axis; radius 0 disables it, inf covers the cloud."""

    radius: float = 0.0

    def __post_init__(self):
        if not self.radius >= 0:
            raise ValueError("channel radius must be >= 0")


@dataclass(frozen=True)
class Medium:
    cloud: CloudGeometry = CloudGeometry()
    channel: ChannelGeometry = ChannelGeometry()
    trap_fraction: float = 1.0
    overlap_gain: bool = False

    def __post_init__(self):
        if not 0.0 <= self.trap_fraction <= 1.0:
            raise ValueError("trap_fraction must lie in [0, 1]")

    @property
    def channel_radius(self) -> float:
        """Effective gain radius (inf in overlap mode)."""
        return math.inf if self.overlap_gain else self.channel.radius

    # -- point queries -----------------------------------------------------

    def density(self, x) -> float:
        cloud = self.cloud
        r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
        if cloud.gaussian:
            if r2 > cloud.cutoff * cloud.cutoff:
                return 0.0
            s = cloud.sigma_r
            return cloud.n0 * math.exp(-r2 / (2.0 * s * s))
        if r2 > cloud.radius * cloud.radius:
            return 0.0
        return cloud.n0

    def in_channel(self, x) -> bool:
        rho = self.channel_radius
        return x[0] * x[0] + x[1] * x[1] < rho * rho

    def region(self, x) -> RegionKind:
        if self.density(x) == 0.0:
            return RegionKind.VACUUM
        if self.in_channel(x):
            return RegionKind.GAIN_CHANNEL
        return RegionKind.TRAP

    def scattering_per_density(self, spectral: SpectralModel, delta: float) -> float:
        return sigma_sc(delta, spectral) * self.trap_fraction

    def scattering_coeff(self, x, spectral: SpectralModel, delta: float) -> float:
        """Local elastic scattering coefficient at the emission detuning."""
        dens = self.density(x)
        if dens == 0.0:
            return 0.0
        if self.in_channel(x) and not self.overlap_gain:
            return 0.0
        return dens * self.scattering_per_density(spectral, delta)

    def majorant(self, spectral: SpectralModel, delta: float) -> float:
        return self.cloud.n0 * sigma_sc(delta, spectral)

    # -- ray geometry ------------------------------------------------------

    def sphere_interval(self, x, d):
        """Parameter interval where ``x + s d`` lies inside the support sphere, or None."""
        R = self.cloud.bound
        b = x[0] * d[0] + x[1] * d[1] + x[2] * d[2]
        c = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - R * R
        disc = b * b - c
        if disc <= 0.0:
            return None
        root = math.sqrt(disc)
        return -b - root, -b + root

    def cylinder_interval(self, x, d):
        rho = self.channel_radius
        if rho == 0.0:
            return None
        if math.isinf(rho):
            return -math.inf, math.inf
        a = d[0] * d[0] + d[1] * d[1]
        b = x[0] * d[0] + x[1] * d[1]
        c = x[0] * x[0] + x[1] * x[1] - rho * rho
        if a == 0.0:
            return (-math.inf, math.inf) if c < 0.0 else None
        # b*b - a*c rewritten without cancellation far from the axis
        cross = x[0] * d[1] - x[1] * d[0]
        disc = a * rho * rho - cross * cross
        if disc <= 0.0:
            return None
        root = math.sqrt(disc)
        return (-b - root) / a, (-b + root) / a

    def ray_channel_segments(self, x, d, s_max: float) -> list[tuple[float, float]]:
        """Sorted disjoint sub-intervals of [0, s_max] spent inside the gain channel."""
        cyl = self.cylinder_interval(x, d)
        sph = self.sphere_interval(x, d)
        if cyl is None or sph is None:
            return []
        lo = max(0.0, cyl[0], sph[0])
        hi = min(s_max, cyl[1], sph[1])
        return [(lo, hi)] if hi > lo else []

    def density_integral(self, x, d, t1: float, t2: float) -> float:
        """Integral of the density along ``x + s d`` for s in [t1, t2] (inside the support)."""
        cloud = self.cloud
        if not cloud.gaussian:
            return cloud.n0 * (t2 - t1)
        s = cloud.sigma_r
        b = x[0] * d[0] + x[1] * d[1] + x[2] * d[2]
        r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
        # closed form of the Gaussian line integral
        perp = math.exp(-(r2 - b * b) / (2.0 * s * s))
        scale = SQRT2 * s
        return (cloud.n0 * perp * scale * 0.5 * math.sqrt(math.pi)
                * (math.erf((t2 + b) / scale) - math.erf((t1 + b) / scale)))

    def _scattering_intervals(self, x, d):
        sph = self.sphere_interval(x, d)
        if sph is None:
            return []
        lo, hi = max(0.0, sph[0]), sph[1]
        if hi <= lo:
            return []
        if self.overlap_gain:
            return [(lo, hi)]
        out = []
        for a, b in self.ray_channel_segments(x, d, hi):
            if a > lo:
                out.append((lo, a))
            lo = max(lo, b)
        if hi > lo:
            out.append((lo, hi))
        return out

    def optical_depth_along(self, x, d, delta: float = 0.0,
                            spectral: SpectralModel | None = None) -> float:
        """Scattering optical depth from ``x`` to infinity along ``d`` (gain channel excluded)."""
        spectral = spectral or SpectralModel()
        k = self.scattering_per_density(spectral, delta)
        return k * sum(self.density_integral(x, d, a, b)
                       for a, b in self._scattering_intervals(x, d))

    def b0(self, spectral: SpectralModel | None = None, delta: float = 0.0) -> float:
        """Through-centre diameter optical depth with the channel disabled."""
        spectral = spectral or SpectralModel()
        return b0_of(self.cloud, sigma_sc(delta, spectral))

    def gain_path_integral(self, x, d, length: float) -> float:
        """Density integrated over the channel part of the flight [0, length]."""
        return sum(self.density_integral(x, d, a, b)
                   for a, b in self.ray_channel_segments(x, d, length))


def b0_of(cloud: CloudGeometry, cross_section: float = 1.0) -> float:
    if cloud.gaussian:
        return (cloud.n0 * cross_section * SQRT_2PI * cloud.sigma_r
                * math.erf(cloud.cutoff / (SQRT2 * cloud.sigma_r)))
    return 2.0 * cloud.radius * cloud.n0 * cross_section


def cloud_for_b0(b0: float, shape=CloudShape.UNIFORM_SPHERE, n0: float = 1.0,
                 sigma0: float = 1.0, cutoff_factor: float = 4.0) -> CloudGeometry:
    """Cloud with the requested resonant diameter optical depth."""
    if b0 < 0:
        raise ValueError("b0 must be >= 0")
    shape = CloudShape(shape)
    if shape is CloudShape.UNIFORM_SPHERE:
        return CloudGeometry(shape, radius=b0 / (2.0 * n0 * sigma0), n0=n0)
    sigma_r = b0 / (n0 * sigma0 * SQRT_2PI * math.erf(cutoff_factor / SQRT2))
    return CloudGeometry(shape, sigma_r=sigma_r, cutoff=cutoff_factor * sigma_r, n0=n0)
