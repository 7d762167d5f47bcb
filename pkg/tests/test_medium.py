import math

import pytest
from hypothesis import assume, given, strategies as st

from randlase import oracles
from randlase.medium import (ChannelGeometry, CloudGeometry, Medium, b0_of, cloud_for_b0)
from randlase.spectral import RegionKind, SpectralModel

GAUSS2 = CloudGeometry("gaussian", sigma_r=2.0, cutoff=8.0)


def unit(v):
    n = math.sqrt(sum(c * c for c in v))
    return tuple(c / n for c in v)


def test_density_examples():
    m = Medium(CloudGeometry(radius=5.0))
    assert m.density((4.9, 0, 0)) == 1.0
    assert m.density((5.1, 0, 0)) == 0.0
    assert Medium(GAUSS2).density((2.0, 0, 0)) == pytest.approx(math.exp(-0.5), rel=1e-15)


def test_region_examples():
    m = Medium(CloudGeometry(radius=5.0), ChannelGeometry(1.0))
    assert m.region((0.5, 0, 3)) is RegionKind.GAIN_CHANNEL
    assert m.region((2, 0, 0)) is RegionKind.TRAP
    assert m.region((0, 0, 6)) is RegionKind.VACUUM


def test_optical_depth_examples():
    m = Medium(CloudGeometry(radius=5.0))
    assert m.optical_depth_along((0, 0, 0), (0, 0, 1)) == pytest.approx(5.0, rel=1e-14)
    assert m.optical_depth_along((0, 0, -5), (0, 0, 1)) == pytest.approx(10.0, rel=1e-14)
    ref = oracles.gaussian_line_integral((0, 0, 0), (0, 0, 1), 2.0, 40.0)
    assert ref == pytest.approx(2.5066, abs=1e-4)
    wide = Medium(CloudGeometry("gaussian", sigma_r=2.0, cutoff=40.0))
    assert wide.optical_depth_along((0, 0, 0), (0, 0, 1)) == pytest.approx(ref, rel=1e-9)
    # the default 4-sigma cutoff against the oracle with the same cutoff
    ref8 = oracles.gaussian_line_integral((0, 0, 0), (0, 0, 1), 2.0, 8.0)
    assert Medium(GAUSS2).optical_depth_along((0, 0, 0), (0, 0, 1)) == pytest.approx(ref8, rel=1e-9)


def test_b0_examples():
    assert b0_of(CloudGeometry(radius=10.0)) == 20.0
    assert b0_of(CloudGeometry(radius=15.0)) == 30.0
    ref = 2.0 * oracles.gaussian_line_integral((0, 0, 0), (0, 0, 1), 4.0, 1e3)
    assert ref == pytest.approx(10.0265, abs=1e-4)
    # 4-sigma cutoff removes well under 1e-4 of the depth
    g = CloudGeometry("gaussian", sigma_r=4.0, cutoff=16.0)
    assert b0_of(g) == pytest.approx(ref, rel=1e-4)


def test_cloud_for_b0_round_trip():
    for shape in ("uniform_sphere", "gaussian"):
        assert b0_of(cloud_for_b0(37.0, shape)) == pytest.approx(37.0, rel=1e-13)
    with pytest.raises(ValueError):
        cloud_for_b0(-1.0)


def test_b0_ignores_channel():
    m = Medium(CloudGeometry(radius=15.0), ChannelGeometry(1.5))
    assert m.b0() == 30.0
    # but the scattering depth along the axis is zero
    assert m.optical_depth_along((0, 0, -15), (0, 0, 1)) == 0.0


def test_ray_segments_examples():
    m = Medium(CloudGeometry(radius=50.0), ChannelGeometry(1.0))
    assert m.ray_channel_segments((0, 0, 0), (0, 0, 1), 7.0) == [(0.0, 7.0)]
    assert m.ray_channel_segments((0, 2, -10), (0, 0, 1), 20.0) == []
    assert m.ray_channel_segments((0, 2, 0), (1, 0, 0), 20.0) == []
    segs = m.ray_channel_segments((-3, 0, 0), (1, 0, 0), 20.0)
    assert segs == [(pytest.approx(2.0), pytest.approx(4.0))]


def test_majorant_examples():
    sp = SpectralModel()
    assert Medium(CloudGeometry(radius=5.0, n0=2.0)).majorant(sp, 0.0) == 2.0
    assert Medium(GAUSS2).majorant(sp, 0.0) == Medium(GAUSS2).scattering_coeff((0, 0, 0), sp, 0.0)
    m = Medium()
    assert m.majorant(sp, 0.5) == pytest.approx(0.5 * m.majorant(sp, 0.0), rel=1e-15)


def test_geometry_validation():
    with pytest.raises(ValueError):
        CloudGeometry("gaussian", sigma_r=1.0, cutoff=2.0)
    with pytest.raises(ValueError):
        ChannelGeometry(-1.0)
    with pytest.raises(ValueError):
        Medium(trap_fraction=1.5)


coord = st.floats(-12, 12)
vec = st.tuples(coord, coord, coord)


@given(vec, st.floats(0, 3), st.booleans())
def test_region_partition(x, rho, gaussian):
    cloud = GAUSS2 if gaussian else CloudGeometry(radius=8.0)
    m = Medium(cloud, ChannelGeometry(rho))
    kind = m.region(x)
    if kind is RegionKind.GAIN_CHANNEL:
        assert m.density(x) > 0
    assert (kind is RegionKind.VACUUM) == (m.density(x) == 0)


@given(vec, vec, st.floats(0, 30), st.floats(0.1, 3))
def test_segments_sorted_within_range(x, d, s_max, rho):
    assume(sum(c * c for c in d) > 1e-6)
    m = Medium(CloudGeometry(radius=8.0), ChannelGeometry(rho))
    segs = m.ray_channel_segments(x, unit(d), s_max)
    prev = 0.0
    for a, b in segs:
        assert prev <= a < b <= s_max
        prev = b
    assert sum(b - a for a, b in segs) <= s_max


@given(vec, vec, st.booleans(), st.floats(0, 2))
def test_optical_depth_path_consistent(offset, d, gaussian, rho):
    assume(sum(c * c for c in d) > 1e-6)
    d = unit(d)
    cloud = GAUSS2 if gaussian else CloudGeometry(radius=8.0)
    m = Medium(cloud, ChannelGeometry(rho))
    # start outside the support, cross it, then come back from beyond the far side
    x = tuple(offset[i] - 40.0 * d[i] for i in range(3))
    far = tuple(offset[i] + 40.0 * d[i] for i in range(3))
    back = tuple(-c for c in d)
    fwd = m.optical_depth_along(x, d)
    rev = m.optical_depth_along(far, back)
    assert fwd == pytest.approx(rev, abs=1e-6, rel=1e-9)


@given(vec, vec, st.floats(3, 12))
def test_gaussian_line_integral_matches_quadrature(x, d, cutoff):
    assume(sum(c * c for c in d) > 1e-6)
    d = unit(d)
    m = Medium(CloudGeometry("gaussian", sigma_r=1.0, cutoff=cutoff))
    assert m.optical_depth_along(x, d) == pytest.approx(
        oracles.gaussian_line_integral(x, d, 1.0, cutoff), abs=1e-8, rel=1e-8)


@given(st.floats(0.01, 5), st.booleans())
def test_b0_linear_in_density(n0, gaussian):
    kw = dict(shape="gaussian", sigma_r=2.0, cutoff=8.0) if gaussian else dict(radius=3.0)
    full = Medium(CloudGeometry(n0=n0, **kw)).b0()
    half = Medium(CloudGeometry(n0=n0 / 2, **kw)).b0()
    assert half == pytest.approx(full / 2, rel=1e-14)
