import math

import pytest
from hypothesis import given, strategies as st

from randlase.spectral import (KineticLengths, RegionKind, SpectralModel, beta_inel, gain_coeff,
                               gain_per_density, kinetic_lengths, letokhov_gain_length,
                               letokhov_radius, sigma_sc)

finite = st.floats(-50, 50, allow_nan=False)
positive = st.floats(1e-3, 1e3, allow_nan=False)


def test_sigma_sc_values():
    m = SpectralModel()
    assert sigma_sc(0.0, m) == 1.0
    assert sigma_sc(0.5, m) == pytest.approx(0.5, rel=1e-15)
    assert sigma_sc(1.5, m) == pytest.approx(0.1, rel=1e-15)


def test_beta_modes():
    assert beta_inel(3.7, SpectralModel(beta0=0.3)) == 0.3
    for d in (-2.0, 0.0, 5.0):
        assert beta_inel(d, SpectralModel()) == 0.0
    lor = SpectralModel(beta0=0.4, beta_mode="lorentzian", delta_c=1.3)
    assert beta_inel(1.3, lor) == 0.4


def test_gain_values():
    assert gain_per_density(SpectralModel(gain_kappa=0.0, rabi_2v=30)) == 0.0
    assert gain_per_density(SpectralModel(gain_kappa=1e-3, rabi_2v=0)) == 0.0
    m = SpectralModel(gain_kappa=1e-3, rabi_2v=30.0)
    assert gain_coeff(0.0, m, 1.0) == pytest.approx(0.9, rel=1e-14)
    m40 = SpectralModel(gain_kappa=1e-3, rabi_2v=40.0)
    assert gain_coeff(0.0, m40, 1.0) / gain_coeff(0.0, m, 1.0) == pytest.approx(16 / 9, rel=1e-14)


def test_kinetic_examples():
    # n * sigma_sc = 2
    k = kinetic_lengths(0.0, SpectralModel(), 2.0, RegionKind.TRAP)
    assert (k.l_ex_inv, k.l_sc_inv, k.l_ls_inv) == (2.0, 2.0, 0.0)
    # g = 0.5 at unit density
    m = SpectralModel(gain_kappa=0.5, rabi_2v=1.0)
    k = kinetic_lengths(0.0, m, 1.0, RegionKind.GAIN_CHANNEL)
    assert (k.l_ex_inv, k.l_sc_inv, k.l_ls_inv) == (-0.5, 0.0, -0.5)
    assert k.l_g == 2.0
    k = kinetic_lengths(0.0, m, 0.0, "vacuum")
    assert (k.l_ex_inv, k.l_sc_inv, k.l_ls_inv) == (0.0, 0.0, 0.0)


def test_kinetic_loss_from_conversion():
    k = kinetic_lengths(0.0, SpectralModel(beta0=0.5), 1.0, "trap")
    assert k.l_ex_inv == 2.0
    assert k.l_ls_inv == 1.0
    assert KineticLengths(1.0, 1.0, 0.0, 1.0).l_g == math.inf


def test_letokhov_values():
    assert letokhov_radius(1, 1) == pytest.approx(1.81380, abs=1e-5)
    assert letokhov_radius(3, 1) == pytest.approx(math.pi, rel=1e-15)
    with pytest.raises(ValueError):
        letokhov_radius(0.0, 1.0)


def test_model_validation():
    with pytest.raises(ValueError):
        SpectralModel(beta0=1.5)
    with pytest.raises(ValueError):
        SpectralModel(gamma=0.0)
    with pytest.raises(ValueError):
        kinetic_lengths(0.0, SpectralModel(), -1.0, "trap")


@given(finite, st.floats(0, 5), st.sampled_from(list(RegionKind)), st.booleans(),
       st.floats(0, 0.99), st.floats(0, 1e-2), st.floats(0, 60))
def test_loss_identity(delta, density, region, overlap, beta0, kappa, pump):
    m = SpectralModel(beta0=beta0, gain_kappa=kappa, rabi_2v=pump)
    k = kinetic_lengths(delta, m, density, region, overlap)
    assert abs(k.l_ls_inv - (k.l_ex_inv - k.l_sc_inv)) <= 1e-12


@given(st.floats(0, 50), st.floats(0, 50))
def test_sigma_even_and_decreasing(a, b):
    m = SpectralModel()
    assert sigma_sc(a, m) == sigma_sc(-a, m)
    lo, hi = sorted((a, b))
    assert sigma_sc(hi, m) <= sigma_sc(lo, m)


@given(st.floats(1e-3, 100), st.floats(0, 100), st.floats(-5, 5))
def test_gain_quadratic_in_pump(p1, p2, dc):
    m1 = SpectralModel(gain_kappa=1e-3, rabi_2v=p1, delta_c=dc)
    m2 = SpectralModel(gain_kappa=1e-3, rabi_2v=p2, delta_c=dc)
    if p1 <= p2:
        assert gain_per_density(m1) <= gain_per_density(m2)
    if p1 > 0:
        ratio = gain_per_density(m2) / gain_per_density(m1)
        assert ratio == pytest.approx((p2 / p1) ** 2, rel=1e-12)


@given(positive, positive, st.floats(0.1, 10))
def test_letokhov_symmetry_homogeneity(a, b, c):
    assert letokhov_radius(a, b) == pytest.approx(letokhov_radius(b, a), rel=1e-14)
    assert letokhov_radius(c * a, c * b) == pytest.approx(c * letokhov_radius(a, b), rel=1e-12)
    assert letokhov_gain_length(letokhov_radius(a, b), a) == pytest.approx(b, rel=1e-12)


@given(finite, st.floats(0, 1), st.floats(-5, 5), st.floats(0.1, 5),
       st.sampled_from(["constant", "lorentzian"]))
def test_beta_bounded(delta, beta0, dc, width, mode):
    m = SpectralModel(beta0=beta0, delta_c=dc, beta_width=width, beta_mode=mode)
    assert 0.0 <= beta_inel(delta, m) <= beta0
