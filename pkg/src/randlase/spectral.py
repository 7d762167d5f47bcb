"""Frequency-dependent material response.

Frequencies are in units of the natural linewidth ``gamma`` and cross sections
in units of the resonant cross section ``sigma0``; with unit peak density the
resonant mean free path is the length unit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class RegionKind(str, enum.Enum):
    GAIN_CHANNEL = "gain_channel"
    TRAP = "trap"
    VACUUM = "vacuum"


class BetaMode(str, enum.Enum):
    CONSTANT = "constant"
    LORENTZIAN = "lorentzian"


@dataclass(frozen=True)
class SpectralModel:
    """Cross sections, Raman gain and anti-Stokes branching.

    ``rabi_2v`` is the control-mode Rabi parameter 2V in units of gamma and
    ``delta_c`` its detuning from the forbidden F0=2 -> F=4 line.  Gain scales
    as ``gain_kappa * (rabi_2v / gamma)**2`` with a Lorentzian of width
    ``gain_width`` in ``delta_c``.  ``delta_emit`` is the (monochromatic)
    emission detuning from the closed F0=3 -> F=4 line.
    """

    gamma: float = 1.0
    sigma0: float = 1.0
    rabi_2v: float = 0.0
    delta_c: float = 0.0
    gain_kappa: float = 0.0
    gain_width: float = 1.0
    beta0: float = 0.0
    beta_mode: BetaMode = BetaMode.CONSTANT
    beta_width: float = 1.0
    delta_emit: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "beta_mode", BetaMode(self.beta_mode))
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be > 0")
        if not 0.0 <= self.beta0 <= 1.0:
            raise ValueError("beta0 must lie in [0, 1]")
        if not self.gain_kappa >= 0:
            raise ValueError("gain_kappa must be >= 0")
        if not (self.gain_width > 0 and self.beta_width > 0):
            raise ValueError("gain_width and beta_width must be > 0")
        if self.rabi_2v < 0:
            raise ValueError("rabi_2v must be >= 0")


@dataclass(frozen=True)
class KineticLengths:
    l_ex_inv: float
    l_sc_inv: float
    l_ls_inv: float
    l_tr: float

    @property
    def l_g(self) -> float:
        """Gain length, or inf when the medium is not amplifying."""
        return -1.0 / self.l_ls_inv if self.l_ls_inv < 0 else math.inf


def sigma_sc(delta: float, model: SpectralModel) -> float:
    x = 2.0 * delta / model.gamma
    return model.sigma0 / (1.0 + x * x)


def beta_inel(delta: float, model: SpectralModel) -> float:
    if model.beta_mode is BetaMode.CONSTANT:
        return model.beta0
    x = 2.0 * (delta - model.delta_c) / model.beta_width
    return model.beta0 / (1.0 + x * x)


def gain_per_density(model: SpectralModel) -> float:
    """Raman gain coefficient per unit F0=2 density."""
    p = model.rabi_2v / model.gamma
    x = 2.0 * model.delta_c / model.gain_width
    return model.sigma0 * model.gain_kappa * p * p / (1.0 + x * x)


def gain_coeff(delta: float, model: SpectralModel, density: float) -> float:
    # the gain profile follows the control detuning, not the emission detuning
    if density < 0:
        raise ValueError("density must be >= 0")
    return density * gain_per_density(model)


def kinetic_lengths(delta: float, model: SpectralModel, density: float,
                    region: RegionKind | str, overlap: bool = False) -> KineticLengths:
    """Extinction, scattering and loss inverse lengths at one point.

    In a trap region the anti-Stokes branching is folded into extinction as
    ``l_sc_inv / (1 - beta)``, so the loss length equals the mean path to
    conversion.  A gain region has no elastic scattering unless ``overlap``
    (uniform gain coexisting with scatterers) is set.
    """
    if density < 0:
        raise ValueError("density must be >= 0")
    region = RegionKind(region)
    if region is RegionKind.VACUUM or density == 0:
        return KineticLengths(0.0, 0.0, 0.0, math.inf)

    scatters = region is RegionKind.TRAP or overlap
    amplifies = region is RegionKind.GAIN_CHANNEL
    l_sc_inv = density * sigma_sc(delta, model) if scatters else 0.0
    l_ex_inv = 0.0
    if scatters:
        beta = beta_inel(delta, model)
        l_ex_inv = l_sc_inv / (1.0 - beta) if beta < 1.0 else math.inf
    if amplifies:
        l_ex_inv -= gain_coeff(delta, model, density)
    l_tr = 1.0 / l_sc_inv if l_sc_inv > 0 else math.inf
    return KineticLengths(l_ex_inv, l_sc_inv, l_ex_inv - l_sc_inv, l_tr)


def letokhov_radius(l_tr: float, l_g: float) -> float:
    """Critical sample radius pi * sqrt(l_tr * l_g / 3) of a diffusive gain medium."""
    if not (l_tr > 0 and l_g > 0):
        raise ValueError("l_tr and l_g must both be positive")
    return math.pi * math.sqrt(l_tr * l_g / 3.0)


def letokhov_gain_length(radius: float, l_tr: float) -> float:
    """Critical gain length 3 r**2 / (pi**2 l_tr); inverse of :func:`letokhov_radius`."""
    if not (radius > 0 and l_tr > 0):
        raise ValueError("radius and l_tr must both be positive")
    return 3.0 * radius * radius / (math.pi ** 2 * l_tr)
