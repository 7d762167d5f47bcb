"""TOML experiment configuration: schema, defaults, presets and the resolved echo."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .analysis import Scenario, ScanParam
from .medium import ChannelGeometry, CloudGeometry, CloudShape, Medium, b0_of, cloud_for_b0
from .spectral import BetaMode, SpectralModel
from .transport import PhaseFunction, RunConfig, Source

EXPERIMENTS = ("simulate", "scan_spectrum", "scan_threshold", "validate")
INFO_KEYS = ("derived", "artifact_defaults")


class ConfigError(ValueError):
    pass


def _nonneg(v):
    return v >= 0


def _pos(v):
    return v > 0


def _prob(v):
    return 0.0 <= v <= 1.0


def _open_prob(v):
    return 0.0 < v < 1.0


def _seed(v):
    return 0 <= v < 2 ** 64


# key -> (type, default, (predicate, rule text) or None)
SCHEMA: dict[str, dict[str, tuple]] = {
    "": {
        "experiment": (str, "simulate", (lambda v: v in EXPERIMENTS, f"one of {EXPERIMENTS}")),
        "output_dir": (str, "out", None),
        "preset": (str, "", None),
        "fail_on_divergence": (bool, True, None),
    },
    "medium": {
        "shape": (str, "uniform_sphere", (lambda v: v in {s.value for s in CloudShape},
                                          "uniform_sphere or gaussian")),
        "b0": (float, None, (_nonneg, "b0 >= 0")),
        "radius": (float, None, (_nonneg, "radius >= 0")),
        "sigma_r": (float, None, (_pos, "sigma_r > 0")),
        "cutoff_factor": (float, 4.0, (lambda v: v >= 3.0, "cutoff_factor >= 3")),
        "n0": (float, 1.0, (_pos, "n0 > 0")),
        "channel_radius": (float, None, (_nonneg, "channel_radius >= 0")),
        "channel_radius_fraction": (float, None, (_nonneg, "channel_radius_fraction >= 0")),
        "trap_fraction": (float, 1.0, (_prob, "0 <= trap_fraction <= 1")),
        "overlap_gain": (bool, False, None),
    },
    "spectral": {
        "gamma": (float, 1.0, (_pos, "gamma > 0")),
        "sigma0": (float, 1.0, (_pos, "sigma0 > 0")),
        "rabi_2v": (float, 0.0, (_nonneg, "rabi_2v >= 0")),
        "delta_c": (float, 0.0, None),
        "gain_kappa": (float, 0.0, (_nonneg, "gain_kappa >= 0")),
        "gain_width": (float, 1.0, (_pos, "gain_width > 0")),
        "beta0": (float, 0.0, (_prob, "0 <= beta0 <= 1")),
        "beta_mode": (str, "constant", (lambda v: v in {m.value for m in BetaMode},
                                        "constant or lorentzian")),
        "beta_width": (float, 1.0, (_pos, "beta_width > 0")),
        "delta_emit": (float, 0.0, None),
    },
    "run": {
        "n_photons": (int, 10_000, (_nonneg, "n_photons >= 0")),
        "max_order": (int, 400, (_nonneg, "max_order >= 0")),
        "w_min": (float, 1e-4, (_nonneg, "w_min >= 0")),
        "roulette_survive": (float, 0.1, (_open_prob, "0 < roulette_survive < 1")),
        "detector_cone_half_angle": (float, 0.1, (lambda v: 0 <= v <= math.pi,
                                                  "0 <= detector_cone_half_angle <= pi")),
        "phase_function": (str, "dipole", (lambda v: v in {p.value for p in PhaseFunction},
                                           "isotropic or dipole")),
        "seed": (int, 1, (_seed, "0 <= seed < 2**64")),
        "source": (str, "center_point_dipole", (lambda v: v in {s.value for s in Source},
                                                "center_point_dipole, channel_raman or external_pencil")),
        "n_theta_bins": (int, 36, (_pos, "n_theta_bins > 0")),
        "n_order_buckets": (int, 10, (_pos, "n_order_buckets > 0")),
    },
    "scan": {
        "delta_c_min": (float, -10.0, None),
        "delta_c_max": (float, 10.0, None),
        "delta_c_points": (int, 21, (_pos, "delta_c_points > 0")),
        "b0_values": (list, [1.0, 5.0, 10.0, 15.0, 20.0], (lambda v: len(v) > 0 and all(x >= 0 for x in v),
                                                           "nonempty list of b0 >= 0")),
        "observation_angle_deg": (float, 45.0, (lambda v: 0 <= v <= 180, "0 <= angle <= 180")),
        "observation_half_width_deg": (float, 10.0, (_pos, "half width > 0")),
        "param": (str, "pump_rabi", (lambda v: v in {p.value for p in ScanParam},
                                     "pump_rabi, gain_g0 or cloud_radius")),
        "lo": (float, 0.0, None),
        "hi": (float, 100.0, None),
        "tol": (float, 0.05, (_pos, "tol > 0")),
        "extrapolation": (bool, False, None),
        "min_count": (int, 100, (_pos, "min_count > 0")),
    },
}

FIG5_COMMON = {
    "fail_on_divergence": False,
    "medium": {"channel_radius_fraction": 0.1},
    "spectral": {"rabi_2v": 30.0, "gain_kappa": 1e-4, "gain_width": 1.0},
    "run": {"source": "center_point_dipole", "phase_function": "dipole",
            "n_photons": 40_000, "max_order": 1500},
    "scan": {"param": "pump_rabi", "lo": 0.0, "hi": 120.0, "min_count": 100},
}

PRESETS: dict[str, dict] = {
    "fig5-b30": {**FIG5_COMMON, "medium": {**FIG5_COMMON["medium"], "b0": 30.0}},
    "fig5-b50": {**FIG5_COMMON, "medium": {**FIG5_COMMON["medium"], "b0": 50.0},
                 "run": {**FIG5_COMMON["run"], "n_photons": 60_000}},
    "fig3-scan": {
        "experiment": "scan_spectrum",
        "medium": {"b0": 10.0, "overlap_gain": True},
        "spectral": {"rabi_2v": 30.0, "gain_kappa": 0.01 / 900.0, "gain_width": 2.0,
                     "beta0": 0.02, "beta_mode": "lorentzian", "beta_width": 2.0},
        "run": {"n_photons": 20_000, "phase_function": "dipole"},
        "scan": {"delta_c_min": -10.0, "delta_c_max": 10.0, "delta_c_points": 21,
                 "b0_values": [1.0, 5.0, 10.0, 15.0, 20.0], "observation_angle_deg": 45.0},
    },
    "letokhov-validate": {
        "experiment": "scan_threshold",
        "medium": {"b0": 40.0, "overlap_gain": True},
        "spectral": {"rabi_2v": 30.0, "gain_kappa": 0.005 / 900.0},
        "run": {"n_photons": 100_000, "phase_function": "isotropic", "max_order": 400},
        "scan": {"param": "gain_g0", "lo": 0.002, "hi": 0.02, "tol": 0.05, "extrapolation": True},
    },
}

# preset values picked by calibration rather than taken from measurements
ARTIFACT_DEFAULTS: dict[str, tuple[str, ...]] = {
    "fig5-b30": ("medium.channel_radius_fraction", "spectral.gain_kappa", "spectral.gain_width",
                 "run.n_photons", "run.max_order", "scan.lo", "scan.hi"),
    "fig5-b50": ("medium.channel_radius_fraction", "spectral.gain_kappa", "spectral.gain_width",
                 "run.n_photons", "run.max_order", "scan.lo", "scan.hi"),
    "fig3-scan": ("medium.overlap_gain", "spectral.rabi_2v", "spectral.gain_kappa",
                  "spectral.gain_width", "spectral.beta0", "spectral.beta_mode",
                  "spectral.beta_width", "scan.delta_c_min", "scan.delta_c_max",
                  "scan.delta_c_points", "run.n_photons"),
    "letokhov-validate": ("spectral.rabi_2v", "spectral.gain_kappa", "run.n_photons",
                          "scan.lo", "scan.hi"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "simulate"
    output_dir: str = "out"
    preset: str = ""
    fail_on_divergence: bool = True
    medium: dict = field(default_factory=dict)
    spectral: SpectralModel = SpectralModel()
    run: RunConfig = RunConfig()
    scan: dict = field(default_factory=dict)

    def build_medium(self) -> Medium:
        m = self.medium
        shape = CloudShape(m["shape"])
        if m["b0"] is not None:
            cloud = cloud_for_b0(m["b0"], shape, m["n0"], self.spectral.sigma0, m["cutoff_factor"])
        elif shape is CloudShape.UNIFORM_SPHERE:
            cloud = CloudGeometry(shape, radius=m["radius"], n0=m["n0"])
        else:
            cloud = CloudGeometry(shape, sigma_r=m["sigma_r"],
                                  cutoff=m["cutoff_factor"] * m["sigma_r"], n0=m["n0"])
        size = cloud.sigma_r if cloud.gaussian else cloud.radius
        if m["channel_radius_fraction"] is not None:
            rho = m["channel_radius_fraction"] * size
        else:
            rho = m["channel_radius"] or 0.0
        return Medium(cloud, ChannelGeometry(rho), m["trap_fraction"], m["overlap_gain"])

    def scenario(self) -> Scenario:
        return Scenario(self.build_medium(), self.spectral, self.run)

    def delta_c_grid(self) -> np.ndarray:
        s = self.scan
        return np.linspace(s["delta_c_min"], s["delta_c_max"], s["delta_c_points"])

    def echo(self) -> dict:
        """Resolved parameters; feeding this mapping back reproduces the run."""
        medium = self.build_medium()
        out = {
            "experiment": self.experiment,
            "output_dir": self.output_dir,
            "preset": self.preset,
            "fail_on_divergence": self.fail_on_divergence,
            "medium": dict(self.medium),
            "spectral": {k: _plain(getattr(self.spectral, k)) for k in SCHEMA["spectral"]},
            "run": {k: _plain(getattr(self.run, k)) for k in SCHEMA["run"]},
            "scan": dict(self.scan),
            "derived": {
                "b0": medium.b0(self.spectral),
                "radius": medium.cloud.radius if not medium.cloud.gaussian else None,
                "sigma_r": medium.cloud.sigma_r if medium.cloud.gaussian else None,
                "cloud_bound": medium.cloud.bound,
                "channel_radius": medium.channel_radius,
            },
            "artifact_defaults": list(ARTIFACT_DEFAULTS.get(self.preset, ())),
        }
        return out


def _plain(v):
    return v.value if hasattr(v, "value") else v


def _coerce(path: str, typ, value):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {type(value).__name__}")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {type(value).__name__}")
        return value
    if typ is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {type(value).__name__}")
        return [_coerce(f"{path}[{i}]", float, v) for i, v in enumerate(value)]
    if not isinstance(value, typ):
        raise ConfigError(f"{path}: expected {typ.__name__}, got {type(value).__name__}")
    return value


def _deep_merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


_EXCLUSIVE = (("b0", "radius", "sigma_r"), ("channel_radius", "channel_radius_fraction"))


def _yield_to(preset: dict, data: dict) -> dict:
    """Drop preset medium keys that the user replaces with a mutually exclusive one."""
    user = data.get("medium")
    if not isinstance(user, dict):
        return preset
    med = dict(preset.get("medium", {}))
    for group in _EXCLUSIVE:
        if any(user.get(k) is not None for k in group):
            for k in group:
                med.pop(k, None)
    return {**preset, "medium": med}


def _resolve_section(name: str, raw: dict) -> dict:
    schema = SCHEMA[name]
    for key in raw:
        if key not in schema:
            where = f"{name}.{key}" if name else key
            raise ConfigError(f"{where}: unknown key")
    out = {}
    for key, (typ, default, check) in schema.items():
        path = f"{name}.{key}" if name else key
        if key in raw and raw[key] is not None:
            value = _coerce(path, typ, raw[key])
            if check is not None and not check[0](value):
                raise ConfigError(f"{path}: violates constraint {check[1]}")
        else:
            value = default
        out[key] = value
    return out


def config_from_mapping(data: dict, preset: str | None = None) -> ExperimentConfig:
    """Validate a (possibly partial) mapping, apply preset and defaults."""
    data = {k: v for k, v in data.items() if k not in INFO_KEYS}
    preset = preset or data.get("preset") or ""
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {preset!r}; have {sorted(PRESETS)}")
        data = _deep_merge(_yield_to(PRESETS[preset], data), data)
        data["preset"] = preset
    for key, value in data.items():
        if key in SCHEMA and key and not isinstance(value, dict):
            raise ConfigError(f"{key}: expected a table")
    top = _resolve_section("", {k: v for k, v in data.items() if k not in SCHEMA or k == ""})
    sections = {name: _resolve_section(name, data.get(name, {}))
                for name in ("medium", "spectral", "run", "scan")}

    med = sections["medium"]
    given = [k for k in ("b0", "radius", "sigma_r") if med[k] is not None]
    if len(given) > 1:
        raise ConfigError(f"medium: {' and '.join(given)} are mutually exclusive")
    if not given:
        med["b0"] = 10.0
    if med["shape"] == "gaussian" and med["radius"] is not None:
        raise ConfigError("medium.radius: use sigma_r for a gaussian cloud")
    if med["shape"] == "uniform_sphere" and med["sigma_r"] is not None:
        raise ConfigError("medium.sigma_r: only valid for a gaussian cloud")
    if med["shape"] == "gaussian" and med["b0"] is not None and med["b0"] <= 0:
        raise ConfigError("medium.b0: a gaussian cloud needs b0 > 0")
    if med["channel_radius"] is not None and med["channel_radius_fraction"] is not None:
        raise ConfigError("medium: channel_radius and channel_radius_fraction are mutually exclusive")

    try:
        spectral = SpectralModel(**sections["spectral"])
        run = RunConfig(**sections["run"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    cfg = ExperimentConfig(top["experiment"], top["output_dir"], top["preset"],
                           top["fail_on_divergence"], med, spectral, run, sections["scan"])
    try:
        medium = cfg.build_medium()
    except ValueError as exc:
        raise ConfigError(f"medium: {exc}") from None
    if run.source is Source.CHANNEL_RAMAN and not medium.channel_radius > 0:
        raise ConfigError("run.source: channel_raman needs medium.channel_radius > 0 or overlap_gain")
    sc = cfg.scan
    if sc["delta_c_max"] < sc["delta_c_min"]:
        raise ConfigError("scan.delta_c_max: must be >= scan.delta_c_min")
    if not sc["lo"] < sc["hi"]:
        raise ConfigError("scan.hi: must be > scan.lo")
    return cfg


def parse_config(text: str, preset: str | None = None) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from None
    return config_from_mapping(data, preset)


def with_overrides(cfg: ExperimentConfig, *, seed: int | None = None, photons: int | None = None,
                   output_dir: str | None = None, experiment: str | None = None) -> ExperimentConfig:
    run = cfg.run
    try:
        if seed is not None:
            run = replace(run, seed=seed)
        if photons is not None:
            run = replace(run, n_photons=photons)
    except ValueError as exc:
        raise ConfigError(f"run: {exc}") from None
    return replace(cfg, run=run,
                   output_dir=output_dir if output_dir is not None else cfg.output_dir,
                   experiment=experiment or cfg.experiment)


def to_toml(echo: dict) -> str:
    """Minimal TOML writer for the flat resolved echo (tables of scalars/lists)."""
    lines = []

    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            if math.isinf(v):
                return "inf" if v > 0 else "-inf"
            return repr(v)
        if isinstance(v, int):
            return str(v)
        if isinstance(v, list):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'

    tables = {k: v for k, v in echo.items() if isinstance(v, dict)}
    for k, v in echo.items():
        if not isinstance(v, dict) and v is not None and k not in INFO_KEYS:
            lines.append(f"{k} = {fmt(v)}")
    for name, table in tables.items():
        if name in INFO_KEYS:
            continue
        lines.append("")
        lines.append(f"[{name}]")
        for k, v in table.items():
            if v is not None:
                lines.append(f"{k} = {fmt(v)}")
    return "\n".join(lines) + "\n"


__all__ = ["ConfigError", "ExperimentConfig", "PRESETS", "parse_config", "config_from_mapping",
           "with_overrides", "to_toml", "b0_of"]
