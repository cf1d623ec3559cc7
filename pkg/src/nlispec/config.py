"""Run configuration: one INI file describes a complete simulated run.

Sections and keys are validated strictly: unknown sections, unknown
keys, missing required keys and unparseable values all raise
ConfigError naming the offending path.  Keys carry their unit in the
name, so a config file can be read without consulting the docs.

The [gas] section's `lines` (and [crystal] `coefficients`) accept
either a filesystem path or the bare name of a file shipped with the
package.  `axis_angle_deg = auto` solves the collinear phase-matching
condition at the centre of the signal axis instead of using a fixed
pump angle.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass

import numpy as np

from .dispersion import GasIndexModel, load_uniaxial_crystal
from .errors import ConfigError
from .gas import GasState, nu_cm_from_lambda_nm
from .interferometer import (
    InterferometerGeometry,
    MapAxes,
    collinear_phase_matching_angle,
    detector_angle_axis,
    idler_wavelength_nm,
)
from .lineshape import doppler_hwhm, load_line_csv, load_par_file, lorentz_hwhm
from .resources import data_path

_SCHEMA = {
    "crystal": {
        "required": {"coefficients", "cut_angle_deg"},
        "optional": set(),
    },
    "pump": {
        "required": {"wavelength_nm"},
        "optional": {"axis_angle_deg"},
    },
    "geometry": {
        "required": {"crystal_length_mm", "gap_length_mm"},
        "optional": {"aperture_mm"},
    },
    "signal_axis": {
        "required": {"min_nm", "max_nm", "samples"},
        "optional": set(),
    },
    "angle_axis": {
        "required": set(),
        "optional": {"pixels", "pixel_pitch_um", "focal_length_mm",
                     "min_mrad", "max_mrad", "samples"},
    },
    "gas": {
        "required": {"lines", "molar_mass_g_mol", "pressure_torr",
                     "temperature_k"},
        "optional": {"self_fraction", "wing_cutoff_cm", "partition_ratio",
                     "visible_n0", "visible_p0_torr", "visible_t0_k",
                     "grid_step_cm", "grid_pad_cm", "molecule_id",
                     "isotopologue_id"},
    },
    "noise": {
        "required": set(),
        "optional": {"sigma_rel", "seed"},
    },
}

_DETECTOR_KEYS = {"pixels", "pixel_pitch_um", "focal_length_mm"}
_SPAN_KEYS = {"min_mrad", "max_mrad", "samples"}


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of a run configuration file."""

    crystal_path: str
    cut_angle_rad: float
    pump_wavelength_nm: float
    pump_axis_angle_rad: float | None  # None: solve at the axis centre
    crystal_length_cm: float
    gap_length_cm: float
    aperture_cm: float | None
    signal_min_nm: float
    signal_max_nm: float
    signal_samples: int
    angle_axis_rad: np.ndarray
    lines_path: str
    molecule_id: int | None
    isotopologue_id: int | None
    molar_mass_g_mol: float
    pressure_torr: float
    temperature_k: float
    self_fraction: float
    wing_cutoff_cm: float
    partition_ratio: float
    visible: GasIndexModel | None
    grid_step_cm: float | None
    grid_pad_cm: float
    noise_sigma_rel: float
    noise_seed: int


def _resolve_data(name: str, where: str) -> str:
    if os.path.exists(name):
        return name
    shipped = data_path(os.path.basename(name))
    if os.path.basename(name) == name and os.path.exists(shipped):
        return shipped
    raise ConfigError(f"file not found: {name}", key=where)


def _get(section, key, where, convert=float, default=None, required=True):
    if key not in section:
        if required:
            raise ConfigError("missing required key", key=f"{where}.{key}")
        return default
    raw = section[key].strip()
    try:
        return convert(raw)
    except ValueError:
        raise ConfigError(f"cannot parse value {raw!r}",
                          key=f"{where}.{key}") from None


def _positive(value, where):
    if value is None or value <= 0:
        raise ConfigError(f"must be positive, got {value}", key=where)
    return value


def load_run_config(path) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh, source=str(path))
    except FileNotFoundError:
        raise
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config: {exc}", key=str(path))

    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", key=str(path))
        allowed = _SCHEMA[section]["required"] | _SCHEMA[section]["optional"]
        for key in cp[section]:
            if key not in allowed:
                raise ConfigError("unknown key", key=f"{path}:[{section}].{key}")
    for section, spec in _SCHEMA.items():
        if spec["required"] and not cp.has_section(section):
            raise ConfigError(f"missing section [{section}]", key=str(path))
        for key in spec["required"]:
            if key not in cp[section]:
                raise ConfigError("missing required key",
                                  key=f"{path}:[{section}].{key}")

    crystal = cp["crystal"]
    pump = cp["pump"]
    geometry = cp["geometry"]
    signal = cp["signal_axis"]
    gas = cp["gas"]

    angle_raw = pump.get("axis_angle_deg", "auto").strip().lower()
    if angle_raw == "auto":
        pump_angle = None
    else:
        pump_angle = math.radians(
            _get(pump, "axis_angle_deg", f"{path}:[pump]")
        )

    angle_axis = _angle_axis(cp, path)

    lo = _positive(_get(signal, "min_nm", f"{path}:[signal_axis]"),
                   f"{path}:[signal_axis].min_nm")
    hi = _positive(_get(signal, "max_nm", f"{path}:[signal_axis]"),
                   f"{path}:[signal_axis].max_nm")
    if hi <= lo:
        raise ConfigError("max_nm must exceed min_nm",
                          key=f"{path}:[signal_axis]")
    samples = _get(signal, "samples", f"{path}:[signal_axis]", convert=int)
    if samples < 2:
        raise ConfigError("need at least 2 samples",
                          key=f"{path}:[signal_axis].samples")

    n0 = _get(gas, "visible_n0", f"{path}:[gas]", required=False)
    visible = None
    if n0 is not None:
        visible = GasIndexModel(
            n0=n0,
            p0_torr=_get(gas, "visible_p0_torr", f"{path}:[gas]",
                         default=760.0, required=False),
            t0_k=_get(gas, "visible_t0_k", f"{path}:[gas]",
                      default=273.15, required=False),
        )

    noise = cp["noise"] if cp.has_section("noise") else {}
    sigma_rel = _get(noise, "sigma_rel", f"{path}:[noise]", default=0.0,
                     required=False) if noise else 0.0
    seed = _get(noise, "seed", f"{path}:[noise]", convert=int, default=0,
                required=False) if noise else 0
    if sigma_rel < 0:
        raise ConfigError("negative noise level", key=f"{path}:[noise].sigma_rel")

    return RunConfig(
        crystal_path=_resolve_data(crystal["coefficients"].strip(),
                                   f"{path}:[crystal].coefficients"),
        cut_angle_rad=math.radians(
            _positive(_get(crystal, "cut_angle_deg", f"{path}:[crystal]"),
                      f"{path}:[crystal].cut_angle_deg")),
        pump_wavelength_nm=_positive(
            _get(pump, "wavelength_nm", f"{path}:[pump]"),
            f"{path}:[pump].wavelength_nm"),
        pump_axis_angle_rad=pump_angle,
        crystal_length_cm=0.1 * _positive(
            _get(geometry, "crystal_length_mm", f"{path}:[geometry]"),
            f"{path}:[geometry].crystal_length_mm"),
        gap_length_cm=0.1 * _positive(
            _get(geometry, "gap_length_mm", f"{path}:[geometry]"),
            f"{path}:[geometry].gap_length_mm"),
        aperture_cm=(0.1 * _positive(
            _get(geometry, "aperture_mm", f"{path}:[geometry]",
                 required=False), f"{path}:[geometry].aperture_mm")
            if "aperture_mm" in geometry else None),
        signal_min_nm=lo, signal_max_nm=hi, signal_samples=samples,
        angle_axis_rad=angle_axis,
        lines_path=_resolve_data(gas["lines"].strip(), f"{path}:[gas].lines"),
        molecule_id=_get(gas, "molecule_id", f"{path}:[gas]", convert=int,
                         required=False),
        isotopologue_id=_get(gas, "isotopologue_id", f"{path}:[gas]",
                             convert=int, required=False),
        molar_mass_g_mol=_positive(
            _get(gas, "molar_mass_g_mol", f"{path}:[gas]"),
            f"{path}:[gas].molar_mass_g_mol"),
        pressure_torr=_get(gas, "pressure_torr", f"{path}:[gas]"),
        temperature_k=_positive(_get(gas, "temperature_k", f"{path}:[gas]"),
                                f"{path}:[gas].temperature_k"),
        self_fraction=_get(gas, "self_fraction", f"{path}:[gas]", default=1.0,
                           required=False),
        wing_cutoff_cm=_get(gas, "wing_cutoff_cm", f"{path}:[gas]",
                            default=25.0, required=False),
        partition_ratio=_get(gas, "partition_ratio", f"{path}:[gas]",
                             default=1.0, required=False),
        visible=visible,
        grid_step_cm=_get(gas, "grid_step_cm", f"{path}:[gas]",
                          required=False),
        grid_pad_cm=_get(gas, "grid_pad_cm", f"{path}:[gas]", default=30.0,
                         required=False),
        noise_sigma_rel=sigma_rel,
        noise_seed=seed,
    )


def _angle_axis(cp, path) -> np.ndarray:
    if not cp.has_section("angle_axis"):
        raise ConfigError("missing section [angle_axis]", key=str(path))
    section = cp["angle_axis"]
    keys = set(section.keys())
    where = f"{path}:[angle_axis]"
    if keys == _DETECTOR_KEYS:
        return detector_angle_axis(
            _get(section, "pixels", where, convert=int),
            _positive(_get(section, "pixel_pitch_um", where),
                      f"{where}.pixel_pitch_um"),
            _positive(_get(section, "focal_length_mm", where),
                      f"{where}.focal_length_mm"),
        )
    if keys == _SPAN_KEYS:
        lo = _get(section, "min_mrad", where) * 1e-3
        hi = _get(section, "max_mrad", where) * 1e-3
        n = _get(section, "samples", where, convert=int)
        if hi <= lo:
            raise ConfigError("max_mrad must exceed min_mrad", key=where)
        if n < 2:
            raise ConfigError("need at least 2 samples", key=f"{where}.samples")
        return np.linspace(lo, hi, n)
    raise ConfigError(
        "give either {pixels, pixel_pitch_um, focal_length_mm} or "
        "{min_mrad, max_mrad, samples}", key=where)


# ------------------------------------------------------------ builders

def build_axes(cfg: RunConfig) -> MapAxes:
    return MapAxes(
        np.linspace(cfg.signal_min_nm, cfg.signal_max_nm, cfg.signal_samples),
        cfg.angle_axis_rad,
    )


def build_geometry(cfg: RunConfig) -> InterferometerGeometry:
    crystal = load_uniaxial_crystal(cfg.crystal_path, cfg.cut_angle_rad)
    angle = cfg.pump_axis_angle_rad
    if angle is None:
        centre = 0.5 * (cfg.signal_min_nm + cfg.signal_max_nm)
        angle = collinear_phase_matching_angle(
            crystal, cfg.pump_wavelength_nm, centre)
    return InterferometerGeometry(
        crystal=crystal,
        crystal_length_cm=cfg.crystal_length_cm,
        gap_length_cm=cfg.gap_length_cm,
        pump_wavelength_nm=cfg.pump_wavelength_nm,
        pump_axis_angle_rad=angle,
        aperture_cm=cfg.aperture_cm,
    )


def load_lines(cfg: RunConfig):
    if cfg.lines_path.endswith(".par"):
        return load_par_file(cfg.lines_path, molecule=cfg.molecule_id,
                             isotopologue=cfg.isotopologue_id)
    return load_line_csv(cfg.lines_path)


def gas_grid(cfg: RunConfig, lines) -> np.ndarray:
    """Uniform idler wavenumber grid covering the map plus padding."""
    lam_i_edges = idler_wavelength_nm(
        cfg.pump_wavelength_nm,
        np.array([cfg.signal_min_nm, cfg.signal_max_nm]))
    nu_edges = nu_cm_from_lambda_nm(lam_i_edges)
    lo = nu_edges.min() - cfg.grid_pad_cm
    hi = nu_edges.max() + cfg.grid_pad_cm
    step = cfg.grid_step_cm
    if step is None:
        widths = [max(doppler_hwhm(ln.nu0_cm, cfg.temperature_k,
                                   cfg.molar_mass_g_mol),
                      lorentz_hwhm(ln, cfg.pressure_torr, cfg.temperature_k,
                                   cfg.self_fraction)) for ln in lines]
        step = min(widths) / 8.0
    npts = int(math.ceil((hi - lo) / step)) + 1
    if npts > 200001:
        raise ConfigError(
            f"idler grid would need {npts} points; set a coarser grid_step_cm",
            key="[gas].grid_step_cm")
    return np.linspace(lo, hi, npts)


def build_gas(cfg: RunConfig) -> GasState:
    lines = load_lines(cfg)
    return GasState.from_lines(
        lines, cfg.pressure_torr, cfg.temperature_k, cfg.molar_mass_g_mol,
        visible=cfg.visible, nu_grid_cm=gas_grid(cfg, lines),
        x_self=cfg.self_fraction, wing_cutoff_cm=cfg.wing_cutoff_cm,
        partition_ratio=cfg.partition_ratio,
        label=os.path.basename(cfg.lines_path),
    )


def build_vacuum(cfg: RunConfig) -> GasState:
    return GasState.vacuum(t_k=cfg.temperature_k)
