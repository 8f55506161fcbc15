"""TOML run configuration: parsing, defaults, and echoing.

A config file selects a scenario preset and overrides any subset of its
keys, section by section. Every key left to its default is reported in
a provenance log so a run's effective settings are always on record.
The echo of a parsed config re-parses to an equal ScenarioConfig, which
makes the emitted text a faithful experiment record.
"""

import logging
import math
from dataclasses import replace

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .driver import (
    FORCE_KINDS,
    VELOCITY_KINDS,
    ScenarioConfig,
    scenario_test1,
    scenario_test2,
    scenario_test3,
)
from .geometry import GeometryParams
from .materials import MaterialModel
from .stepping import StabilizationParams

LOG = logging.getLogger("rfasim.config")

_PRESETS = {
    "test1": scenario_test1,
    "test2": scenario_test2,
    "test3": scenario_test3,
}

_GEOMETRY_KEYS = ("length", "height", "electrode_radius", "tissue_depth",
                  "h_target", "n_arc")
_MATERIAL_KEYS = ("sigma0", "eta0", "theta_bar", "nu0", "k_nu",
                  "capacity_blood", "capacity_tissue")
_STAB_KEYS = ("alpha", "beta", "c_r", "enabled")
_POSITIVE = {
    "geometry.length", "geometry.height", "geometry.electrode_radius",
    "geometry.tissue_depth", "geometry.h_target",
    "material.sigma0", "material.eta0", "material.nu0",
    "material.capacity_blood", "material.capacity_tissue",
    "stabilization.beta", "stabilization.c_r",
    "time.t_final", "time.tau",
    "force.boussinesq_k",
}


class ConfigError(ValueError):
    """Bad config text: syntax, unknown key, or constraint violation."""


def _note(notes, line):
    LOG.info("%s", line)
    if notes is not None:
        notes.append(line)


def _unknown(path, strict, notes):
    if strict:
        raise ConfigError(f"unknown key {path}")
    _note(notes, f"ignored unknown key {path}")


def _number(path, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path} must be finite")
    if path in _POSITIVE and value <= 0.0:
        key = path.split(".", 1)[1]
        raise ConfigError(f"{key} must be > 0")
    return value


def _integer(path, value, minimum):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path} must be an integer")
    if value < minimum:
        raise ConfigError(f"{path} must be at least {minimum}")
    return value


def _string(path, value, choices=None):
    if not isinstance(value, str):
        raise ConfigError(f"{path} must be a string")
    if choices is not None and value not in choices:
        raise ConfigError(f"{path} must be one of {', '.join(choices)}")
    return value


def _table(doc, name):
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be a table")
    return raw


def _fill(section, raw, keys, base, coerce, strict, notes):
    """Merge one section over its preset defaults."""
    kwargs = {}
    for key, value in raw.items():
        if key not in keys:
            _unknown(f"{section}.{key}", strict, notes)
    for key in keys:
        if key in raw:
            kwargs[key] = coerce(f"{section}.{key}", key, raw[key])
        else:
            kwargs[key] = getattr(base, key)
            _note(notes, f"{section}.{key} = {kwargs[key]!r} (default)")
    return kwargs


def _tag_table(section, raw):
    out = {}
    for key, value in raw.items():
        try:
            tag = int(key)
        except ValueError:
            tag = -1
        if not 1 <= tag <= 8:
            raise ConfigError(f"{section} keys must be boundary tags 1..8, "
                              f"got {key!r}")
        out[tag] = value
    return out


def parse_config(text, strict=False, notes=None):
    """Parse TOML text into a validated ScenarioConfig.

    Absent keys fall back to the selected scenario preset (test1 when no
    ``scenario`` key is given); each applied default is logged and, when
    a list is passed as ``notes``, appended to it. In strict mode any
    unknown key is an error; otherwise it is logged and skipped.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax: {exc}") from exc

    known_sections = {"scenario", "geometry", "material", "stabilization",
                      "time", "boundary", "force", "output", "solver"}
    for key in doc:
        if key not in known_sections:
            _unknown(key, strict, notes)

    name = _string("scenario", doc.get("scenario", "test1"),
                   choices=tuple(_PRESETS) + ("custom",))
    if "scenario" not in doc:
        _note(notes, "scenario = 'test1' (default)")
    base = _PRESETS.get(name, scenario_test1)()

    def num(path, key, value):
        return _number(path, value)

    geometry_raw = _table(doc, "geometry")

    def geo(path, key, value):
        if key == "n_arc":
            return _integer(path, value, 1)
        return _number(path, value)

    try:
        geometry = GeometryParams(**_fill("geometry", geometry_raw,
                                          _GEOMETRY_KEYS, base.geometry,
                                          geo, strict, notes))
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from exc

    try:
        material = MaterialModel(**_fill("material", _table(doc, "material"),
                                         _MATERIAL_KEYS, base.material,
                                         num, strict, notes))
    except ValueError as exc:
        raise ConfigError(f"material: {exc}") from exc

    def stab_value(path, key, value):
        if key == "enabled":
            if not isinstance(value, bool):
                raise ConfigError(f"{path} must be true or false")
            return value
        return _number(path, value)

    try:
        stab = StabilizationParams(**_fill(
            "stabilization", _table(doc, "stabilization"), _STAB_KEYS,
            base.stab, stab_value, strict, notes))
    except ValueError as exc:
        raise ConfigError(f"stabilization: {exc}") from exc

    time_raw = _table(doc, "time")
    timing = _fill("time", time_raw, ("t_final", "tau"),
                   base, num, strict, notes)

    boundary_raw = _table(doc, "boundary")
    for key in boundary_raw:
        if key not in ("phi_electrode", "velocity", "heat"):
            _unknown(f"boundary.{key}", strict, notes)
    if "phi_electrode" in boundary_raw:
        phi_electrode = _number("boundary.phi_electrode",
                                boundary_raw["phi_electrode"])
    else:
        phi_electrode = base.phi_electrode
        _note(notes, f"boundary.phi_electrode = {phi_electrode!r} (default)")

    bc_velocity = dict(base.bc_velocity)
    if "velocity" in boundary_raw:
        raw = _tag_table("boundary.velocity", _table(boundary_raw, "velocity"))
        for tag, kind in raw.items():
            bc_velocity[tag] = _string(f"boundary.velocity.{tag}", kind,
                                       choices=VELOCITY_KINDS)
    else:
        _note(notes, f"boundary.velocity = {bc_velocity!r} (default)")

    bc_heat = dict(base.bc_heat)
    if "heat" in boundary_raw:
        raw = _tag_table("boundary.heat", _table(boundary_raw, "heat"))
        for tag, value in raw.items():
            bc_heat[tag] = _number(f"boundary.heat.{tag}", value)
    else:
        _note(notes, f"boundary.heat = {bc_heat!r} (default)")

    force_raw = _table(doc, "force")
    for key in force_raw:
        if key not in ("kind", "boussinesq_k"):
            _unknown(f"force.{key}", strict, notes)
    if "kind" in force_raw:
        force = _string("force.kind", force_raw["kind"], choices=FORCE_KINDS)
    else:
        force = base.force
        _note(notes, f"force.kind = {force!r} (default)")
    if "boussinesq_k" in force_raw:
        boussinesq_k = _number("force.boussinesq_k", force_raw["boussinesq_k"])
    else:
        boussinesq_k = base.boussinesq_k
        _note(notes, f"force.boussinesq_k = {boussinesq_k!r} (default)")

    output_raw = _table(doc, "output")
    for key in output_raw:
        if key not in ("directory", "every", "probes"):
            _unknown(f"output.{key}", strict, notes)
    if "directory" in output_raw:
        output_dir = _string("output.directory", output_raw["directory"])
    else:
        output_dir = base.output_dir
        _note(notes, "output.directory unset (default: no files written)")
    if "every" in output_raw:
        output_every = _integer("output.every", output_raw["every"], 1)
    else:
        output_every = base.output_every
        _note(notes, f"output.every = {output_every} (default)")
    if "probes" in output_raw:
        raw = output_raw["probes"]
        if not isinstance(raw, list):
            raise ConfigError("output.probes must be a list of [x, y] pairs")
        probes = []
        for item in raw:
            if not isinstance(item, list) or len(item) != 2:
                raise ConfigError(
                    "output.probes must be a list of [x, y] pairs")
            probes.append((_number("output.probes", item[0]),
                           _number("output.probes", item[1])))
        probes = tuple(probes)
    else:
        probes = base.probes
        _note(notes, f"output.probes = {probes!r} (default)")

    solver_raw = _table(doc, "solver")
    for key in solver_raw:
        if key not in ("threads",):
            _unknown(f"solver.{key}", strict, notes)
    if "threads" in solver_raw:
        _integer("solver.threads", solver_raw["threads"], 1)
    else:
        _note(notes, "solver.threads = 1 (default)")

    try:
        return replace(
            base, geometry=geometry, material=material, stab=stab,
            t_final=timing["t_final"], tau=timing["tau"],
            phi_electrode=phi_electrode, bc_velocity=bc_velocity,
            bc_heat=bc_heat, force=force, boussinesq_k=boussinesq_k,
            probes=probes, output_dir=output_dir, output_every=output_every,
            name=name,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def solver_threads(text):
    """Return solver.threads from config text, or None when absent."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    raw = doc.get("solver", {})
    if not isinstance(raw, dict) or "threads" not in raw:
        return None
    return _integer("solver.threads", raw["threads"], 1)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def echo_config(config, threads=None):
    """Emit the full effective configuration as TOML text.

    Parsing the returned text yields a ScenarioConfig equal to the one
    passed in.
    """
    lines = [f"scenario = {_fmt(config.name)}", ""]
    lines.append("[geometry]")
    for key in _GEOMETRY_KEYS:
        lines.append(f"{key} = {_fmt(getattr(config.geometry, key))}")
    lines.append("")
    lines.append("[material]")
    for key in _MATERIAL_KEYS:
        lines.append(f"{key} = {_fmt(getattr(config.material, key))}")
    lines.append("")
    lines.append("[stabilization]")
    for key in _STAB_KEYS:
        lines.append(f"{key} = {_fmt(getattr(config.stab, key))}")
    lines.append("")
    lines.append("[time]")
    lines.append(f"t_final = {_fmt(config.t_final)}")
    lines.append(f"tau = {_fmt(config.tau)}")
    lines.append("")
    lines.append("[boundary]")
    lines.append(f"phi_electrode = {_fmt(config.phi_electrode)}")
    lines.append("")
    lines.append("[boundary.velocity]")
    for tag in sorted(config.bc_velocity):
        lines.append(f"{tag} = {_fmt(config.bc_velocity[tag])}")
    lines.append("")
    lines.append("[boundary.heat]")
    for tag in sorted(config.bc_heat):
        lines.append(f"{tag} = {_fmt(float(config.bc_heat[tag]))}")
    lines.append("")
    lines.append("[force]")
    lines.append(f"kind = {_fmt(config.force)}")
    lines.append(f"boussinesq_k = {_fmt(config.boussinesq_k)}")
    lines.append("")
    lines.append("[output]")
    if config.output_dir is not None:
        lines.append(f"directory = {_fmt(config.output_dir)}")
    lines.append(f"every = {_fmt(config.output_every)}")
    pairs = ", ".join(f"[{_fmt(float(x))}, {_fmt(float(y))}]"
                      for x, y in config.probes)
    lines.append(f"probes = [{pairs}]")
    if threads is not None:
        lines.append("")
        lines.append("[solver]")
        lines.append(f"threads = {_fmt(int(threads))}")
    return "\n".join(lines) + "\n"
