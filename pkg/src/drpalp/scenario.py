"""Scenario files: TOML experiment definitions resolved into model objects.

A scenario holds shared sections (``phantom``, ``tip``, ``trajectory``,
``sensor``, ``estimator``, ``fit``, ``scan``, ``analysis``, ``output``) and
an optional ``[[cases]]`` list.  Each case is a table of overrides merged
over the shared sections; every case becomes one row of the output
tables.  All values are SI.  Repetition ``i`` uses seed ``seed + i``.
"""

from __future__ import annotations

import copy
import dataclasses
import math
import sys
from dataclasses import dataclass

from .contact import Flat, PowerLaw, Sphere
from .errors import ConfigError, DomainError
from .filters import FadingConfig, FilterConfig, Variant
from .offline import Model
from .phantom import PRESETS, preset
from .sim import LoadCycle, QuasiStaticRamp, SensorModel, SinusoidPoint, SinusoidScan

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCENARIO_SCHEMA = 1

_SECTIONS = {
    "phantom": {"preset", "surface_z"},
    "tip": {"shape", "radius", "half_width", "n", "c_n", "mass"},
    "trajectory": {"kind", "speed", "max_depth", "approach", "x", "y", "z0", "z_a", "omega", "duration",
                   "dwell", "scan_speed", "scan_length", "direction", "start", "dt", "descend"},
    "sensor": {"sigma_force", "sigma_vel_sq", "force_rate", "robot_rate", "inertial_load"},
    "estimator": {"variants", "dt", "mass", "sigma_u", "sigma_vel_sq", "x0", "P0", "param_floor", "ukf_alpha",
                  "ukf_beta", "ukf_kappa", "d_floor", "contact_sigmas", "fading", "final_window", "overrides"},
    "fit": {"models", "F_unc", "known_surface", "n_bounds", "eta_max", "evaluate_speeds"},
    "scan": {"period", "baseline_window", "prominence", "tolerance", "reference"},
    "analysis": {"compare_to"},
    "output": {"traces"},
}
_TOP = {"schema_version", "name", "description", "repetitions", "seed", "cases"} | set(_SECTIONS)
_FADING = {"threshold", "step", "alpha_max", "delay"}


@dataclass(frozen=True)
class Case:
    """One fully resolved row of a scenario."""

    name: str
    phantom: object
    tip: object
    trajectory: object
    sensor: SensorModel
    seeds: tuple
    config: dict

    @property
    def repetitions(self):
        return len(self.seeds)

    def sensor_for(self, seed):
        return dataclasses.replace(self.sensor, seed=int(seed))

    def filter_configs(self, variant=None, theta=None):
        """Estimator configurations, one per requested variant."""
        est = self.config.get("estimator", {})
        names = [variant] if variant else est.get("variants", ["ekf"])
        return [build_filter_config(est, v, self.tip, self.phantom, theta) for v in names]

    @property
    def final_window(self):
        return float(self.config.get("estimator", {}).get("final_window", 2.0))


@dataclass(frozen=True)
class Scenario:
    name: str
    cases: tuple
    raw: dict
    base_seed: int


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _check_keys(table, allowed, where):
    for k in table:
        if k not in allowed:
            raise ConfigError(f"unknown key '{where}.{k}'")


def _require(table, key, where):
    if key not in table:
        raise ConfigError(f"missing key '{where}.{key}'")
    return table[key]


def load_scenario(path, seed=None):
    """Read and resolve a scenario file; ``seed`` overrides the base seed."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return resolve(raw, seed)


def resolve(raw, seed=None):
    _check_keys(raw, _TOP, "scenario")
    version = raw.get("schema_version", SCENARIO_SCHEMA)
    if version != SCENARIO_SCHEMA:
        raise ConfigError(f"unsupported scenario schema_version {version}")
    name = str(_require(raw, "name", "scenario"))
    reps = int(raw.get("repetitions", 1))
    if reps < 1:
        raise ConfigError("'scenario.repetitions' must be >= 1")
    base_seed = int(raw.get("seed", 0)) if seed is None else int(seed)
    if base_seed < 0:
        raise ConfigError("'scenario.seed' must be >= 0")
    shared = {k: raw[k] for k in _SECTIONS if k in raw}
    case_tables = raw.get("cases") or [{"name": name}]
    cases = []
    for i, over in enumerate(case_tables):
        where = f"cases[{i}]"
        _check_keys(over, set(_SECTIONS) | {"name", "repetitions"}, where)
        merged = _merge(shared, {k: v for k, v in over.items() if k in _SECTIONS})
        n = int(over.get("repetitions", reps))
        cases.append(build_case(str(over.get("name", f"case{i}")), merged, base_seed, n))
    names = [c.name for c in cases]
    if len(set(names)) != len(names):
        raise ConfigError(f"case names must be unique, got {names}")
    return Scenario(name=name, cases=tuple(cases), raw=raw, base_seed=base_seed)


def build_case(name, cfg, base_seed, repetitions):
    for sec, keys in _SECTIONS.items():
        if sec in cfg:
            _check_keys(cfg[sec], keys, sec)
    if "fading" in cfg.get("estimator", {}):
        _check_keys(cfg["estimator"]["fading"], _FADING, "estimator.fading")
    phantom = build_phantom(_require(cfg, "phantom", "scenario"))
    tip = build_tip(_require(cfg, "tip", "scenario"))
    traj = build_trajectory(_require(cfg, "trajectory", "scenario"))
    sensor = build_sensor(cfg.get("sensor", {}))
    seeds = tuple(base_seed + i for i in range(repetitions))
    return Case(name=name, phantom=phantom, tip=tip, trajectory=traj, sensor=sensor, seeds=seeds, config=cfg)


def build_phantom(t):
    name = _require(t, "preset", "phantom")
    if name not in PRESETS:
        raise ConfigError(f"'phantom.preset' must be one of {', '.join(PRESETS)}, got {name!r}")
    p = preset(name)
    if "surface_z" in t:
        p = dataclasses.replace(p, surface_z=float(t["surface_z"]))
    return p


def _call(where, fn, **kw):
    try:
        return fn(**kw)
    except (DomainError, ConfigError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_tip(t):
    shape = _require(t, "shape", "tip")
    extra = {"mass": float(t["mass"])} if "mass" in t else {}
    if shape == "sphere":
        return _call("tip", Sphere, radius=float(_require(t, "radius", "tip")), **extra)
    if shape == "flat":
        return _call("tip", Flat, half_width=float(_require(t, "half_width", "tip")), **extra)
    if shape == "power":
        return _call("tip", PowerLaw, n=float(_require(t, "n", "tip")), c_n=float(_require(t, "c_n", "tip")), **extra)
    raise ConfigError(f"'tip.shape' must be sphere, flat or power, got {shape!r}")


_TRAJECTORIES = {"ramp": QuasiStaticRamp, "load_cycle": LoadCycle,
                 "sinusoid_point": SinusoidPoint, "sinusoid_scan": SinusoidScan}


def build_trajectory(t):
    kind = _require(t, "kind", "trajectory")
    if kind not in _TRAJECTORIES:
        raise ConfigError(f"'trajectory.kind' must be one of {', '.join(_TRAJECTORIES)}, got {kind!r}")
    cls = _TRAJECTORIES[kind]
    fields = {f.name for f in dataclasses.fields(cls)}
    kw = {}
    for k, v in t.items():
        if k == "kind":
            continue
        if k not in fields:
            raise ConfigError(f"key 'trajectory.{k}' does not apply to kind {kind!r}")
        if isinstance(v, bool):
            kw[k] = v
        else:
            kw[k] = tuple(float(a) for a in v) if isinstance(v, list) else float(v)
    return _call("trajectory", cls, **kw)


def build_sensor(t):
    kw = {k: (bool(v) if k == "inertial_load" else float(v)) for k, v in t.items()}
    return _call("sensor", SensorModel, **kw)


def build_filter_config(est, variant, tip, phantom, theta=None):
    if not isinstance(tip, Sphere):
        raise ConfigError("online estimation needs a spherical tip")
    try:
        variant = Variant(variant)
    except ValueError as exc:
        raise ConfigError(f"unknown estimator variant {variant!r}; expected one of "
                          f"{', '.join(v.value for v in Variant)}") from exc
    # per-variant settings, e.g. [estimator.overrides.afekf.fading]
    over = est.get("overrides", {})
    _check_keys(over, {v.value for v in Variant}, "estimator.overrides")
    if variant.value in over:
        _check_keys(over[variant.value], _SECTIONS["estimator"] - {"variants", "overrides"},
                    f"estimator.overrides.{variant.value}")
        est = _merge(est, over[variant.value])
    fading = dict(est.get("fading", {}))
    _check_keys(fading, _FADING, "estimator.fading")
    if theta is not None:
        fading["threshold"] = float(theta)
    kw = {k: v for k, v in est.items() if k not in ("variants", "fading", "final_window", "overrides")}
    if "x0" in kw:
        # the string "v0" stands for the first in-contact velocity measurement
        kw["x0"] = tuple(None if v == "v0" else float(v) for v in kw["x0"])
    if "P0" in kw:
        kw["P0"] = tuple(float(v) for v in kw["P0"])
    n = variant.n_states
    if "x0" in kw and len(kw["x0"]) != n:
        kw["x0"] = kw["x0"][:n] + (0.0,) * max(0, n - len(kw["x0"]))
    return _call("estimator", FilterConfig, variant=variant, fading=_call("estimator.fading", FadingConfig, **fading),
                 tip_radius=tip.radius, nu=phantom.matrix.nu, mass=float(kw.pop("mass", tip.mass)), **kw)


def fit_models(case, override=None):
    names = override or case.config.get("fit", {}).get("models", ["dr_elastic"])
    out = []
    for m in names:
        try:
            out.append(Model(m))
        except ValueError as exc:
            raise ConfigError(f"unknown fit model {m!r}; expected one of {', '.join(x.value for x in Model)}") from exc
    return out


def parse_theta(text):
    """``--theta`` values: a float or ``inf``."""
    v = float(text)
    if math.isnan(v) or v < 0:
        raise ConfigError(f"theta must be >= 0 or inf, got {text!r}")
    return v
