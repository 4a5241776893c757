"""TOML run configuration: problem, motion, model, stiffening, sweep.

A config file needs at most a handful of keys; everything defaults to
the benchmark geometry.  Example::

    model = "spring"

    [problem]
    kind = "foil"
    element_size = 0.05

    [motion]
    mode = "rotation"
    angle_deg = 25.0

    [stiffening]
    layer_factors = [2.2, 1.3]

    [sweep]
    parameters = ["layer1", "layer2"]
    layer1 = {start = 1.0, stop = 6.0, step = 0.25}
    layer2 = {values = [1.0, 1.3, 2.0]}

Swept parameter names: layer1/layer2/layer3 (stiffening factors),
a10/a20/a30/kappa (hyperelastic), modulus/poisson (linear elastic),
n_steps/strategy/torsional_scale/geometric_scale (spring).
"""

from __future__ import annotations

import copy
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .elastic import LinearElasticConfig
from .errors import ConfigError, MeshMorphError
from .problems import (
    ProblemSpec,
    build_beam_in_channel,
    build_foil_in_channel,
    cantilever_profile_motion,
    prescribe_motion,
)
from .spring import SpringConfig
from .yeoh import YeohConfig

MODELS = ("spring", "linear_elastic", "yeoh")
SWEEP_CAP_DEFAULT = 10_000

_PROBLEM_FIELDS = set(ProblemSpec.__dataclass_fields__)


def load_config(path):
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} does not exist")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}")
    cfg.setdefault("_base_dir", str(path.parent))
    cfg.setdefault("_stem", path.stem)
    return cfg


def problem_spec(cfg) -> ProblemSpec:
    section = dict(cfg.get("problem", {}))
    section.pop("kind", None)
    unknown = set(section) - _PROBLEM_FIELDS
    if unknown:
        raise ConfigError(f"unknown [problem] keys: {sorted(unknown)}")
    try:
        return ProblemSpec(**section)
    except MeshMorphError:
        raise
    except TypeError as exc:
        raise ConfigError(f"bad [problem] section: {exc}")


def build_problem(cfg):
    """Mesh and motion for a config; returns (kind, mesh, motion)."""
    kind = cfg.get("problem", {}).get("kind", "foil")
    spec = problem_spec(cfg)
    if kind == "beam":
        mesh = build_beam_in_channel(spec)
    elif kind == "foil":
        mesh = build_foil_in_channel(spec)
    else:
        raise ConfigError(f"unknown problem kind {kind!r}")

    motion_cfg = dict(cfg.get("motion", {}))
    mode = motion_cfg.pop("mode", "translation")
    scale = motion_cfg.pop("scale", 1.0)
    if mode == "cantilever":
        # bundled synthetic stand-in for a structural solver's deflection
        motion = cantilever_profile_motion(
            mesh, tip_deflection=motion_cfg.pop("tip_deflection", 0.2)
        )
    elif mode == "from_file":
        path = Path(motion_cfg.pop("path", ""))
        if not path.is_absolute():
            path = Path(cfg.get("_base_dir", ".")) / path
        motion = prescribe_motion(mesh, "from_file", path=path)
    else:
        motion = prescribe_motion(mesh, mode, **motion_cfg)
    if scale != 1.0:
        motion = motion.scaled(float(scale))
    return kind, mesh, motion


def _layer_factors(cfg):
    return tuple(cfg.get("stiffening", {}).get("layer_factors", ()))


def model_name(cfg):
    name = cfg.get("model", "spring")
    if name not in MODELS:
        raise ConfigError(f"unknown model {name!r}; expected one of {MODELS}")
    return name


def spring_config(cfg) -> SpringConfig:
    s = cfg.get("spring", {})
    return SpringConfig(
        strategy=s.get("strategy", "selective"),
        n_steps=int(s.get("n_steps", 30)),
        trial_fraction=float(s.get("trial_fraction", 0.2)),
        torsional_scale=float(s.get("torsional_scale", 1.0)),
        geometric_scale=float(s.get("geometric_scale", 1.0)),
        layer_factors=tuple(s.get("layer_factors", _layer_factors(cfg))),
    )


def elastic_config(cfg) -> LinearElasticConfig:
    s = cfg.get("linear_elastic", {})
    return LinearElasticConfig(
        elastic_modulus=float(s.get("modulus", 1.0)),
        poisson_ratio=float(s.get("poisson", 0.3)),
        n_iterations=int(s.get("iterations", 1)),
        layer_factors=tuple(s.get("layer_factors", _layer_factors(cfg))),
    )


def yeoh_config(cfg) -> YeohConfig:
    s = cfg.get("yeoh", {})
    return YeohConfig(
        a10=float(s.get("a10", 1.0)),
        a20=float(s.get("a20", 1e3)),
        a30=float(s.get("a30", 0.0)),
        kappa=float(s.get("kappa", 1.0)),
        layer_factors=tuple(s.get("layer_factors", _layer_factors(cfg))),
        n_increments=int(s.get("increments", 10)),
        newton_tol=float(s.get("newton_tol", 1e-8)),
        max_newton_iters=int(s.get("max_iters", 25)),
    )


def _set_layer_factor(cfg, index, value):
    stiff = cfg.setdefault("stiffening", {})
    factors = list(stiff.get("layer_factors", ()))
    while len(factors) < index:
        factors.append(1.0)
    factors[index - 1] = float(value)
    stiff["layer_factors"] = factors


_OVERRIDES = {
    "layer1": lambda cfg, v: _set_layer_factor(cfg, 1, v),
    "layer2": lambda cfg, v: _set_layer_factor(cfg, 2, v),
    "layer3": lambda cfg, v: _set_layer_factor(cfg, 3, v),
    "a10": lambda cfg, v: cfg.setdefault("yeoh", {}).update(a10=float(v)),
    "a20": lambda cfg, v: cfg.setdefault("yeoh", {}).update(a20=float(v)),
    "a30": lambda cfg, v: cfg.setdefault("yeoh", {}).update(a30=float(v)),
    "kappa": lambda cfg, v: cfg.setdefault("yeoh", {}).update(kappa=float(v)),
    "modulus": lambda cfg, v: cfg.setdefault("linear_elastic", {}).update(modulus=float(v)),
    "poisson": lambda cfg, v: cfg.setdefault("linear_elastic", {}).update(poisson=float(v)),
    "n_steps": lambda cfg, v: cfg.setdefault("spring", {}).update(n_steps=int(v)),
    "strategy": lambda cfg, v: cfg.setdefault("spring", {}).update(strategy=str(v)),
    "torsional_scale": lambda cfg, v: cfg.setdefault("spring", {}).update(torsional_scale=float(v)),
    "geometric_scale": lambda cfg, v: cfg.setdefault("spring", {}).update(geometric_scale=float(v)),
}


def apply_overrides(cfg, overrides):
    """New config dict with swept parameter values applied."""
    out = copy.deepcopy(cfg)
    for name, value in overrides.items():
        if name not in _OVERRIDES:
            raise ConfigError(f"unknown sweep parameter {name!r}")
        _OVERRIDES[name](out, value)
    return out


def _parameter_values(name, spec):
    if isinstance(spec, dict):
        if "values" in spec:
            return list(spec["values"])
        if {"start", "stop", "step"} <= set(spec):
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
            if step <= 0.0:
                raise ConfigError(f"sweep parameter {name!r} needs step > 0")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(count)]
        raise ConfigError(f"sweep parameter {name!r} needs 'values' or start/stop/step")
    if isinstance(spec, list):
        return list(spec)
    raise ConfigError(f"sweep parameter {name!r} has no usable range")


def sweep_grid(cfg):
    """Swept parameter names and the full grid in deterministic order.

    Returns ``(names, points)`` where each point is a dict name->value.
    """
    sweep = cfg.get("sweep")
    if not sweep:
        raise ConfigError("config has no [sweep] section")
    names = list(sweep.get("parameters", []))
    if not names:
        raise ConfigError("[sweep] lists no parameters")
    value_lists = []
    for name in names:
        if name not in _OVERRIDES:
            raise ConfigError(f"unknown sweep parameter {name!r}")
        if name not in sweep:
            raise ConfigError(f"[sweep] lacks a range for {name!r}")
        values = _parameter_values(name, sweep[name])
        if not values:
            raise ConfigError(f"sweep parameter {name!r} has an empty range")
        value_lists.append(values)
    total = 1
    for values in value_lists:
        total *= len(values)
    cap = int(sweep.get("cap", SWEEP_CAP_DEFAULT))
    if total > cap:
        raise ConfigError(f"sweep grid has {total} points, exceeding the cap of {cap}")
    points = [{}]
    for name, values in zip(names, value_lists):
        points = [{**p, name: v} for p in points for v in values]
    return names, points
