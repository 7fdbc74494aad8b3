"""Run configuration: YAML parsing with unit-suffixed keys, presets and hashing.

Every numeric key carries its SI unit in the name (``z_m``, ``rho_ohm_m``,
``omega_a_rad_s`` ...).  Unknown keys are rejected with the line number of
the offending entry.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import QFrictionError
from .materials import SurfaceModel
from .quadrature import QuadratureConfig
from .response import AtomModel

__all__ = ["ConfigError", "RunConfig", "TASKS", "PRESETS", "preset", "parse_config",
           "load_config", "dump_config", "config_hash", "merge", "logspace"]

TASKS = ("cp", "friction", "spectrum", "correlation", "compare-qrt", "oracle", "sweep")
FRICTION_METHODS = ("lowv", "full", "nearfield", "qrt")


class ConfigError(QFrictionError, ValueError):
    """Invalid configuration; carries a location string when known."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


# Schema: key -> (type, required).  "list" values accept a scalar too.
_SCHEMA = {
    "task": ("str", False),
    "atom": {
        "kind": ("str", False),
        "omega_a_rad_s": ("float", True),
        "alpha0_C_m2_per_V": ("float", False),
        "d_C_m": ("vec3", False),
        "gamma_a_rad_s": ("float", False),
    },
    "surface": {
        "kind": ("str", True),
        "rho_ohm_m": ("float", False),
        "omega_p_rad_s": ("float", False),
        "gamma_d_rad_s": ("float", False),
        "eps_re": ("float", False),
        "eps_im": ("float", False),
    },
    "geometry": {"z_m": ("list", True)},
    "motion": {"v_m_s": ("list", False)},
    "friction": {"method": ("str", False), "convention": ("str", False), "order": ("str", False)},
    "cp": {"method": ("str", False)},
    "spectrum": {"omega_rad_s": ("list", False)},
    "correlation": {"tau_s": ("list", False)},
    "compare_qrt": {"gamma_a_over_omega_a": ("list", False)},
    "oracle": {
        "mode": ("str", False),
        "modes": ("int", False),
        "band": ("float", False),
        "reach": ("float", False),
        "samples": ("int", False),
        "tau_max_s": ("float", False),
    },
    "sweep": {
        "of": ("str", False),
        "parameter": ("str", False),
        "values": ("list", False),
        "logspace": ("list", False),
    },
    "quadrature": {
        "rel_tol": ("float", False),
        "abs_tol": ("float", False),
        "max_evaluations": ("int", False),
        "kmax_per_m": ("float", False),
        "omega_max_rad_s": ("float", False),
        "panel_nodes": ("int", False),
        "grading_levels": ("int", False),
    },
    "output": {"path": ("str", False), "format": ("str", False)},
}

_SWEEP_PARAMETERS = ("v_m_s", "z_m", "rho_ohm_m", "gamma_a_rad_s")


@dataclass
class RunConfig:
    """Validated configuration (plain nested dict plus typed views)."""

    data: dict = field(default_factory=dict)

    @property
    def task(self) -> str:
        return self.data.get("task", "friction")

    def section(self, name) -> dict:
        return self.data.get(name, {}) or {}

    @property
    def z_list(self):
        return list(self.data["geometry"]["z_m"])

    @property
    def v_list(self):
        return list(self.section("motion").get("v_m_s", [0.0]))

    def atom(self, gamma_a=None) -> AtomModel:
        a = self.data["atom"]
        kind = a.get("kind", "oscillator")
        gam = a.get("gamma_a_rad_s") if gamma_a is None else gamma_a
        return AtomModel(kind, a["omega_a_rad_s"], d=a.get("d_C_m"),
                         alpha0=a.get("alpha0_C_m2_per_V"), gamma_a=gam)

    def surface(self, rho=None) -> SurfaceModel:
        s = self.data["surface"]
        kind = s["kind"]
        if kind == "ohmic":
            return SurfaceModel.ohmic(s["rho_ohm_m"] if rho is None else rho)
        if kind == "drude":
            return SurfaceModel.drude(s["omega_p_rad_s"], s["gamma_d_rad_s"])
        if kind == "constant":
            return SurfaceModel.constant(complex(s.get("eps_re", 1.0), s.get("eps_im", 0.0)))
        if kind == "vacuum":
            return SurfaceModel.vacuum()
        raise ConfigError(f"unknown surface kind {kind!r}", "surface.kind")

    def quadrature(self, rel_tol=None) -> QuadratureConfig:
        q = dict(self.section("quadrature"))
        kw = {}
        for key, name in (("rel_tol", "rel_tol"), ("abs_tol", "abs_tol"),
                          ("max_evaluations", "max_evaluations"), ("kmax_per_m", "kmax"),
                          ("omega_max_rad_s", "omega_max"), ("panel_nodes", "panel_nodes"),
                          ("grading_levels", "grading_levels")):
            if key in q:
                kw[name] = q[key]
        if rel_tol is not None:
            kw["rel_tol"] = rel_tol
        return QuadratureConfig(**kw)


def _mark(node):
    return f"line {node.start_mark.line + 1}"


def _to_python(node, schema, path, partial=False):
    """Convert a composed YAML node against ``schema`` with line diagnostics."""
    if isinstance(schema, dict):
        if not isinstance(node, yaml.MappingNode):
            raise ConfigError(f"expected a mapping for {path or 'top level'}", _mark(node))
        out = {}
        for knode, vnode in node.value:
            key = knode.value
            sub = f"{path}.{key}" if path else key
            if key not in schema:
                raise ConfigError(f"unknown key {sub!r}", _mark(knode))
            if key in out:
                raise ConfigError(f"duplicate key {sub!r}", _mark(knode))
            out[key] = _to_python(vnode, schema[key], sub, partial)
        for key, spec in schema.items():
            if not partial and isinstance(spec, tuple) and spec[1] and key not in out:
                raise ConfigError(f"missing required key {path + '.' if path else ''}{key}",
                                  _mark(node))
        return out
    kind = schema[0]
    loc = f"{_mark(node)} ({path})"
    if kind == "str":
        if not isinstance(node, yaml.ScalarNode):
            raise ConfigError("expected a string", loc)
        return str(node.value)
    if kind in ("float", "int"):
        if not isinstance(node, yaml.ScalarNode):
            raise ConfigError(f"expected a number", loc)
        return _number(node.value, kind, loc)
    if kind in ("list", "vec3"):
        items = node.value if isinstance(node, yaml.SequenceNode) else [node]
        vals = []
        for it in items:
            if not isinstance(it, yaml.ScalarNode):
                raise ConfigError("expected a list of numbers", loc)
            vals.append(_number(it.value, "float", loc))
        if not vals:
            raise ConfigError("list must not be empty", loc)
        if kind == "vec3" and len(vals) != 3:
            raise ConfigError("expected three components", loc)
        return vals
    raise ConfigError(f"internal schema error at {path}")


def _number(text, kind, loc):
    try:
        val = float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"not a number: {text!r}", loc) from None
    if not math.isfinite(val):
        raise ConfigError(f"non-finite value {text!r}", loc)
    if kind == "int":
        if val != int(val):
            raise ConfigError(f"expected an integer, got {text!r}", loc)
        return int(val)
    return val


def _validate(data):
    task = data.get("task", "friction")
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; choose from {', '.join(TASKS)}", "task")
    for key in ("atom", "surface", "geometry"):
        if key not in data:
            raise ConfigError(f"missing section {key!r}")
    a = data["atom"]
    if ("alpha0_C_m2_per_V" in a) == ("d_C_m" in a):
        raise ConfigError("give exactly one of alpha0_C_m2_per_V and d_C_m", "atom")
    kind = data["surface"]["kind"]
    need = {"ohmic": ("rho_ohm_m",), "drude": ("omega_p_rad_s", "gamma_d_rad_s"),
            "constant": (), "vacuum": ()}
    if kind not in need:
        raise ConfigError(f"unknown surface kind {kind!r}", "surface.kind")
    for key in need[kind]:
        if key not in data["surface"]:
            raise ConfigError(f"surface kind {kind!r} needs {key}", "surface")
    method = data.get("friction", {}).get("method", "lowv")
    if method not in FRICTION_METHODS:
        raise ConfigError(f"unknown friction method {method!r}", "friction.method")
    fmt = data.get("output", {}).get("format", "csv")
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"unknown output format {fmt!r}", "output.format")
    sw = data.get("sweep")
    if sw:
        if sw.get("parameter", "v_m_s") not in _SWEEP_PARAMETERS:
            raise ConfigError(f"sweep parameter must be one of {_SWEEP_PARAMETERS}", "sweep.parameter")
        ls = sw.get("logspace")
        if ls is not None and (len(ls) != 3 or ls[2] < 2 or ls[0] <= 0 or ls[1] <= 0):
            raise ConfigError("logspace is [start, stop, count] with positive ends", "sweep.logspace")
    try:
        cfg = RunConfig(data)
        cfg.atom()
        cfg.surface()
        cfg.quadrature()
    except QFrictionError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg


def parse_config(text: str, partial: bool = False) -> RunConfig:
    """Parse YAML text into a validated :class:`RunConfig`.

    With ``partial`` only keys and types are checked, so the result can be
    overlaid on a preset with :func:`merge`.
    """
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else None
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", where) from None
    if node is None:
        raise ConfigError("empty configuration")
    data = _to_python(node, _SCHEMA, "", partial)
    return RunConfig(data) if partial else _validate(data)


def load_config(path, partial: bool = False) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), partial)


def dump_config(cfg: RunConfig) -> str:
    """Serialize to YAML that :func:`parse_config` reads back unchanged."""
    def plain(x):
        if isinstance(x, dict):
            return {k: plain(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [plain(v) for v in x]
        if isinstance(x, float):
            return repr(x)
        return x

    text = yaml.safe_dump(plain(cfg.data), sort_keys=True)
    # numbers were written as quoted reprs; unquote them
    return text.replace("'", "")


def config_hash(cfg: RunConfig) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON form."""
    canon = json.dumps(cfg.data, sort_keys=True, separators=(",", ":"), default=list)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# Presets ---------------------------------------------------------------------

# Rb ground state above silicon: D-line transition 2 pi x 384.23 THz.
_RB_OMEGA = 2.0 * math.pi * 384.2304844685e12

PRESETS = {
    "rb-si-nearfield": {
        "task": "friction",
        "atom": {"kind": "oscillator", "omega_a_rad_s": _RB_OMEGA, "alpha0_C_m2_per_V": 5.26e-39},
        "surface": {"kind": "ohmic", "rho_ohm_m": 640.0},
        "geometry": {"z_m": [1.0e-8]},
        "motion": {"v_m_s": [340.0]},
        "friction": {"method": "nearfield"},
    },
    # Round-number Ohmic toy: 2 tau w_a ~ 1, weak coupling, z = 1 nm.
    "ohmic-toy": {
        "task": "friction",
        "atom": {"kind": "oscillator", "omega_a_rad_s": 1.0e15, "alpha0_C_m2_per_V": 2.0e-38},
        "surface": {"kind": "ohmic", "rho_ohm_m": 5.65e-5},
        "geometry": {"z_m": [1.0e-9]},
        "motion": {"v_m_s": [1.0e3]},
        "friction": {"method": "full"},
    },
    # Drude toy with finite damping so no surface-plasmon pole is real.
    "drude-toy": {
        "task": "friction",
        "atom": {"kind": "oscillator", "omega_a_rad_s": 1.0e15, "alpha0_C_m2_per_V": 2.0e-38},
        "surface": {"kind": "drude", "omega_p_rad_s": 1.4e16, "gamma_d_rad_s": 1.0e14},
        "geometry": {"z_m": [1.0e-9]},
        "motion": {"v_m_s": [1.0e3]},
        "friction": {"method": "full"},
    },
}


def preset(name: str) -> RunConfig:
    """Built-in configuration by name."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return _validate(copy.deepcopy(PRESETS[name]))


def merge(base: RunConfig, override: RunConfig | None) -> RunConfig:
    """Overlay the sections of ``override`` on ``base``."""
    if override is None:
        return base
    data = copy.deepcopy(base.data)
    for key, val in override.data.items():
        if isinstance(val, dict) and isinstance(data.get(key), dict):
            data[key].update(val)
        else:
            data[key] = val
    return _validate(data)


def logspace(spec):
    start, stop, n = spec
    return list(np.geomspace(start, stop, int(n)))
