"""Run configuration: YAML with an explicit schema version; unknown keys are errors."""
from dataclasses import dataclass, field
import math
from pathlib import Path

import yaml

from .fields import GaussianSpec
from .lax import plane_wave

CONFIG_SCHEMA = 1
SCENARIOS = ("zero", "plane_wave", "gaussian", "file")

DEFAULT_GRIDS = {
    "zero": {"L": 4.0, "T_end": 1.0, "nx": 65, "nt": 33},
    "plane_wave": {"L": 4.0, "T_end": 1.0, "nx": 257, "nt": 257},
    "gaussian": {"L": 8.0, "T_end": 1.0, "nx": 513, "nt": 257},
    "file": {"L": 8.0, "T_end": 1.0, "nx": 513, "nt": 257},
}

DEFAULT_LAMBDAS = {
    # one or two points per domain, all with modest kernel growth on the desk grids
    "default": [0.9 * complex(math.cos(0.15), math.sin(0.15)), 0.5 * complex(math.cos(0.5), math.sin(0.5)),
                0.5 * complex(math.cos(2.1), math.sin(2.1)), 0.9 * complex(math.cos(3.0), math.sin(3.0)),
                0.9 * complex(math.cos(3.3), math.sin(3.3)), 0.6 * complex(math.cos(5.0), math.sin(5.0))],
}

DEFAULT_TOLERANCES = {
    "algebra": 1e-10,
    "zero_curvature": 1e-10,
    "zero_curvature_negative": 1e-2,
    "solver_order": 1.9,
    "solver_error": 1e-3,
    "determinant": 1e-8,
    "path": 1e-6,
    "symmetry": 1e-6,
    "relations": 1e-6,
    "born_exponent": 1.8,
    "sn": 1e-8,
    "mn": 1e-6,
    "jump": 1e-5,
    "cyclic": 1e-10,
    "global": 1e-5,
    "residue": 1e-5,
    "winding": 1e-3,
    "reconstruct_plane": 0.01,
    "reconstruct_gaussian": 0.02,
    "decay_exponent": 0.2,
}

_TOP = {"schema_version", "scenario", "grid", "plane_wave", "gaussian", "profile", "lambda_sets",
        "tolerances", "seed", "output_dir", "contour", "reconstruct"}
_SUB = {
    "grid": {"L", "T_end", "nx", "nt"},
    "plane_wave": {"a", "b", "kappa"},
    "gaussian": {"amp_q", "amp_r", "center", "width"},
    "contour": {"per_segment", "r_inner", "r_outer"},
    "reconstruct": {"direction", "magnitudes", "order", "sign", "points"},
}


class ConfigError(ValueError):
    """Invalid configuration; messages carry file:line."""


@dataclass
class RunConfig:
    scenario: str = "zero"
    grid: dict = field(default_factory=lambda: dict(DEFAULT_GRIDS["zero"]))
    plane_wave: dict = field(default_factory=lambda: {"a": 0.3, "b": 0.2, "kappa": 1.0})
    gaussian: dict = field(default_factory=dict)
    profile: str = ""
    lambda_sets: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_LAMBDAS.items()})
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 42
    output_dir: str = ""
    contour: dict = field(default_factory=lambda: {"per_segment": 16, "r_inner": 0.2, "r_outer": 2.0})
    reconstruct: dict = field(default_factory=lambda: {"direction": math.pi / 4, "magnitudes": [4, 8, 16, 32],
                                                       "order": 2, "sign": 1, "points": None})
    source: str = "<defaults>"

    def plane_wave_params(self):
        p = self.plane_wave
        return plane_wave(complex(p["a"]), complex(p["b"]), float(p["kappa"]))

    def gaussian_spec(self):
        return GaussianSpec(**self.gaussian)

    def as_dict(self):
        """Canonical content used for the config digest."""
        d = {k: getattr(self, k) for k in ("scenario", "grid", "plane_wave", "gaussian", "profile",
                                           "tolerances", "seed", "contour", "reconstruct")}
        d["lambda_sets"] = {k: [[z.real, z.imag] for z in v] for k, v in self.lambda_sets.items()}
        d["plane_wave"] = {k: str(v) for k, v in self.plane_wave.items()}
        return d


def default_config(scenario="zero"):
    cfg = RunConfig(scenario=scenario, grid=dict(DEFAULT_GRIDS[scenario]))
    validate(cfg)
    return cfg


def _parse_complex(v):
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, bool):
        raise ValueError("boolean is not a number")
    if isinstance(v, (int, float)):
        return complex(v)
    return complex(str(v).replace(" ", "").replace("i", "j"))


def _line_map(node, prefix=()):
    """Map key paths to 1-based source lines."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (k.value,)
            out[path] = k.start_mark.line + 1
            out.update(_line_map(v, path))
    return out


def load_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such file")
    text = path.read_text()
    try:
        node = yaml.compose(text)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f":{mark.line + 1}" if mark else ""
        raise ConfigError(f"{path}{where}: {getattr(exc, 'problem', exc)}") from None
    lines = _line_map(node)

    def fail(keys, msg):
        line = lines.get(tuple(keys), 1)
        raise ConfigError(f"{path}:{line}: {msg}")

    if not isinstance(doc, dict):
        raise ConfigError(f"{path}:1: top level must be a mapping")
    for k in doc:
        if k not in _TOP:
            fail([k], f"unknown key {k!r}")
    if doc.get("schema_version") != CONFIG_SCHEMA:
        fail(["schema_version"], f"schema_version must be {CONFIG_SCHEMA}")
    scenario = doc.get("scenario")
    if scenario not in SCENARIOS:
        fail(["scenario"], f"scenario must be one of {', '.join(SCENARIOS)}")
    cfg = RunConfig(scenario=scenario, grid=dict(DEFAULT_GRIDS[scenario]), source=str(path))
    for sect, allowed in _SUB.items():
        if sect not in doc:
            continue
        block = doc[sect]
        if not isinstance(block, dict):
            fail([sect], f"{sect} must be a mapping")
        for k in block:
            if k not in allowed:
                fail([sect, k], f"unknown key {sect}.{k}")
        getattr(cfg, sect).update(block)
    if "profile" in doc:
        cfg.profile = str(doc["profile"])
        if not Path(cfg.profile).is_absolute():
            cfg.profile = str(path.parent / cfg.profile)
    if "seed" in doc:
        if not isinstance(doc["seed"], int) or isinstance(doc["seed"], bool):
            fail(["seed"], "seed must be an integer")
        cfg.seed = doc["seed"]
    if "output_dir" in doc:
        cfg.output_dir = str(doc["output_dir"])
    if "tolerances" in doc:
        if not isinstance(doc["tolerances"], dict):
            fail(["tolerances"], "tolerances must be a mapping")
        for k, v in doc["tolerances"].items():
            if k not in DEFAULT_TOLERANCES:
                fail(["tolerances", k], f"unknown tolerance {k!r}")
            cfg.tolerances[k] = v
    if "lambda_sets" in doc:
        if not isinstance(doc["lambda_sets"], dict):
            fail(["lambda_sets"], "lambda_sets must be a mapping of names to lists")
        for name, vals in doc["lambda_sets"].items():
            if not isinstance(vals, list) or not vals:
                fail(["lambda_sets", name], "a lambda set must be a non-empty list")
            try:
                cfg.lambda_sets[name] = [_parse_complex(v) for v in vals]
            except (TypeError, ValueError):
                fail(["lambda_sets", name], "entries must be complex numbers")
    try:
        validate(cfg)
    except ConfigError as exc:
        keys = getattr(exc, "keys", ())
        fail(list(keys), str(exc))
    return cfg


def _err(msg, *keys):
    e = ConfigError(msg)
    e.keys = keys
    return e


def validate(cfg):
    g = cfg.grid
    for k in ("nx", "nt"):
        if not isinstance(g[k], int) or isinstance(g[k], bool) or g[k] < 16:
            raise _err(f"grid.{k} must be an integer >= 16", "grid", k)
    for k in ("L", "T_end"):
        if not isinstance(g[k], (int, float)) or isinstance(g[k], bool) or not g[k] > 0:
            raise _err(f"grid.{k} must be positive", "grid", k)
        g[k] = float(g[k])
    for k, v in cfg.tolerances.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            raise _err(f"tolerance {k} must be positive", "tolerances", k)
    for name, vals in cfg.lambda_sets.items():
        if any(z == 0 for z in vals):
            raise _err(f"lambda set {name!r} contains lambda = 0", "lambda_sets", name)
    if cfg.scenario == "file" and not cfg.profile:
        raise _err("scenario 'file' needs a profile path", "scenario")
    try:
        cfg.plane_wave = {k: _parse_complex(v) if k != "kappa" else float(v) for k, v in cfg.plane_wave.items()}
        GaussianSpec(**cfg.gaussian)
    except (TypeError, ValueError) as exc:
        raise _err(f"bad scenario parameters: {exc}", "plane_wave" if "kappa" in str(exc) else "gaussian")
    r = cfg.reconstruct
    mags = r["magnitudes"]
    if (not isinstance(mags, list) or len(mags) < 3 or any(b <= a for a, b in zip(mags, mags[1:]))
            or mags[0] < 4):
        raise _err("reconstruct.magnitudes must be >= 3 increasing values starting at >= 4",
                   "reconstruct", "magnitudes")
    if r["sign"] not in (1, -1):
        raise _err("reconstruct.sign must be 1 or -1", "reconstruct", "sign")
    return cfg
