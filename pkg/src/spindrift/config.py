"""Run configuration: a single YAML file, strictly validated.

Unknown keys are rejected and every violation is reported with its field
path, so a config typo can never silently change a run.
"""

import hashlib
import json
from dataclasses import dataclass, field

import yaml

from .crystal import STRUCTURE_KINDS


class ConfigError(ValueError):
    """Invalid run configuration (distinct exit code in the CLI)."""


_PROFILES = {
    "desk": {"extent": 15, "n_lattices": 25, "n_orientations": 144},
    "paper": {"extent": 30, "n_lattices": 100, "n_orientations": 1597},
}

_DEFAULTS = {
    "structures": ["diamond"],
    "lattice_constant": 5.431,
    "gamma": 53.190e6,
    "abundances_percent": [0.5, 1.0, 2.0, 4.7, 10.0, 20.0, 30.0, 50.0, 75.0, 100.0],
    "extent": 15,
    "n_lattices": 25,
    "n_orientations": 144,
    "seed": 2025,
    "cutoff_threshold": 0.95,
    "cutoff_ensemble": 100,
    "poisson_correction": False,
    "rate_weighted_targets": False,
    "diffusion_source": "lattice-sum",
    "diffusion_value": None,
    "particle": {
        "radius_nm": 10.0,
        "shell_nm": 3.0,
        "n_elements": 1000,
        "p_shell": 1.0,
    },
    "t1_grid": {"min_h": 0.05, "max_h": 50.0, "n": 40, "refine": True,
                "polish": True},
}


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(repr=False)

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def hash(self):
        """Stable digest of the semantically meaningful fields."""
        canon = json.dumps(self.values, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _fail(path, message):
    raise ConfigError(f"config field '{path}': {message}")


def _check_number(value, path, lo=None, hi=None, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        _fail(path, f"expected an integer, got {value!r}")
    if lo is not None and value < lo:
        _fail(path, f"must be >= {lo}, got {value!r}")
    if hi is not None and value > hi:
        _fail(path, f"must be <= {hi}, got {value!r}")
    return int(value) if integer else float(value)


def _merge(raw):
    values = json.loads(json.dumps(_DEFAULTS))  # deep copy
    if "structure" in raw:
        raw = dict(raw)
        values["structures"] = [raw.pop("structure")]
    for key, val in raw.items():
        if key not in _DEFAULTS:
            _fail(key, f"unknown key (known: {', '.join(sorted(_DEFAULTS))})")
        if isinstance(_DEFAULTS[key], dict):
            if not isinstance(val, dict):
                _fail(key, "expected a mapping")
            for sub, sval in val.items():
                if sub not in _DEFAULTS[key]:
                    _fail(f"{key}.{sub}", "unknown key")
                values[key][sub] = sval
        else:
            values[key] = val
    return values


def validate(raw):
    """Validate a raw mapping into a RunConfig."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    v = _merge(raw)
    if not isinstance(v["structures"], list) or not v["structures"]:
        _fail("structures", "expected a non-empty list")
    for s in v["structures"]:
        if s not in STRUCTURE_KINDS:
            _fail("structures", f"{s!r} is not one of {STRUCTURE_KINDS}")
    v["lattice_constant"] = _check_number(v["lattice_constant"], "lattice_constant", lo=1e-3)
    v["gamma"] = _check_number(v["gamma"], "gamma")
    if v["gamma"] == 0:
        _fail("gamma", "must be nonzero")
    if not isinstance(v["abundances_percent"], list) or not v["abundances_percent"]:
        _fail("abundances_percent", "expected a non-empty list")
    v["abundances_percent"] = [
        _check_number(f, f"abundances_percent[{i}]", lo=1e-6, hi=100.0)
        for i, f in enumerate(v["abundances_percent"])]
    v["extent"] = _check_number(v["extent"], "extent", lo=0, integer=True)
    v["n_lattices"] = _check_number(v["n_lattices"], "n_lattices", lo=1, integer=True)
    v["n_orientations"] = _check_number(v["n_orientations"], "n_orientations", lo=1, integer=True)
    v["seed"] = _check_number(v["seed"], "seed", lo=0, integer=True)
    v["cutoff_threshold"] = _check_number(v["cutoff_threshold"], "cutoff_threshold",
                                          lo=0.5, hi=0.999)
    v["cutoff_ensemble"] = _check_number(v["cutoff_ensemble"], "cutoff_ensemble",
                                         lo=1, integer=True)
    for key in ("poisson_correction", "rate_weighted_targets"):
        if not isinstance(v[key], bool):
            _fail(key, "expected true/false")
    if v["diffusion_source"] not in ("nearest-neighbor", "lattice-sum", "value"):
        _fail("diffusion_source", "expected nearest-neighbor, lattice-sum or value")
    if v["diffusion_source"] == "value":
        if v["diffusion_value"] is None:
            _fail("diffusion_value", "required when diffusion_source=value")
        v["diffusion_value"] = _check_number(v["diffusion_value"], "diffusion_value", lo=1e-12)
    p = v["particle"]
    p["radius_nm"] = _check_number(p["radius_nm"], "particle.radius_nm", lo=1e-3)
    p["shell_nm"] = _check_number(p["shell_nm"], "particle.shell_nm", lo=1e-6)
    if p["shell_nm"] >= p["radius_nm"]:
        _fail("particle.shell_nm", "must be smaller than the radius")
    p["n_elements"] = _check_number(p["n_elements"], "particle.n_elements", lo=10, integer=True)
    p["p_shell"] = _check_number(p["p_shell"], "particle.p_shell", lo=1e-9, hi=1.0)
    g = v["t1_grid"]
    g["min_h"] = _check_number(g["min_h"], "t1_grid.min_h", lo=1e-6)
    g["max_h"] = _check_number(g["max_h"], "t1_grid.max_h", lo=g["min_h"])
    g["n"] = _check_number(g["n"], "t1_grid.n", lo=2, integer=True)
    for key in ("refine", "polish"):
        if not isinstance(g[key], bool):
            _fail(f"t1_grid.{key}", "expected true/false")
    return RunConfig(values=v)


def load(path=None, profile=None, seed=None):
    """Load and validate a config file; apply profile/seed overrides."""
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    cfg = validate(raw)
    if profile is not None:
        if profile not in _PROFILES:
            raise ConfigError(f"unknown profile {profile!r}")
        cfg.values.update(_PROFILES[profile])
    if seed is not None:
        cfg.values["seed"] = int(seed)
    return cfg
