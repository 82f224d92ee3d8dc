"""Experiment configuration: defaults, file loading, overrides, validation.

Configs are JSON documents.  Precedence is command line > file > defaults;
:func:`resolve` returns the fully merged dict that is echoed into every
result bundle, so a bundle's config re-runs the same experiment.
"""

import copy
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .model import SlqModel
from .simulator import ExplorationInput, SimConfig, default_exploration
from .vi_engine import StepSchedule, TrustSetFamily, ViConfig, default_trust_radius

SCHEMA_VERSION = 1

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "name": "experiment",
    "model": None,
    "algorithm": "model_based",
    "sim": {"dt": 1e-3, "paths": 1000, "seed": 0, "scheme": "euler_maruyama"},
    "collection": {
        "intervals": 20,
        "interval_length": 0.1,
        "exploration": {"amplitude": 1.0, "base_frequency": 1.0, "noise_ratio": 0.01},
        "rank_tol": 1e-8,
    },
    "vi": {
        "P0": None,
        "a": 1.0,
        "b": 0.0,
        "gamma": 0.7,
        "trust_radius0": None,
        "trust_growth": 2.0,
        "stop_tol": 1e-5,
        "max_iter": 200000,
    },
    "oracle": {"t_end": 200.0, "rtol": 1e-10},
    "verify": {"threshold": 1e-3},
    "output": {"directory": "results", "formats": ["json", "csv"], "ensemble_csv": False},
}

ALGORITHMS = ("model_based", "model_free")


class ConfigError(ValueError):
    pass


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def bundled(name):
    """Load one of the configs shipped with the package (e.g. ``benchmark``)."""
    try:
        text = resources.files("slqvi.configs").joinpath(f"{name}.json").read_text()
    except FileNotFoundError:
        raise ConfigError(f"no bundled config named {name!r}") from None
    return json.loads(text)


def bundled_names():
    return sorted(p.name[:-5] for p in resources.files("slqvi.configs").iterdir()
                  if p.name.endswith(".json"))


def load(source):
    """Read a config from a path, or a bundled config by bare name."""
    p = Path(source)
    if p.suffix != ".json" and not p.exists():
        return bundled(str(source)), None
    try:
        with open(p) as f:
            return json.load(f), p.parent
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {source}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"cannot parse {source}: {e}") from None


def parse_override(item):
    """``"vi.stop_tol=1e-6"`` -> ``{"vi": {"stop_tol": 1e-6}}`` (value parsed as JSON)."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key.path=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    out = value
    for part in reversed(key.split(".")):
        out = {part: out}
    return out


def resolve(file_cfg=None, overrides=(), base_dir=None):
    cfg = _merge(DEFAULTS, file_cfg or {})
    for o in overrides:
        cfg = _merge(cfg, o)
    if isinstance(cfg.get("model"), str):
        path = Path(cfg["model"])
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        try:
            with open(path) as f:
                cfg["model"] = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read model file {path}: {e}") from None
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {cfg.get('schema_version')!r}")
    if cfg["algorithm"] not in ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {cfg['algorithm']!r}")
    if not isinstance(cfg.get("model"), dict):
        raise ConfigError("config needs a 'model' with keys A, B, C, D, Q, R, x0")
    bad = set(cfg["output"]["formats"]) - {"json", "csv"}
    if bad:
        raise ConfigError(f"unknown output formats {sorted(bad)}")
    try:
        build_model(cfg)
        build_sim(cfg)
        build_vi(cfg, build_model(cfg))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid config: {e}") from None


def build_model(cfg):
    return SlqModel.from_dict(cfg["model"])


def build_sim(cfg):
    s = cfg["sim"]
    return SimConfig(dt=float(s["dt"]), paths=int(s["paths"]), seed=int(s["seed"]),
                     scheme=s.get("scheme", "euler_maruyama"))


def build_exploration(cfg, model):
    ex = cfg["collection"]["exploration"]
    if "frequencies" in ex:
        return ExplorationInput(ex["amplitudes"], ex["frequencies"], ex["phases"],
                                float(ex.get("noise_std", 0.0)))
    return default_exploration(model, int(cfg["collection"]["intervals"]),
                               amplitude=float(ex["amplitude"]),
                               base_frequency=float(ex["base_frequency"]),
                               noise_ratio=float(ex["noise_ratio"]))


def collection_times(cfg):
    c = cfg["collection"]
    return float(c["interval_length"]) * np.arange(int(c["intervals"]) + 1)


def build_vi(cfg, model):
    v = cfg["vi"]
    P0 = np.eye(model.n) if v["P0"] is None else np.asarray(v["P0"], dtype=float)
    r0 = v["trust_radius0"] or default_trust_radius(model.Q)
    return ViConfig(
        P0=P0,
        trust=TrustSetFamily(float(r0), float(v["trust_growth"])),
        schedule=StepSchedule(float(v["a"]), float(v["b"]), float(v["gamma"])),
        stop_tol=float(v["stop_tol"]),
        max_iter=int(v["max_iter"]),
    )
