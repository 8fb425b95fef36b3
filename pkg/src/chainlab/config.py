"""Experiment config loading, validation and normalization.

Configs are JSON objects validated strictly: unknown keys are rejected
anywhere in the tree, and every optional key is filled with its default
so the normalized echo written next to each output is a complete,
re-runnable description of the experiment. Re-running a command on its
own echo reproduces the outputs byte for byte.

The echo deliberately omits the output directory: where results land is
not part of the experiment.
"""

from __future__ import annotations

import json
import os

from .dynamics import ChainParams, ChainState
from .errors import ConfigError, DomainViolationError

DEFAULT_THRESHOLDS = {
    "xcorr_peak": 0.2,
    "xcorr_margin": 0.05,
    "granger_alpha": 0.05,
    "ccm_skill": 0.5,
    "ccm_convergence": 0.1,
    "shift": 0.05,
}

DEFAULT_PARAM_RULE = {
    "r_x_scale": 1.0,
    "r_y_scale": 0.95,
    "K_x": 0.95,
    "K_y": 1.0,
    "a_yx": -0.1,
    "a_xy": 0.0,
}

DEFAULT_SWEEP = {
    "r_min": 1.5,
    "r_max": 3.0,
    "n_r": 1500,
    "n_burn": 1000,
    "n_keep": 500,
    "epsilon": 1e-4,
    "continuation": False,
}

PERTURB_TARGETS = ("r_x", "r_y", "K_x", "K_y", "a_yx", "a_xy")


def load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a JSON object")
    return obj


def _check_keys(d: dict, allowed: set[str], required: set[str], path: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) at {path}: {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"missing required key(s) at {path}: {sorted(missing)}")


def _section(cfg: dict, key: str, path: str) -> dict:
    v = cfg.get(key)
    if not isinstance(v, dict):
        raise ConfigError(f"{path}.{key} must be an object")
    return v


def _num(d: dict, key: str, path: str, default=None, integer: bool = False):
    if key not in d:
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key} must be a number")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{path}.{key} must be an integer")
        return int(v)
    return float(v)


def _bool(d: dict, key: str, path: str, default: bool) -> bool:
    v = d.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"{path}.{key} must be true or false")
    return v


def normalize_params(cfg: dict, path: str = "params") -> dict:
    _check_keys(cfg, {"r_x", "r_y", "K_x", "K_y", "a_yx", "a_xy"},
                {"r_x", "r_y", "K_x", "K_y"}, path)
    out = {
        "r_x": _num(cfg, "r_x", path),
        "r_y": _num(cfg, "r_y", path),
        "K_x": _num(cfg, "K_x", path),
        "K_y": _num(cfg, "K_y", path),
        "a_yx": _num(cfg, "a_yx", path, default=0.0),
        "a_xy": _num(cfg, "a_xy", path, default=0.0),
    }
    try:
        ChainParams(**out)
    except DomainViolationError as e:
        raise ConfigError(f"invalid {path}: {e}") from None
    return out


def normalize_initial(cfg: dict | None, path: str = "initial") -> dict:
    if cfg is None:
        cfg = {}
    _check_keys(cfg, {"x", "y"}, set(), path)
    out = {"x": _num(cfg, "x", path, default=0.5),
           "y": _num(cfg, "y", path, default=0.5)}
    try:
        ChainState(out["x"], out["y"])
    except DomainViolationError as e:
        raise ConfigError(f"invalid {path}: {e}") from None
    return out


def _normalize_seed(cfg: dict, seed_override: int | None) -> int:
    seed = seed_override if seed_override is not None \
        else _num(cfg, "seed", "config", default=0, integer=True)
    if seed < 0:
        raise ConfigError("seed must be >= 0")
    return int(seed)


def _positive(value, name):
    if value is None or value <= 0:
        raise ConfigError(f"{name} must be > 0")
    return value


def normalize_simulate(cfg: dict, seed_override: int | None = None) -> dict:
    _check_keys(cfg, {"seed", "params", "initial", "n_steps", "output_dir"},
                {"params", "n_steps"}, "config")
    n_steps = _num(cfg, "n_steps", "config", integer=True)
    if n_steps is None or n_steps < 1:
        raise ConfigError("n_steps must be an integer >= 1")
    return {
        "seed": _normalize_seed(cfg, seed_override),
        "params": normalize_params(_section(cfg, "params", "config")),
        "initial": normalize_initial(cfg.get("initial")),
        "n_steps": n_steps,
    }


def normalize_sweep_rule(cfg: dict | None, path: str = "sweep.param_rule") -> dict:
    if cfg is None:
        cfg = {}
    _check_keys(cfg, set(DEFAULT_PARAM_RULE), set(), path)
    out = {k: _num(cfg, k, path, default=v) for k, v in DEFAULT_PARAM_RULE.items()}
    for k in ("r_x_scale", "r_y_scale", "K_x", "K_y"):
        _positive(out[k], f"{path}.{k}")
    return out


def normalize_bifurcate(cfg: dict, seed_override: int | None = None) -> dict:
    _check_keys(cfg, {"seed", "sweep", "initial", "output_dir"}, set(), "config")
    sweep_cfg = cfg.get("sweep", {})
    if not isinstance(sweep_cfg, dict):
        raise ConfigError("config.sweep must be an object")
    _check_keys(sweep_cfg, set(DEFAULT_SWEEP) | {"param_rule"}, set(), "sweep")
    sweep = {
        "r_min": _num(sweep_cfg, "r_min", "sweep", default=DEFAULT_SWEEP["r_min"]),
        "r_max": _num(sweep_cfg, "r_max", "sweep", default=DEFAULT_SWEEP["r_max"]),
        "n_r": _num(sweep_cfg, "n_r", "sweep", default=DEFAULT_SWEEP["n_r"], integer=True),
        "n_burn": _num(sweep_cfg, "n_burn", "sweep", default=DEFAULT_SWEEP["n_burn"], integer=True),
        "n_keep": _num(sweep_cfg, "n_keep", "sweep", default=DEFAULT_SWEEP["n_keep"], integer=True),
        "epsilon": _num(sweep_cfg, "epsilon", "sweep", default=DEFAULT_SWEEP["epsilon"]),
        "continuation": _bool(sweep_cfg, "continuation", "sweep", False),
        "param_rule": normalize_sweep_rule(sweep_cfg.get("param_rule")),
    }
    if sweep["r_min"] >= sweep["r_max"]:
        raise ConfigError("sweep.r_min must be < sweep.r_max")
    if sweep["n_r"] < 2:
        raise ConfigError("sweep.n_r must be >= 2")
    if sweep["n_burn"] < 0 or sweep["n_keep"] < 1:
        raise ConfigError("sweep.n_burn must be >= 0 and sweep.n_keep >= 1")
    _positive(sweep["epsilon"], "sweep.epsilon")
    return {
        "seed": _normalize_seed(cfg, seed_override),
        "sweep": sweep,
        "initial": normalize_initial(cfg.get("initial")),
    }


def normalize_perturbations(entries, master_seed: int, n_steps: int,
                            config_dir: str) -> list[dict]:
    if not isinstance(entries, list) or not entries:
        raise ConfigError("config.perturbations must be a non-empty array")
    out = []
    targets = set()
    for i, entry in enumerate(entries):
        path = f"perturbations[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{path} must be an object")
        target = entry.get("target")
        if target not in PERTURB_TARGETS:
            raise ConfigError(f"{path}.target must be one of {PERTURB_TARGETS}")
        if target in targets:
            raise ConfigError(f"{path}.target {target!r} used twice")
        targets.add(target)
        if "events_file" in entry:
            _check_keys(entry, {"target", "events_file"}, {"target", "events_file"}, path)
            fname = entry["events_file"]
            if not isinstance(fname, str):
                raise ConfigError(f"{path}.events_file must be a string")
            # resolve relative to the config file so configs are portable
            resolved = fname if os.path.isabs(fname) else os.path.join(config_dir, fname)
            out.append({"target": target, "events_file": resolved})
            continue
        _check_keys(entry, {"target", "rate", "low", "high", "seed", "horizon"},
                    {"target", "rate", "low", "high"}, path)
        rate = _num(entry, "rate", path)
        low = _num(entry, "low", path)
        high = _num(entry, "high", path)
        _positive(rate, f"{path}.rate")
        if low >= high:
            raise ConfigError(f"{path}: low must be < high")
        # per-schedule seed defaults to master seed + position
        seed = _num(entry, "seed", path, default=master_seed + i, integer=True)
        horizon = _num(entry, "horizon", path, default=n_steps, integer=True)
        if horizon < 1:
            raise ConfigError(f"{path}.horizon must be >= 1")
        out.append({"target": target, "rate": rate, "low": low, "high": high,
                    "seed": seed, "horizon": horizon})
    return out


def normalize_perturb(cfg: dict, config_dir: str,
                      seed_override: int | None = None) -> dict:
    _check_keys(cfg, {"seed", "params", "initial", "n_steps", "perturbations",
                      "output_dir"},
                {"params", "n_steps", "perturbations"}, "config")
    base = normalize_simulate(
        {k: cfg[k] for k in ("seed", "params", "initial", "n_steps") if k in cfg},
        seed_override)
    base["perturbations"] = normalize_perturbations(
        cfg["perturbations"], base["seed"], base["n_steps"], config_dir)
    return base


def normalize_detectors(cfg: dict | None, n_steps: int) -> dict:
    if cfg is None:
        cfg = {}
    _check_keys(cfg, {"max_lag", "granger_order", "ccm", "thresholds"}, set(),
                "detectors")
    max_lag = _num(cfg, "max_lag", "detectors", default=20, integer=True)
    order = _num(cfg, "granger_order", "detectors", default=3, integer=True)
    if max_lag < 1 or order < 1:
        raise ConfigError("detectors.max_lag and granger_order must be >= 1")
    ccm_cfg = cfg.get("ccm", {})
    if not isinstance(ccm_cfg, dict):
        raise ConfigError("detectors.ccm must be an object")
    _check_keys(ccm_cfg, {"E", "tau", "library_sizes"}, set(), "detectors.ccm")
    E = _num(ccm_cfg, "E", "detectors.ccm", default=3, integer=True)
    tau = _num(ccm_cfg, "tau", "detectors.ccm", default=1, integer=True)
    sizes = ccm_cfg.get("library_sizes")
    if sizes is not None:
        if (not isinstance(sizes, list) or not sizes
                or not all(isinstance(s, int) and not isinstance(s, bool) for s in sizes)):
            raise ConfigError("detectors.ccm.library_sizes must be an array of integers")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("detectors.ccm.library_sizes must be strictly increasing")
    thr_cfg = cfg.get("thresholds", {})
    if not isinstance(thr_cfg, dict):
        raise ConfigError("detectors.thresholds must be an object")
    _check_keys(thr_cfg, set(DEFAULT_THRESHOLDS), set(), "detectors.thresholds")
    thresholds = {k: _num(thr_cfg, k, "detectors.thresholds", default=v)
                  for k, v in DEFAULT_THRESHOLDS.items()}
    n_series = n_steps + 1
    if sizes is None:
        # mirror EmbeddingSpec.for_series_length: log-spaced 20 .. 80%
        import numpy as np
        hi = int(0.8 * n_series)
        if hi <= 20:
            raise ConfigError("n_steps too small for default ccm library sizes")
        sizes = [int(s) for s in
                 np.unique(np.geomspace(20, hi, 8).round().astype(int))]
    return {"max_lag": max_lag, "granger_order": order,
            "ccm": {"E": E, "tau": tau, "library_sizes": sizes},
            "thresholds": thresholds}


def normalize_detect_intervention(cfg: dict | None) -> dict | None:
    if cfg is None:
        return None
    _check_keys(cfg, {"clamp_x", "clamp_y", "n_steps", "epsilon", "n_burn"},
                {"clamp_x", "clamp_y"}, "intervention")
    out = {}
    for key in ("clamp_x", "clamp_y"):
        vals = cfg[key]
        if (not isinstance(vals, list) or not vals
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                           for v in vals)):
            raise ConfigError(f"intervention.{key} must be a non-empty number array")
        if any(v < 0 for v in vals):
            raise ConfigError(f"intervention.{key} values must be >= 0")
        out[key] = [float(v) for v in vals]
    out["n_steps"] = _num(cfg, "n_steps", "intervention", default=20000, integer=True)
    out["epsilon"] = _num(cfg, "epsilon", "intervention", default=0.01)
    out["n_burn"] = _num(cfg, "n_burn", "intervention", default=1000, integer=True)
    if out["n_steps"] < 10_000:
        raise ConfigError("intervention.n_steps must be >= 10000")
    _positive(out["epsilon"], "intervention.epsilon")
    if not 0 <= out["n_burn"] < out["n_steps"]:
        raise ConfigError("intervention.n_burn must be in [0, n_steps)")
    return out


def normalize_detect(cfg: dict, seed_override: int | None = None) -> dict:
    _check_keys(cfg, {"seed", "params", "initial", "n_steps", "detectors",
                      "intervention", "output_dir"},
                {"params", "n_steps"}, "config")
    base = normalize_simulate(
        {k: cfg[k] for k in ("seed", "params", "initial", "n_steps") if k in cfg},
        seed_override)
    base["detectors"] = normalize_detectors(cfg.get("detectors"), base["n_steps"])
    iv = normalize_detect_intervention(cfg.get("intervention"))
    if iv is not None:
        base["intervention"] = iv
    max_lib = base["detectors"]["ccm"]["library_sizes"][-1]
    E, tau = base["detectors"]["ccm"]["E"], base["detectors"]["ccm"]["tau"]
    n_series = base["n_steps"] + 1
    if n_series < max_lib + E * tau:
        raise ConfigError("n_steps too small for the ccm library sizes")
    if n_series <= 4 * base["detectors"]["max_lag"]:
        raise ConfigError("n_steps too small for detectors.max_lag")
    if n_series < 20 * base["detectors"]["granger_order"]:
        raise ConfigError("n_steps too small for detectors.granger_order")
    return base


def normalize_intervene(cfg: dict, seed_override: int | None = None) -> dict:
    _check_keys(cfg, {"seed", "params", "initial", "intervention", "output_dir"},
                {"params", "intervention"}, "config")
    iv_cfg = _section(cfg, "intervention", "config")
    _check_keys(iv_cfg, {"chain", "value", "n_steps", "epsilon", "n_burn"},
                {"chain", "value"}, "intervention")
    chain = iv_cfg.get("chain")
    if chain not in ("x", "y"):
        raise ConfigError("intervention.chain must be 'x' or 'y'")
    value = _num(iv_cfg, "value", "intervention")
    if value is None or value < 0:
        raise ConfigError("intervention.value must be >= 0")
    iv = {
        "chain": chain,
        "value": value,
        "n_steps": _num(iv_cfg, "n_steps", "intervention", default=20000, integer=True),
        "epsilon": _num(iv_cfg, "epsilon", "intervention", default=0.01),
        "n_burn": _num(iv_cfg, "n_burn", "intervention", default=1000, integer=True),
    }
    if iv["n_steps"] < 10_000:
        raise ConfigError("intervention.n_steps must be >= 10000")
    _positive(iv["epsilon"], "intervention.epsilon")
    if not 0 <= iv["n_burn"] < iv["n_steps"]:
        raise ConfigError("intervention.n_burn must be in [0, n_steps)")
    return {
        "seed": _normalize_seed(cfg, seed_override),
        "params": normalize_params(_section(cfg, "params", "config")),
        "initial": normalize_initial(cfg.get("initial")),
        "intervention": iv,
    }
