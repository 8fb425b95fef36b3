"""Command-line entry point.

Subcommands: simulate | bifurcate | perturb | detect | intervene. Each
takes a JSON config file; the only flag overrides are --seed and
--outdir. Every command is a pure function from (config bytes, seed) to
output bytes: CSVs use "\\n" line endings, one header row and at most 6
significant digits, and a normalized config echo is written next to
every output.

Exit codes: 0 ok, 2 config error, 3 numerical divergence, 4 detector
degeneracy. CHAINLAB_THREADS (the only environment variable consulted)
sets the sweep worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import config as cfgmod
from .bifurcation import SweepSpec, scaled_param_rule, sweep
from .causality import (DetectorThresholds, EmbeddingSpec, adjudicate, ccm,
                        granger, intervene, interventional_shift, lagged_xcorr)
from .dynamics import ChainParams, ChainState, simulate
from .errors import (ChainLabError, ConfigError, DegenerateSeriesError,
                     DomainViolationError, InsufficientNeighborsError,
                     NonFiniteError, SingularDesignError)
from .perturbation import ExplicitSchedule, generate_schedule, simulate_perturbed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_DEGENERATE = 4


def _fmt(v: float) -> str:
    """Shortest representation capped at 6 significant digits."""
    return format(float(v), ".6g")


def _round6(obj):
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {k: _round6(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round6(v) for v in obj]
    return obj


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_echo(outdir: str, echo: dict) -> None:
    _write_text(os.path.join(outdir, "config_echo.json"),
                json.dumps(echo, indent=2, sort_keys=True) + "\n")


def _write_trajectory_csv(path: str, traj) -> None:
    lines = ["n,x,y"]
    for i in range(len(traj)):
        lines.append(f"{i},{_fmt(traj.xs[i])},{_fmt(traj.ys[i])}")
    _write_text(path, "\n".join(lines) + "\n")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _params_from(cfg: dict) -> ChainParams:
    return ChainParams(**cfg["params"])


def _initial_from(cfg: dict) -> ChainState:
    return ChainState(cfg["initial"]["x"], cfg["initial"]["y"])


def cmd_simulate(cfg: dict, outdir: str) -> int:
    _write_echo(outdir, cfg)
    traj = simulate(_initial_from(cfg), _params_from(cfg), cfg["n_steps"])
    _write_trajectory_csv(os.path.join(outdir, "trajectory.csv"), traj)
    _log(f"simulate: wrote {len(traj)} states")
    return EXIT_OK


def cmd_bifurcate(cfg: dict, outdir: str, n_threads: int) -> int:
    _write_echo(outdir, cfg)
    sw = cfg["sweep"]
    spec = SweepSpec(r_min=sw["r_min"], r_max=sw["r_max"], n_r=sw["n_r"],
                     n_burn=sw["n_burn"], n_keep=sw["n_keep"],
                     epsilon=sw["epsilon"],
                     param_rule=scaled_param_rule(**sw["param_rule"]))
    diagram = sweep(spec, _initial_from(cfg),
                    continuation=sw["continuation"], n_threads=n_threads)
    lines = ["r,chain,value"]
    for i, r in enumerate(diagram.r_values):
        for chain, cells in (("x", diagram.x_cells[i]), ("y", diagram.y_cells[i])):
            for v in cells:  # cells are sorted, so rows sort by (r, chain, value)
                lines.append(f"{_fmt(r)},{chain},{_fmt(v)}")
    _write_text(os.path.join(outdir, "bifurcation.csv"), "\n".join(lines) + "\n")
    n_div = int(diagram.diverged.sum())
    _log(f"bifurcate: {len(diagram)} cells, {n_div} diverged")
    return EXIT_OK


def _build_schedules(cfg: dict):
    schedules = []
    for entry in cfg["perturbations"]:
        if "events_file" in entry:
            schedules.append(_load_events_file(entry["target"], entry["events_file"]))
        else:
            schedules.append(generate_schedule(
                entry["target"], entry["rate"], entry["low"], entry["high"],
                entry["seed"], entry["horizon"]))
    return schedules


def _load_events_file(target: str, path: str) -> ExplicitSchedule:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read events file: {e}") from None
    if not lines or lines[0] != "iteration,target,value":
        raise ConfigError(f"{path}: expected header 'iteration,target,value'")
    events = []
    for ln in lines[1:]:
        if not ln:
            continue
        parts = ln.split(",")
        if len(parts) != 3:
            raise ConfigError(f"{path}: malformed row {ln!r}")
        if parts[1] != target:
            raise ConfigError(f"{path}: row target {parts[1]!r} != {target!r}")
        try:
            events.append((int(parts[0]), float(parts[2])))
        except ValueError:
            raise ConfigError(f"{path}: malformed row {ln!r}") from None
    try:
        return ExplicitSchedule(target, tuple(events))
    except DomainViolationError as e:
        raise ConfigError(f"{path}: {e}") from None


def cmd_perturb(cfg: dict, outdir: str) -> int:
    _write_echo(outdir, cfg)
    schedules = _build_schedules(cfg)
    traj, applied = simulate_perturbed(_initial_from(cfg), _params_from(cfg),
                                       schedules, cfg["n_steps"])
    _write_trajectory_csv(os.path.join(outdir, "trajectory.csv"), traj)
    # events are consumed back via events_file, so keep full precision
    lines = ["iteration,target,value"]
    for ev in applied:
        lines.append(f"{ev.iteration},{ev.target},{ev.value!r}")
    _write_text(os.path.join(outdir, "events.csv"), "\n".join(lines) + "\n")
    _log(f"perturb: wrote {len(traj)} states, {len(applied)} events applied")
    return EXIT_OK


def cmd_detect(cfg: dict, outdir: str) -> int:
    _write_echo(outdir, cfg)
    params = _params_from(cfg)
    initial = _initial_from(cfg)
    traj = simulate(initial, params, cfg["n_steps"])
    det = cfg["detectors"]
    xc = lagged_xcorr(traj, det["max_lag"])
    gr = granger(traj, det["granger_order"])
    spec = EmbeddingSpec(E=det["ccm"]["E"], tau=det["ccm"]["tau"],
                         library_sizes=tuple(det["ccm"]["library_sizes"]))
    cc = ccm(traj, spec)
    iv = None
    if "intervention" in cfg:
        ivc = cfg["intervention"]
        shift_yx = interventional_shift(
            params, "y", ivc["clamp_y"], "x", ivc["n_steps"], ivc["epsilon"],
            initial=initial, n_burn=ivc["n_burn"])
        shift_xy = interventional_shift(
            params, "x", ivc["clamp_x"], "y", ivc["n_steps"], ivc["epsilon"],
            initial=initial, n_burn=ivc["n_burn"])
        iv = {"y_to_x": {"shift": shift_yx, "clamp_values": ivc["clamp_y"]},
              "x_to_y": {"shift": shift_xy, "clamp_values": ivc["clamp_x"]}}
    thresholds = DetectorThresholds(**det["thresholds"])
    report = adjudicate(xcorr=xc, granger_result=gr, ccm_result=cc,
                        interventional=iv, thresholds=thresholds,
                        extra_config={
                            "max_lag": det["max_lag"],
                            "granger_order": det["granger_order"],
                            "ccm": det["ccm"],
                            "params": cfg["params"],
                            "n_steps": cfg["n_steps"],
                        })
    doc = _round6({
        "xcorr": report.xcorr,
        "granger": report.granger,
        "ccm": report.ccm,
        "interventional": report.interventional,
        "verdict": report.verdict,
        "config": report.config,
    })
    _write_text(os.path.join(outdir, "report.json"),
                json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
    _log(f"detect: verdict {report.verdict['overall']}")
    return EXIT_OK


def cmd_intervene(cfg: dict, outdir: str) -> int:
    _write_echo(outdir, cfg)
    params = _params_from(cfg)
    initial = _initial_from(cfg)
    iv = cfg["intervention"]
    clamped = intervene(params, iv["chain"], iv["value"], initial, iv["n_steps"])
    _write_trajectory_csv(os.path.join(outdir, "trajectory.csv"), clamped)
    probe = "y" if iv["chain"] == "x" else "x"
    shift = interventional_shift(params, iv["chain"], [iv["value"]], probe,
                                 iv["n_steps"], iv["epsilon"],
                                 initial=initial, n_burn=iv["n_burn"])
    threshold = cfgmod.DEFAULT_THRESHOLDS["shift"]
    doc = _round6({
        "clamp_chain": iv["chain"],
        "clamp_value": iv["value"],
        "probe_chain": probe,
        "epsilon": iv["epsilon"],
        "n_burn": iv["n_burn"],
        "n_steps": iv["n_steps"],
        "shift": shift,
        "threshold": threshold,
        "exceeds_threshold": bool(shift > threshold),
    })
    _write_text(os.path.join(outdir, "shift.json"),
                json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
    _log(f"intervene: shift {shift:.6g}")
    return EXIT_OK


def _thread_count() -> int:
    raw = os.environ.get("CHAINLAB_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CHAINLAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"CHAINLAB_THREADS must be >= 1, got {n!r}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainlab",
        description="Coupled growth-chain simulations and causal-direction detectors.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "iterate the coupled map, write trajectory.csv",
        "bifurcate": "sweep r and write bifurcation.csv",
        "perturb": "simulate with scheduled parameter shocks",
        "detect": "run causal-direction detectors, write report.json",
        "intervene": "clamp one chain, write trajectory.csv and shift.json",
    }
    for name, help_text in helps.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a JSON experiment config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("-o", "--outdir", default=None,
                       help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = cfgmod.load_json(args.config)
        outdir = args.outdir or raw.get("output_dir") or "."
        if not isinstance(outdir, str):
            raise ConfigError("output_dir must be a string")
        config_dir = os.path.dirname(os.path.abspath(args.config))
        if args.command == "simulate":
            cfg = cfgmod.normalize_simulate(raw, args.seed)
        elif args.command == "bifurcate":
            cfg = cfgmod.normalize_bifurcate(raw, args.seed)
        elif args.command == "perturb":
            cfg = cfgmod.normalize_perturb(raw, config_dir, args.seed)
        elif args.command == "detect":
            cfg = cfgmod.normalize_detect(raw, args.seed)
        else:
            cfg = cfgmod.normalize_intervene(raw, args.seed)
        n_threads = _thread_count()
        os.makedirs(outdir, exist_ok=True)

        if args.command == "simulate":
            return cmd_simulate(cfg, outdir)
        if args.command == "bifurcate":
            return cmd_bifurcate(cfg, outdir, n_threads)
        if args.command == "perturb":
            return cmd_perturb(cfg, outdir)
        if args.command == "detect":
            return cmd_detect(cfg, outdir)
        return cmd_intervene(cfg, outdir)
    except (ConfigError, DomainViolationError) as e:
        _log(f"config error: {e}")
        return EXIT_CONFIG
    except NonFiniteError as e:
        _log(f"divergence: {e}")
        return EXIT_DIVERGENCE
    except (DegenerateSeriesError, SingularDesignError,
            InsufficientNeighborsError) as e:
        _log(f"detector degeneracy: {e}")
        return EXIT_DEGENERATE
    except ChainLabError as e:
        _log(f"error: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
