"""Seeded stochastic regime shocks for the coupled map.

A schedule redraws one chain parameter from a uniform distribution at
exponentially distributed waiting times, modeling exogenous top-down
shocks. Waiting times accumulate in continuous time and map to discrete
iterations by ceiling, which preserves the exponential spacing
statistics while the dynamics stay discrete.

Reproducibility contract: schedules are generated with numpy's PCG64
bit generator; for each event one uniform draw is consumed for the
waiting time (inverse CDF, w = -log1p(-u)/rate) and then one for the
redraw value, in that order. This draw order and generator are fixed;
changing either is a breaking change because downstream outputs are
compared byte-for-byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import PARAM_FIELDS, ChainParams, ChainState, Trajectory
from .errors import DomainViolationError, NonFiniteError

__all__ = [
    "PerturbationSchedule",
    "ExplicitSchedule",
    "AppliedEvent",
    "generate_schedule",
    "simulate_perturbed",
]

_PARAM_RANK = {name: i for i, name in enumerate(PARAM_FIELDS)}


def _check_target(target: str) -> None:
    if target not in PARAM_FIELDS:
        raise DomainViolationError(
            f"target must be one of {PARAM_FIELDS}, got {target!r}")


def _check_events(events) -> tuple[tuple[int, float], ...]:
    out = []
    last = -1
    for it, val in events:
        it = int(it)
        val = float(val)
        if it <= last:
            raise DomainViolationError("event iterations must be strictly increasing")
        if not math.isfinite(val):
            raise DomainViolationError(f"event value must be finite, got {val!r}")
        out.append((it, val))
        last = it
    return tuple(out)


@dataclass(frozen=True)
class PerturbationSchedule:
    """Realized shock sequence for one target parameter.

    ``events`` holds (iteration index, new value) pairs with strictly
    increasing indices; when two continuous event times ceil to the same
    iteration only the last redraw survives. ``waiting_times`` keeps the
    raw exponential draws (one per redraw, including any collided ones)
    for statistical checks. Regenerating from (target, rate, low, high,
    seed, horizon) reproduces everything exactly.
    """

    target: str
    rate: float
    low: float
    high: float
    seed: int
    horizon: int
    events: tuple[tuple[int, float], ...]
    waiting_times: tuple[float, ...]

    def __post_init__(self):
        _check_target(self.target)
        object.__setattr__(self, "events", _check_events(self.events))
        for it, val in self.events:
            if not (self.low <= val <= self.high):
                raise DomainViolationError(
                    f"event value {val!r} outside [{self.low}, {self.high}]")

    def spec_dict(self) -> dict:
        return {"target": self.target, "rate": self.rate, "low": self.low,
                "high": self.high, "seed": self.seed, "horizon": self.horizon}


@dataclass(frozen=True)
class ExplicitSchedule:
    """Shock sequence given directly as events, e.g. loaded from a file."""

    target: str
    events: tuple[tuple[int, float], ...]

    def __post_init__(self):
        _check_target(self.target)
        object.__setattr__(self, "events", _check_events(self.events))

    def spec_dict(self) -> dict:
        return {"target": self.target,
                "events": [[it, val] for it, val in self.events]}


@dataclass(frozen=True)
class AppliedEvent:
    iteration: int
    target: str
    value: float


def generate_schedule(target: str, rate: float, low: float, high: float,
                      seed: int, horizon: int) -> PerturbationSchedule:
    """Draw a shock schedule over ``horizon`` iterations.

    Waiting times are i.i.d. exponential with mean 1/rate (inverse CDF
    from the seeded generator), accumulated and rounded up to integer
    iteration indices; redraw values are i.i.d. uniform on [low, high).
    """
    _check_target(target)
    if not (math.isfinite(rate) and rate > 0):
        raise DomainViolationError(f"rate must be > 0, got {rate!r}")
    if not (math.isfinite(low) and math.isfinite(high) and low < high):
        raise DomainViolationError(f"need low < high, got {low!r}, {high!r}")
    if horizon < 1:
        raise DomainViolationError(f"horizon must be >= 1, got {horizon!r}")

    rng = np.random.Generator(np.random.PCG64(seed))
    t = 0.0
    events: list[tuple[int, float]] = []
    waits: list[float] = []
    while True:
        w = -math.log1p(-rng.random()) / rate
        t += w
        if t > horizon:
            break
        value = low + (high - low) * rng.random()
        waits.append(w)
        idx = math.ceil(t)
        if events and events[-1][0] == idx:
            events[-1] = (idx, value)  # same-iteration redraw: last one wins
        else:
            events.append((idx, value))
    return PerturbationSchedule(target=target, rate=float(rate), low=float(low),
                                high=float(high), seed=int(seed),
                                horizon=int(horizon), events=tuple(events),
                                waiting_times=tuple(waits))


def simulate_perturbed(initial: ChainState, params: ChainParams,
                       schedules, n_steps: int,
                       ) -> tuple[Trajectory, list[AppliedEvent]]:
    """Iterate the coupled map while applying scheduled parameter shocks.

    Identical to :func:`chainlab.dynamics.simulate` except that each
    event replaces its target parameter from the event's iteration
    onward (an event at iteration i first affects the step i -> i+1).
    Schedules must target distinct parameters; same-iteration events
    across schedules apply in the canonical parameter order. Returns the
    trajectory plus the log of events actually in force during the run,
    which is also embedded in the trajectory provenance.
    """
    if n_steps < 1:
        raise DomainViolationError(f"n_steps must be >= 1, got {n_steps!r}")
    schedules = list(schedules)
    targets = [s.target for s in schedules]
    if len(set(targets)) != len(targets):
        raise DomainViolationError("schedules must target distinct parameters")

    merged = sorted(
        ((it, _PARAM_RANK[s.target], s.target, val)
         for s in schedules for it, val in s.events),
        key=lambda e: (e[0], e[1]))

    cur = params.as_dict()
    xs = np.empty(n_steps + 1)
    ys = np.empty(n_steps + 1)
    x, y = initial.x, initial.y
    xs[0], ys[0] = x, y
    r_x, r_y = cur["r_x"], cur["r_y"]
    K_x, K_y = cur["K_x"], cur["K_y"]
    a_yx, a_xy = cur["a_yx"], cur["a_xy"]
    exp = math.exp
    isfinite = math.isfinite
    applied: list[AppliedEvent] = []
    ptr = 0
    n_events = len(merged)
    for n in range(n_steps):
        while ptr < n_events and merged[ptr][0] <= n:
            it, _, target, value = merged[ptr]
            cur[target] = value
            # re-validate: shocks must not drive params out of domain
            ChainParams(**cur)
            r_x, r_y = cur["r_x"], cur["r_y"]
            K_x, K_y = cur["K_x"], cur["K_y"]
            a_yx, a_xy = cur["a_yx"], cur["a_xy"]
            applied.append(AppliedEvent(it, target, value))
            ptr += 1
        try:
            nx = x * exp(r_x * (K_x - x - a_yx * y))
        except OverflowError:
            raise NonFiniteError("growth exponent overflow", chain="x",
                                 iteration=n + 1) from None
        try:
            ny = y * exp(r_y * (K_y - y - a_xy * x))
        except OverflowError:
            raise NonFiniteError("growth exponent overflow", chain="y",
                                 iteration=n + 1) from None
        if not isfinite(nx):
            raise NonFiniteError("non-finite map value", chain="x", iteration=n + 1)
        if not isfinite(ny):
            raise NonFiniteError("non-finite map value", chain="y", iteration=n + 1)
        x, y = nx, ny
        xs[n + 1], ys[n + 1] = x, y

    prov = {
        "kind": "perturbed",
        "initial": {"x": initial.x, "y": initial.y},
        "params": params.as_dict(),
        "n_steps": int(n_steps),
        "schedules": [s.spec_dict() for s in schedules],
        "applied_events": [[e.iteration, e.target, e.value] for e in applied],
    }
    return Trajectory(xs, ys, params, prov), applied


def regenerate_perturbed(prov: dict) -> Trajectory:
    """Rebuild a perturbed trajectory from its provenance record."""
    params = ChainParams(**prov["params"])
    initial = ChainState(prov["initial"]["x"], prov["initial"]["y"])
    schedules = []
    for spec in prov["schedules"]:
        if "events" in spec:
            schedules.append(ExplicitSchedule(
                spec["target"], tuple((int(i), float(v)) for i, v in spec["events"])))
        else:
            schedules.append(generate_schedule(
                spec["target"], spec["rate"], spec["low"], spec["high"],
                spec["seed"], spec["horizon"]))
    traj, _ = simulate_perturbed(initial, params, schedules, prov["n_steps"])
    return traj
