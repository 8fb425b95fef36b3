"""Deterministic update kernels for two coupled growth chains.

The discrete model is the exponential logistic map (the Ricker map of
population ecology)

    x' = x * exp(r * (K - x))

and its two-chain coupled form, where each chain's effective capacity is
shifted by the other chain's current value:

    x' = x * exp(r_x * (K_x - x - a_yx * y))
    y' = y * exp(r_y * (K_y - y - a_xy * x))

Both updates read the *old* state (synchronous update); an asynchronous
scheme would change the dynamics. The continuous-time counterparts (the
coupled logistic vector field and the Lotka-Volterra system) are
integrated with fixed-step classical RK4 so that runs are bit-for-bit
reproducible.

Everything here is a pure function of its inputs. Any non-finite
intermediate aborts the run with the offending iteration; values are
never clamped, because clamping would silently distort the attractor
structure downstream modules measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .errors import DomainViolationError, NonFiniteError

__all__ = [
    "ChainParams",
    "ChainState",
    "LVParams",
    "Trajectory",
    "step_ricker",
    "step_logistic_map",
    "step_coupled",
    "simulate",
    "integrate_ode",
    "integrate_lv",
    "lv_invariant",
    "lyapunov_exponent",
    "regenerate",
]

#: Canonical order of the tunable chain parameters. Regime shocks that
#: land on the same iteration apply in this order.
PARAM_FIELDS = ("r_x", "r_y", "K_x", "K_y", "a_yx", "a_xy")


@dataclass(frozen=True)
class ChainParams:
    """Growth rates, carrying capacities and couplings of the two chains.

    ``a_yx`` is the weight with which chain y enters chain x's growth
    exponent (and ``a_xy`` the reverse). ``a_yx != 0`` with ``a_xy == 0``
    makes the influence unidirectional, from y to x.
    """

    r_x: float
    r_y: float
    K_x: float
    K_y: float
    a_yx: float = 0.0
    a_xy: float = 0.0

    def __post_init__(self):
        for name in ("r_x", "r_y", "K_x", "K_y"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainViolationError(
                    f"{name} must be finite and > 0, got {v!r}")
        for name in ("a_yx", "a_xy"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise DomainViolationError(f"{name} must be finite, got {v!r}")

    def with_value(self, name: str, value: float) -> "ChainParams":
        """Copy of these params with one field replaced."""
        if name not in PARAM_FIELDS:
            raise DomainViolationError(f"unknown parameter {name!r}")
        return replace(self, **{name: value})

    def fixed_point(self) -> tuple[float, float] | None:
        """Interior fixed point (x*, y*) of the coupled map, if it exists.

        Solves x* = K_x - a_yx*y*, y* = K_y - a_xy*x*. Returns None when
        the coupling product makes the system degenerate or pushes the
        solution out of the positive quadrant.
        """
        det = 1.0 - self.a_yx * self.a_xy
        if det == 0.0:
            return None
        x = (self.K_x - self.a_yx * self.K_y) / det
        y = (self.K_y - self.a_xy * self.K_x) / det
        if x <= 0.0 or y <= 0.0:
            return None
        return (x, y)

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in PARAM_FIELDS}


@dataclass(frozen=True)
class ChainState:
    """One point of the two-chain system: feature values and iteration index."""

    x: float
    y: float
    n: int = 0

    def __post_init__(self):
        for name in ("x", "y"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise DomainViolationError(
                    f"{name} must be finite and >= 0, got {v!r}")
        if self.n < 0:
            raise DomainViolationError(f"n must be >= 0, got {self.n!r}")


@dataclass(frozen=True)
class LVParams:
    """Coefficients of the Lotka-Volterra predator-prey system."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainViolationError(
                    f"{name} must be finite and > 0, got {v!r}")

    def as_dict(self) -> dict[str, float]:
        return {k: float(getattr(self, k)) for k in ("a", "b", "c", "d")}


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed sequence of two-chain states.

    ``xs[i]``/``ys[i]`` are the chain values at iteration i (iteration
    indices run 0..len-1). ``provenance`` records everything needed to
    regenerate the sequence bit-identically; see :func:`regenerate`.
    """

    xs: np.ndarray
    ys: np.ndarray
    params: ChainParams | LVParams | None
    provenance: dict

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.shape != ys.shape or xs.ndim != 1 or xs.size == 0:
            raise DomainViolationError("xs and ys must be equal-length 1-d arrays")
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def __len__(self) -> int:
        return int(self.xs.size)

    def state(self, i: int) -> ChainState:
        idx = i if i >= 0 else len(self) + i
        return ChainState(float(self.xs[idx]), float(self.ys[idx]), n=idx)

    @property
    def states(self) -> Iterator[ChainState]:
        for i in range(len(self)):
            yield ChainState(float(self.xs[i]), float(self.ys[i]), n=i)

    @property
    def final(self) -> ChainState:
        i = len(self) - 1
        return ChainState(float(self.xs[i]), float(self.ys[i]), n=i)

    @classmethod
    def from_series(cls, xs, ys, params: ChainParams | None = None,
                    provenance: dict | None = None) -> "Trajectory":
        """Wrap two externally produced series (e.g. surrogates) for the detectors."""
        prov = {"kind": "external"}
        if provenance:
            prov.update(provenance)
        return cls(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float),
                   params, prov)


def _check_pos(name: str, v: float) -> None:
    if not (math.isfinite(v) and v > 0):
        raise DomainViolationError(f"{name} must be finite and > 0, got {v!r}")


def _check_nonneg(name: str, v: float) -> None:
    if not (math.isfinite(v) and v >= 0):
        raise DomainViolationError(f"{name} must be finite and >= 0, got {v!r}")


def step_ricker(x: float, r: float, K: float) -> float:
    """One step of the exponential logistic (Ricker) map x*exp(r*(K-x)).

    K is the interior fixed point; zero is absorbing. Raises
    NonFiniteError instead of returning an overflowed value.
    """
    _check_nonneg("x", x)
    _check_pos("r", r)
    _check_pos("K", K)
    try:
        nxt = x * math.exp(r * (K - x))
    except OverflowError:
        raise NonFiniteError("growth exponent overflow") from None
    if not math.isfinite(nxt):
        raise NonFiniteError("non-finite map value")
    return nxt


def step_logistic_map(x: float, r: float) -> float:
    """One step of the quadratic logistic map r*x*(1-x) on [0, 1]."""
    if not (math.isfinite(x) and 0.0 <= x <= 1.0):
        raise DomainViolationError(f"x must be in [0, 1], got {x!r}")
    if not (math.isfinite(r) and 0.0 < r <= 4.0):
        raise DomainViolationError(f"r must be in (0, 4], got {r!r}")
    return r * x * (1.0 - x)


def step_coupled(state: ChainState, params: ChainParams) -> ChainState:
    """One synchronous step of the coupled map; both updates read the old state."""
    x, y = state.x, state.y
    p = params
    try:
        nx = x * math.exp(p.r_x * (p.K_x - x - p.a_yx * y))
    except OverflowError:
        raise NonFiniteError("growth exponent overflow", chain="x",
                             iteration=state.n + 1) from None
    try:
        ny = y * math.exp(p.r_y * (p.K_y - y - p.a_xy * x))
    except OverflowError:
        raise NonFiniteError("growth exponent overflow", chain="y",
                             iteration=state.n + 1) from None
    if not math.isfinite(nx):
        raise NonFiniteError("non-finite map value", chain="x", iteration=state.n + 1)
    if not math.isfinite(ny):
        raise NonFiniteError("non-finite map value", chain="y", iteration=state.n + 1)
    return ChainState(nx, ny, n=state.n + 1)


def simulate(initial: ChainState, params: ChainParams, n_steps: int) -> Trajectory:
    """Iterate the coupled map n_steps times from ``initial``.

    Returns a trajectory of length n_steps + 1 whose iteration indices
    start at 0 (the given state is taken as iteration 0). Deterministic:
    identical inputs give bit-identical output. NonFiniteError carries
    the iteration at which divergence occurred.
    """
    if n_steps < 1:
        raise DomainViolationError(f"n_steps must be >= 1, got {n_steps!r}")
    xs = np.empty(n_steps + 1)
    ys = np.empty(n_steps + 1)
    x, y = initial.x, initial.y
    xs[0] = x
    ys[0] = y
    # locals for speed in the hot loop
    r_x, r_y, K_x, K_y = params.r_x, params.r_y, params.K_x, params.K_y
    a_yx, a_xy = params.a_yx, params.a_xy
    exp = math.exp
    isfinite = math.isfinite
    for n in range(n_steps):
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
        xs[n + 1] = x
        ys[n + 1] = y
    prov = {
        "kind": "coupled_map",
        "initial": {"x": initial.x, "y": initial.y},
        "params": params.as_dict(),
        "n_steps": int(n_steps),
    }
    return Trajectory(xs, ys, params, prov)


def _coupled_field(x: float, y: float, p: ChainParams) -> tuple[float, float]:
    return (p.r_x * x * (p.K_x - x - p.a_yx * y),
            p.r_y * y * (p.K_y - y - p.a_xy * x))


def _lv_field(s1: float, s2: float, p: LVParams) -> tuple[float, float]:
    return (p.a * s1 - p.b * s1 * s2,
            -p.c * s2 + p.d * s1 * s2)


def _rk4(field, state0, params, dt: float, t_end: float, kind: str,
         prov_extra: dict) -> tuple[np.ndarray, np.ndarray, dict]:
    if not (math.isfinite(dt) and dt > 0):
        raise DomainViolationError(f"dt must be > 0, got {dt!r}")
    if not (math.isfinite(t_end) and t_end > dt):
        raise DomainViolationError(f"t_end must exceed dt, got {t_end!r}")
    n_steps = int(round(t_end / dt))
    xs = np.empty(n_steps + 1)
    ys = np.empty(n_steps + 1)
    u, v = state0
    xs[0], ys[0] = u, v
    h = dt
    for n in range(n_steps):
        k1u, k1v = field(u, v, params)
        k2u, k2v = field(u + 0.5 * h * k1u, v + 0.5 * h * k1v, params)
        k3u, k3v = field(u + 0.5 * h * k2u, v + 0.5 * h * k2v, params)
        k4u, k4v = field(u + h * k3u, v + h * k3v, params)
        u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not (math.isfinite(u) and math.isfinite(v)):
            raise NonFiniteError("integration blow-up", iteration=n + 1)
        xs[n + 1], ys[n + 1] = u, v
    prov = {"kind": kind, "dt": float(dt), "t_end": float(t_end),
            "n_steps": n_steps}
    prov.update(prov_extra)
    return xs, ys, prov


def integrate_ode(initial: ChainState, params: ChainParams, dt: float,
                  t_end: float) -> Trajectory:
    """Fixed-step RK4 for the coupled continuous logistic system.

    dx/dt = r_x*x*(K_x - x - a_yx*y), dy/dt = r_y*y*(K_y - y - a_xy*x).
    One recorded sample per step; iteration index i corresponds to time i*dt.
    """
    xs, ys, prov = _rk4(_coupled_field, (initial.x, initial.y), params, dt,
                        t_end, "ode",
                        {"initial": {"x": initial.x, "y": initial.y},
                         "params": params.as_dict()})
    return Trajectory(xs, ys, params, prov)


def integrate_lv(s1: float, s2: float, lv: LVParams, dt: float,
                 t_end: float) -> Trajectory:
    """Fixed-step RK4 for the Lotka-Volterra predator-prey system.

    dS1/dt = a*S1 - b*S1*S2, dS2/dt = -c*S2 + d*S1*S2, with prey S1 and
    predator S2; the interior equilibrium is (c/d, a/b). Generic orbits
    are closed and conserve :func:`lv_invariant`.
    """
    _check_pos("s1", s1)
    _check_pos("s2", s2)
    xs, ys, prov = _rk4(_lv_field, (s1, s2), lv, dt, t_end, "lv",
                        {"initial": {"s1": float(s1), "s2": float(s2)},
                         "params": lv.as_dict()})
    return Trajectory(xs, ys, lv, prov)


def lv_invariant(s1: float, s2: float, lv: LVParams) -> float:
    """First integral d*S1 - c*ln(S1) + b*S2 - a*ln(S2) of the LV flow."""
    return lv.d * s1 - lv.c * math.log(s1) + lv.b * s2 - lv.a * math.log(s2)


def lyapunov_exponent(kind: str, params, x0, n_iter: int,
                      n_burn: int = 1000) -> float:
    """Largest Lyapunov exponent of one of the supported maps.

    kind is "logistic" (params = r), "ricker" (params = (r, K)) or
    "coupled" (params = ChainParams, x0 = (x, y)). Scalar maps average
    ln|f'(x_n)| after burn-in; the coupled map propagates a tangent
    vector through the Jacobian with per-step renormalization. Burn-in
    defaults to 1000 iterations because transients near period-doubling
    points decay slowly.
    """
    if n_iter < 10_000:
        raise DomainViolationError(f"n_iter must be >= 10000, got {n_iter!r}")
    if n_burn < 0:
        raise DomainViolationError(f"n_burn must be >= 0, got {n_burn!r}")
    log, exp, isfinite = math.log, math.exp, math.isfinite

    if kind == "logistic":
        r = float(params)
        x = float(x0)
        if not (0.0 < r <= 4.0):
            raise DomainViolationError(f"r must be in (0, 4], got {r!r}")
        for _ in range(n_burn):
            x = r * x * (1.0 - x)
        total = 0.0
        for _ in range(n_iter):
            d = r * (1.0 - 2.0 * x)
            if d == 0.0:
                raise NonFiniteError("derivative vanished on the orbit")
            total += log(abs(d))
            x = r * x * (1.0 - x)
        return total / n_iter

    if kind == "ricker":
        r, K = float(params[0]), float(params[1])
        _check_pos("r", r)
        _check_pos("K", K)
        x = float(x0)
        for _ in range(n_burn):
            x = step_ricker(x, r, K)
        total = 0.0
        for _ in range(n_iter):
            # ln|f'(x)| = r*(K-x) + ln|1 - r*x|, computed without the exp
            g = 1.0 - r * x
            if g == 0.0:
                raise NonFiniteError("derivative vanished on the orbit")
            total += r * (K - x) + log(abs(g))
            x = step_ricker(x, r, K)
        return total / n_iter

    if kind == "coupled":
        p = params
        if not isinstance(p, ChainParams):
            raise DomainViolationError("coupled kind needs ChainParams")
        if isinstance(x0, ChainState):
            x, y = x0.x, x0.y
        else:
            x, y = float(x0[0]), float(x0[1])
        st = ChainState(x, y)
        for _ in range(n_burn):
            st = step_coupled(st, p)
        x, y = st.x, st.y
        vx, vy = 1.0, 1.0 / math.sqrt(2.0)  # arbitrary non-axis direction
        norm = math.hypot(vx, vy)
        vx, vy = vx / norm, vy / norm
        total = 0.0
        for n in range(n_iter):
            try:
                ex = exp(p.r_x * (p.K_x - x - p.a_yx * y))
                ey = exp(p.r_y * (p.K_y - y - p.a_xy * x))
            except OverflowError:
                raise NonFiniteError("orbit diverged", iteration=n) from None
            j11 = ex * (1.0 - p.r_x * x)
            j12 = ex * x * (-p.r_x * p.a_yx)
            j21 = ey * y * (-p.r_y * p.a_xy)
            j22 = ey * (1.0 - p.r_y * y)
            wx = j11 * vx + j12 * vy
            wy = j21 * vx + j22 * vy
            growth = math.hypot(wx, wy)
            if growth == 0.0 or not isfinite(growth):
                raise NonFiniteError("tangent vector collapsed", iteration=n)
            total += log(growth)
            vx, vy = wx / growth, wy / growth
            x, y = x * ex, y * ey
            if not (isfinite(x) and isfinite(y)):
                raise NonFiniteError("orbit diverged", iteration=n + 1)
        return total / n_iter

    raise DomainViolationError(f"unknown map kind {kind!r}")


def regenerate(traj: Trajectory) -> Trajectory:
    """Re-run a trajectory from its provenance record.

    Supports every kind produced in this package; the result is
    bit-identical to the original.
    """
    prov = traj.provenance
    kind = prov.get("kind")
    if kind == "coupled_map":
        params = ChainParams(**prov["params"])
        init = ChainState(prov["initial"]["x"], prov["initial"]["y"])
        return simulate(init, params, prov["n_steps"])
    if kind == "ode":
        params = ChainParams(**prov["params"])
        init = ChainState(prov["initial"]["x"], prov["initial"]["y"])
        return integrate_ode(init, params, prov["dt"], prov["t_end"])
    if kind == "lv":
        lv = LVParams(**prov["params"])
        return integrate_lv(prov["initial"]["s1"], prov["initial"]["s2"], lv,
                            prov["dt"], prov["t_end"])
    if kind == "perturbed":
        from . import perturbation
        return perturbation.regenerate_perturbed(prov)
    if kind == "intervened":
        from . import causality
        return causality.regenerate_intervened(prov)
    raise DomainViolationError(f"cannot regenerate kind {kind!r}")
