"""Growth-rate sweeps that collect deduplicated attractor samples.

For each grid value r the coupled map is iterated past its transient and
the post-transient values are quantized to multiples of epsilon and
deduplicated, one attractor set per chain. Cells are independent work
units (the initial state is not carried between adjacent r values unless
continuation is requested), so the diagram is identical for any
evaluation order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import ChainParams, ChainState, simulate
from .errors import DomainViolationError, NonFiniteError

__all__ = [
    "SweepSpec",
    "BifurcationDiagram",
    "scaled_param_rule",
    "default_param_rule",
    "quantize",
    "sweep",
    "attractor_census",
]

DEFAULT_EPSILON = 1e-4


def scaled_param_rule(r_x_scale: float = 1.0, r_y_scale: float = 0.95,
                      K_x: float = 0.95, K_y: float = 1.0,
                      a_yx: float = -0.1, a_xy: float = 0.0,
                      ) -> Callable[[float], ChainParams]:
    """Rule mapping a grid value r to full ChainParams.

    Growth rates scale with r (r_x = r_x_scale*r, r_y = r_y_scale*r);
    capacities and couplings are fixed. The defaults are the package's
    standard two-chain sweep: x driven unidirectionally by y through a
    weak negative coupling.
    """
    def rule(r: float) -> ChainParams:
        return ChainParams(r_x=r_x_scale * r, r_y=r_y_scale * r,
                           K_x=K_x, K_y=K_y, a_yx=a_yx, a_xy=a_xy)
    rule.coefficients = {  # type: ignore[attr-defined]
        "r_x_scale": r_x_scale, "r_y_scale": r_y_scale,
        "K_x": K_x, "K_y": K_y, "a_yx": a_yx, "a_xy": a_xy,
    }
    return rule


def default_param_rule() -> Callable[[float], ChainParams]:
    return scaled_param_rule()


@dataclass(frozen=True)
class SweepSpec:
    """Grid, transient handling and quantization for one sweep."""

    r_min: float = 1.5
    r_max: float = 3.0
    n_r: int = 1500
    n_burn: int = 1000
    n_keep: int = 500
    epsilon: float = DEFAULT_EPSILON
    param_rule: Callable[[float], ChainParams] = field(default_factory=default_param_rule)

    def __post_init__(self):
        if not (math.isfinite(self.r_min) and math.isfinite(self.r_max)
                and self.r_min < self.r_max):
            raise DomainViolationError("need r_min < r_max")
        if self.n_r < 2:
            raise DomainViolationError(f"n_r must be >= 2, got {self.n_r!r}")
        if self.n_burn < 0 or self.n_keep < 1:
            raise DomainViolationError("need n_burn >= 0 and n_keep >= 1")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise DomainViolationError(f"epsilon must be > 0, got {self.epsilon!r}")

    @property
    def r_values(self) -> np.ndarray:
        return np.linspace(self.r_min, self.r_max, self.n_r)


@dataclass(frozen=True)
class BifurcationDiagram:
    """Per-r attractor sets (sorted, duplicate-free, epsilon-quantized)."""

    r_values: np.ndarray
    x_cells: tuple[np.ndarray, ...]
    y_cells: tuple[np.ndarray, ...]
    diverged: np.ndarray
    epsilon: float

    def __len__(self) -> int:
        return int(self.r_values.size)


def quantize(values, epsilon: float) -> np.ndarray:
    """Round to the nearest multiple of epsilon, halves away from zero."""
    v = np.asarray(values, dtype=float)
    return np.sign(v) * np.floor(np.abs(v) / epsilon + 0.5) * epsilon


def _sweep_cell(r: float, spec: SweepSpec, initial: ChainState):
    params = spec.param_rule(float(r))
    try:
        traj = simulate(initial, params, spec.n_burn + spec.n_keep)
    except NonFiniteError:
        empty = np.empty(0)
        return empty, empty, True, initial
    xq = np.unique(quantize(traj.xs[-spec.n_keep:], spec.epsilon))
    yq = np.unique(quantize(traj.ys[-spec.n_keep:], spec.epsilon))
    return xq, yq, False, traj.final


def sweep(spec: SweepSpec, initial: ChainState, *, continuation: bool = False,
          n_threads: int = 1) -> BifurcationDiagram:
    """Scan the r grid and collect attractor sets per cell.

    Divergent cells are recorded in ``diverged`` (and render as gaps),
    never fatal to the sweep. With ``continuation`` the terminal state of
    each cell seeds the next one, which changes which coexisting
    attractor is found; continuation forces sequential evaluation.
    """
    if n_threads < 1:
        raise DomainViolationError(f"n_threads must be >= 1, got {n_threads!r}")
    r_values = spec.r_values
    x_cells: list[np.ndarray] = []
    y_cells: list[np.ndarray] = []
    diverged = np.zeros(spec.n_r, dtype=bool)

    if continuation:
        state = initial
        for i, r in enumerate(r_values):
            xq, yq, died, last = _sweep_cell(r, spec, state)
            x_cells.append(xq)
            y_cells.append(yq)
            diverged[i] = died
            # reset after a divergent cell rather than carrying garbage
            state = initial if died else ChainState(last.x, last.y)
    elif n_threads == 1:
        for i, r in enumerate(r_values):
            xq, yq, died, _ = _sweep_cell(r, spec, initial)
            x_cells.append(xq)
            y_cells.append(yq)
            diverged[i] = died
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(lambda r: _sweep_cell(r, spec, initial),
                                    r_values))
        for i, (xq, yq, died, _) in enumerate(results):
            x_cells.append(xq)
            y_cells.append(yq)
            diverged[i] = died

    return BifurcationDiagram(r_values=r_values, x_cells=tuple(x_cells),
                              y_cells=tuple(y_cells), diverged=diverged,
                              epsilon=spec.epsilon)


def attractor_census(diagram: BifurcationDiagram) -> tuple[np.ndarray, np.ndarray]:
    """Attractor counts per cell, one array per chain.

    Counts of 1, 2, 4, ... trace the period-doubling cascade; large
    counts mark chaotic bands. Divergent cells count 0.
    """
    x_counts = np.array([c.size for c in diagram.x_cells], dtype=int)
    y_counts = np.array([c.size for c in diagram.y_cells], dtype=int)
    return x_counts, y_counts
