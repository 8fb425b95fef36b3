"""Causal-direction detectors for two-chain trajectories.

Three observational routes (lagged cross-correlation, Granger F-tests,
convergent cross mapping) plus the interventional route: clamping one
chain severs its update rule, and the induced distribution shift on the
other chain decides direction where observation alone cannot.

Direction keys used throughout: "y_to_x" collects evidence that y
causally influences x, "x_to_y" the reverse. For cross mapping this
follows the usual convention that skill in estimating y from x's shadow
manifold indicates y drives x.

In chaotic regimes the linear detectors are expected to mislead or fail;
reports surface that disagreement rather than hiding it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import f as f_dist

from .dynamics import ChainParams, ChainState, Trajectory, simulate
from .errors import (DegenerateSeriesError, DomainViolationError,
                     InsufficientNeighborsError, SingularDesignError)

__all__ = [
    "CausalGraphHypothesis",
    "EmbeddingSpec",
    "DetectorThresholds",
    "CausalReport",
    "lagged_xcorr",
    "granger",
    "ccm",
    "intervene",
    "interventional_shift",
    "adjudicate",
]

DIRECTIONS = ("y_to_x", "x_to_y")
VERDICTS = ("x->y", "y->x", "both", "none")


@dataclass(frozen=True)
class CausalGraphHypothesis:
    """A hypothesized direction with optional feedback-sign annotations.

    direction is one of "x->y", "y->x", "both", "none". Feedback signs
    ("+" destabilizing, "-" self-limiting) may only annotate edges that
    are present.
    """

    direction: str
    feedback_x_to_y: str | None = None
    feedback_y_to_x: str | None = None

    def __post_init__(self):
        if self.direction not in VERDICTS:
            raise DomainViolationError(f"direction must be one of {VERDICTS}")
        for name, sign, edge in (
                ("feedback_x_to_y", self.feedback_x_to_y, "x->y"),
                ("feedback_y_to_x", self.feedback_y_to_x, "y->x")):
            if sign is None:
                continue
            if sign not in ("+", "-"):
                raise DomainViolationError(f"{name} must be '+' or '-'")
            if self.direction not in (edge, "both"):
                raise DomainViolationError(
                    f"{name} annotates edge {edge} which is absent")

    @classmethod
    def from_params(cls, params: ChainParams) -> "CausalGraphHypothesis":
        """Encode coupling signs as a graph hypothesis.

        Convention (a modeling choice, documented here rather than
        derived from anything): a negative coupling raises the driven
        chain's effective capacity, so it is annotated destabilizing
        ("+"); a positive coupling is self-limiting ("-").
        """
        yx = params.a_yx != 0.0
        xy = params.a_xy != 0.0
        if yx and xy:
            direction = "both"
        elif yx:
            direction = "y->x"
        elif xy:
            direction = "x->y"
        else:
            direction = "none"
        sign = lambda a: "+" if a < 0 else "-"
        return cls(direction=direction,
                   feedback_y_to_x=sign(params.a_yx) if yx else None,
                   feedback_x_to_y=sign(params.a_xy) if xy else None)


@dataclass(frozen=True)
class EmbeddingSpec:
    """Delay-embedding and library schedule for cross mapping."""

    E: int = 3
    tau: int = 1
    library_sizes: tuple[int, ...] = ()

    def __post_init__(self):
        if self.E < 2:
            raise DomainViolationError(f"E must be >= 2, got {self.E!r}")
        if self.tau < 1:
            raise DomainViolationError(f"tau must be >= 1, got {self.tau!r}")
        sizes = tuple(int(s) for s in self.library_sizes)
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise DomainViolationError("library_sizes must be strictly increasing")
        object.__setattr__(self, "library_sizes", sizes)

    @classmethod
    def for_series_length(cls, n: int, E: int = 3, tau: int = 1,
                          n_sizes: int = 8) -> "EmbeddingSpec":
        """Default schedule: log-spaced libraries from 20 to 80% of the series."""
        lo = 20
        hi = int(0.8 * n)
        if hi <= lo:
            raise DomainViolationError(f"series too short for defaults: {n}")
        sizes = np.unique(np.geomspace(lo, hi, n_sizes).round().astype(int))
        return cls(E=E, tau=tau, library_sizes=tuple(int(s) for s in sizes))


@dataclass(frozen=True)
class DetectorThresholds:
    """Fixed decision thresholds, stated explicitly in every report.

    ``shift`` operationalizes "intervention changes the distribution":
    a chain is called causal when the total-variation shift it induces
    exceeds this value.
    """

    xcorr_peak: float = 0.2
    xcorr_margin: float = 0.05
    granger_alpha: float = 0.05
    ccm_skill: float = 0.5
    ccm_convergence: float = 0.1
    shift: float = 0.05

    def as_dict(self) -> dict:
        return {
            "xcorr_peak": self.xcorr_peak,
            "xcorr_margin": self.xcorr_margin,
            "granger_alpha": self.granger_alpha,
            "ccm_skill": self.ccm_skill,
            "ccm_convergence": self.ccm_convergence,
            "shift": self.shift,
        }


@dataclass(frozen=True)
class CausalReport:
    """Everything the detectors concluded about one system."""

    xcorr: dict | None
    granger: dict | None
    ccm: dict | None
    interventional: dict | None
    verdict: dict
    config: dict


def _as_series(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(traj.xs, dtype=float), np.asarray(traj.ys, dtype=float)


def _check_not_constant(name: str, s: np.ndarray) -> None:
    if s.size == 0 or np.all(s == s[0]):
        raise DegenerateSeriesError(f"{name} series is constant")


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom == 0.0:
        return 0.0
    return float(a @ b) / denom


def lagged_xcorr(traj: Trajectory, max_lag: int) -> dict:
    """Peak lagged Pearson correlation per direction.

    "x_to_y" correlates y_n with x_{n-k} for k = 0..max_lag (x leading),
    "y_to_x" the mirror image. The peak is the largest correlation in
    absolute value; its signed value and lag are reported. Ties go to
    the smaller lag.
    """
    x, y = _as_series(traj)
    if max_lag < 0:
        raise DomainViolationError(f"max_lag must be >= 0, got {max_lag!r}")
    if len(x) <= 4 * max_lag:
        raise DomainViolationError(
            f"series length {len(x)} must exceed 4*max_lag = {4 * max_lag}")
    _check_not_constant("x", x)
    _check_not_constant("y", y)

    def peak(lead: np.ndarray, follow: np.ndarray) -> dict:
        best_corr, best_lag = 0.0, 0
        for k in range(max_lag + 1):
            c = _pearson(follow[k:], lead[:len(lead) - k] if k else lead)
            if abs(c) > abs(best_corr):
                best_corr, best_lag = c, k
        return {"peak": best_corr, "lag": best_lag}

    return {"x_to_y": peak(x, y), "y_to_x": peak(y, x)}


def _ols_rss(X: np.ndarray, y: np.ndarray) -> float:
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesignError(
            f"design matrix rank {rank} < {X.shape[1]} columns")
    resid = y - X @ beta
    return float(resid @ resid)


def _lag_matrix(s: np.ndarray, p: int) -> np.ndarray:
    # column j holds s lagged by j+1
    n = len(s) - p
    return np.column_stack([s[p - j - 1:p - j - 1 + n] for j in range(p)])


def _granger_pair(target: np.ndarray, source: np.ndarray, p: int) -> dict:
    n_rows = len(target) - p
    yv = target[p:]
    ones = np.ones((n_rows, 1))
    X_r = np.hstack([ones, _lag_matrix(target, p)])
    X_u = np.hstack([X_r, _lag_matrix(source, p)])
    rss_r = _ols_rss(X_r, yv)
    rss_u = _ols_rss(X_u, yv)
    dfd = n_rows - 2 * p - 1
    if rss_u <= 0.0:
        raise SingularDesignError("unrestricted model has zero residual variance")
    F = ((rss_r - rss_u) / p) / (rss_u / dfd)
    F = max(F, 0.0)  # guard tiny negative from round-off
    return {"F": float(F), "p_value": float(f_dist.sf(F, p, dfd))}


def granger(traj: Trajectory, order: int) -> dict:
    """Granger F-test per direction at the given lag order.

    "y_to_x": does adding p lags of y to p own lags of x reduce the
    residual sum of squares more than chance? F has (p, N-2p-1) degrees
    of freedom where N is the number of regression rows. Linear method;
    on deterministic chaotic data its p-values are not trustworthy and
    are reported as-is for downstream adjudication to weigh.
    """
    x, y = _as_series(traj)
    if order < 1:
        raise DomainViolationError(f"order must be >= 1, got {order!r}")
    if len(x) < 20 * order:
        raise DomainViolationError(
            f"series length {len(x)} must be >= 20*order = {20 * order}")
    return {"y_to_x": _granger_pair(x, y, order),
            "x_to_y": _granger_pair(y, x, order)}


def _embed(s: np.ndarray, E: int, tau: int) -> np.ndarray:
    n_rows = len(s) - (E - 1) * tau
    idx = np.arange(n_rows)[:, None] + np.arange(E - 1, -1, -1)[None, :] * tau
    return s[idx]


def _cross_map_skill(manifold: np.ndarray, target_vals: np.ndarray,
                     E: int, L: int) -> float:
    """Predict target values beyond the library from manifold neighbors."""
    if L < E + 2:
        raise InsufficientNeighborsError(
            f"library size {L} < E + 2 = {E + 2}")
    lib = manifold[:L]
    preds = manifold[L:]
    if preds.shape[0] < 2:
        raise DomainViolationError("no held-out points beyond the library")
    k = E + 1
    d = cdist(preds, lib)
    order = np.argsort(d, axis=1, kind="stable")[:, :k]  # stable: ties by index
    rows = np.arange(d.shape[0])[:, None]
    dk = d[rows, order]
    d1 = np.maximum(dk[:, :1], 1e-300)  # exact matches: floor avoids 0/0
    with np.errstate(over="ignore"):
        w = np.exp(-dk / d1)
    w /= w.sum(axis=1, keepdims=True)
    estimates = (w * target_vals[order]).sum(axis=1)
    truth = target_vals[L:]
    if np.all(truth == truth[0]) or np.all(estimates == estimates[0]):
        return 0.0  # zero variance on the held-out side: no measurable skill
    return _pearson(estimates, truth)


def ccm(traj: Trajectory, spec: EmbeddingSpec | None = None) -> dict:
    """Convergent cross mapping skill curves per direction.

    Each series is delay-embedded; for every library size L the first L
    embedded points form the library and the remaining points are
    predicted from their E+1 nearest library neighbors with exponential
    distance weights w_i = exp(-d_i/d_1), normalized. Skill is the
    Pearson correlation between estimates and truth on those held-out
    points. Skill that rises with L when estimating y from x's manifold
    ("y_to_x") indicates y causally influences x.
    """
    x, y = _as_series(traj)
    if spec is None:
        spec = EmbeddingSpec.for_series_length(len(x))
    if not spec.library_sizes:
        raise DomainViolationError("spec has no library sizes")
    _check_not_constant("x", x)
    _check_not_constant("y", y)
    margin = (spec.E - 1) * spec.tau
    if len(x) < max(spec.library_sizes) + spec.E * spec.tau:
        raise DomainViolationError(
            "series shorter than max library size + E*tau")

    mx = _embed(x, spec.E, spec.tau)
    my = _embed(y, spec.E, spec.tau)
    # value at embedded row i is the series value at time i + margin
    x_vals = x[margin:]
    y_vals = y[margin:]
    sizes = list(spec.library_sizes)
    curve_y_from_mx = [_cross_map_skill(mx, y_vals, spec.E, L) for L in sizes]
    curve_x_from_my = [_cross_map_skill(my, x_vals, spec.E, L) for L in sizes]
    return {
        "library_sizes": sizes,
        "y_to_x": {"skill": curve_y_from_mx},
        "x_to_y": {"skill": curve_x_from_my},
        "E": spec.E,
        "tau": spec.tau,
    }


def intervene(params: ChainParams, chain: str, value: float,
              initial: ChainState, n_steps: int) -> Trajectory:
    """Clamp one chain at a fixed value and let the other evolve.

    The clamped chain's update rule is severed: its value is ``value``
    at every iteration (including iteration 0). The free chain reads the
    clamped value through its coupling exactly as in a normal run.
    """
    if chain not in ("x", "y"):
        raise DomainViolationError(f"chain must be 'x' or 'y', got {chain!r}")
    if not (math.isfinite(value) and value >= 0.0):
        raise DomainViolationError(f"clamp value must be >= 0, got {value!r}")
    if n_steps < 1:
        raise DomainViolationError(f"n_steps must be >= 1, got {n_steps!r}")

    from .errors import NonFiniteError  # local to keep module header lean
    xs = np.empty(n_steps + 1)
    ys = np.empty(n_steps + 1)
    exp = math.exp
    isfinite = math.isfinite
    p = params
    if chain == "x":
        xs[:] = value
        y = initial.y
        ys[0] = y
        for n in range(n_steps):
            try:
                y = y * exp(p.r_y * (p.K_y - y - p.a_xy * value))
            except OverflowError:
                raise NonFiniteError("growth exponent overflow", chain="y",
                                     iteration=n + 1) from None
            if not isfinite(y):
                raise NonFiniteError("non-finite map value", chain="y",
                                     iteration=n + 1)
            ys[n + 1] = y
    else:
        ys[:] = value
        x = initial.x
        xs[0] = x
        for n in range(n_steps):
            try:
                x = x * exp(p.r_x * (p.K_x - x - p.a_yx * value))
            except OverflowError:
                raise NonFiniteError("growth exponent overflow", chain="x",
                                     iteration=n + 1) from None
            if not isfinite(x):
                raise NonFiniteError("non-finite map value", chain="x",
                                     iteration=n + 1)
            xs[n + 1] = x

    prov = {
        "kind": "intervened",
        "initial": {"x": initial.x, "y": initial.y},
        "params": params.as_dict(),
        "n_steps": int(n_steps),
        "clamp": {"chain": chain, "value": float(value)},
    }
    return Trajectory(xs, ys, params, prov)


def regenerate_intervened(prov: dict) -> Trajectory:
    params = ChainParams(**prov["params"])
    initial = ChainState(prov["initial"]["x"], prov["initial"]["y"])
    return intervene(params, prov["clamp"]["chain"], prov["clamp"]["value"],
                     initial, prov["n_steps"])


def _quantized_counts(values: np.ndarray, epsilon: float) -> dict[int, int]:
    bins = np.floor(np.abs(values) / epsilon + 0.5).astype(np.int64)
    bins = np.where(values < 0, -bins, bins)
    uniq, counts = np.unique(bins, return_counts=True)
    return dict(zip(uniq.tolist(), counts.tolist()))


def _tv_distance(a: dict[int, int], b: dict[int, int]) -> float:
    na = sum(a.values())
    nb = sum(b.values())
    total = 0.0
    for key in set(a) | set(b):
        total += abs(a.get(key, 0) / na - b.get(key, 0) / nb)
    return 0.5 * total


def interventional_shift(params: ChainParams, target_chain: str,
                         clamp_values, probe_chain: str, n_steps: int,
                         epsilon: float, *, initial: ChainState | None = None,
                         n_burn: int = 1000) -> float:
    """Distribution shift on the probe chain induced by clamping the target.

    Runs a baseline and one clamped run per clamp value, quantizes the
    probe chain's post-burn-in values to epsilon bins, and returns the
    largest total-variation distance between clamped and baseline
    histograms (a value in [0, 1]). Zero inbound coupling gives exactly
    0 for every clamp value.
    """
    if target_chain not in ("x", "y") or probe_chain not in ("x", "y"):
        raise DomainViolationError("chains must be 'x' or 'y'")
    if target_chain == probe_chain:
        raise DomainViolationError("target and probe chain must differ")
    clamp_values = [float(c) for c in clamp_values]
    if not clamp_values:
        raise DomainViolationError("need at least one clamp value")
    if n_steps < 10_000:
        raise DomainViolationError(f"n_steps must be >= 10000, got {n_steps!r}")
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise DomainViolationError(f"epsilon must be > 0, got {epsilon!r}")
    if not 0 <= n_burn < n_steps:
        raise DomainViolationError("need 0 <= n_burn < n_steps")
    if initial is None:
        initial = ChainState(0.5, 0.5)

    baseline = simulate(initial, params, n_steps)
    probe = lambda t: t.xs if probe_chain == "x" else t.ys
    base_counts = _quantized_counts(probe(baseline)[n_burn:], epsilon)
    worst = 0.0
    for c in clamp_values:
        clamped = intervene(params, target_chain, c, initial, n_steps)
        counts = _quantized_counts(probe(clamped)[n_burn:], epsilon)
        worst = max(worst, _tv_distance(counts, base_counts))
    return worst


def _xcorr_call(xcorr: dict, thr: DetectorThresholds) -> str:
    pxy = abs(xcorr["x_to_y"]["peak"])
    pyx = abs(xcorr["y_to_x"]["peak"])
    if pxy < thr.xcorr_peak and pyx < thr.xcorr_peak:
        return "none"
    if pxy >= thr.xcorr_peak and pyx >= thr.xcorr_peak \
            and abs(pxy - pyx) <= thr.xcorr_margin:
        return "both"
    return "x->y" if pxy > pyx else "y->x"


def _granger_call(gr: dict, thr: DetectorThresholds) -> str:
    sig_xy = gr["x_to_y"]["p_value"] < thr.granger_alpha
    sig_yx = gr["y_to_x"]["p_value"] < thr.granger_alpha
    if sig_xy and sig_yx:
        return "both"
    if sig_xy:
        return "x->y"
    if sig_yx:
        return "y->x"
    return "none"


def _ccm_call(cc: dict, thr: DetectorThresholds) -> str:
    def convergent(direction: str) -> bool:
        skill = cc[direction]["skill"]
        return (skill[-1] >= thr.ccm_skill
                and skill[-1] - skill[0] >= thr.ccm_convergence)
    c_xy = convergent("x_to_y")
    c_yx = convergent("y_to_x")
    if c_xy and c_yx:
        return "both"
    if c_xy:
        return "x->y"
    if c_yx:
        return "y->x"
    return "none"


def _interventional_call(iv: dict, thr: DetectorThresholds) -> str:
    sig_yx = iv["y_to_x"]["shift"] > thr.shift
    sig_xy = iv["x_to_y"]["shift"] > thr.shift
    if sig_xy and sig_yx:
        return "both"
    if sig_xy:
        return "x->y"
    if sig_yx:
        return "y->x"
    return "none"


def adjudicate(xcorr: dict | None = None, granger_result: dict | None = None,
               ccm_result: dict | None = None,
               interventional: dict | None = None,
               thresholds: DetectorThresholds | None = None,
               extra_config: dict | None = None) -> CausalReport:
    """Combine detector outputs into per-method direction calls.

    At least one observational method is required. The report is
    flagged OBSERVATIONALLY-AMBIGUOUS when the observational methods
    disagree among themselves, when their consensus is "both" (a
    synchronized regime: observation cannot single out a direction), or
    when an intervention was run and contradicts the consensus (which
    covers all-below-threshold observations with a decisive
    intervention). The overall verdict follows the intervention when one
    was run; otherwise it is the observational consensus, or
    "ambiguous" when there is none.
    """
    thr = thresholds or DetectorThresholds()
    if xcorr is None and granger_result is None and ccm_result is None:
        raise DomainViolationError("need at least one observational method")

    calls: dict[str, str] = {}
    if xcorr is not None:
        calls["xcorr"] = _xcorr_call(xcorr, thr)
    if granger_result is not None:
        for d in DIRECTIONS:
            pv = granger_result[d]["p_value"]
            if not 0.0 <= pv <= 1.0:
                raise DomainViolationError(f"p-value out of range: {pv!r}")
        calls["granger"] = _granger_call(granger_result, thr)
    if ccm_result is not None:
        for d in DIRECTIONS:
            for s in ccm_result[d]["skill"]:
                if not -1.0 <= s <= 1.0 + 1e-12:
                    raise DomainViolationError(f"skill out of range: {s!r}")
        calls["ccm"] = _ccm_call(ccm_result, thr)
    if interventional is not None:
        for d in DIRECTIONS:
            sv = interventional[d]["shift"]
            if not 0.0 <= sv <= 1.0:
                raise DomainViolationError(f"shift out of range: {sv!r}")
        calls["interventional"] = _interventional_call(interventional, thr)

    obs_calls = [calls[m] for m in ("xcorr", "granger", "ccm") if m in calls]
    consensus = obs_calls[0] if len(set(obs_calls)) == 1 else None
    ambiguous = (consensus is None or consensus == "both"
                 or ("interventional" in calls
                     and calls["interventional"] != consensus))

    if "interventional" in calls:
        overall = calls["interventional"]
    elif consensus is not None:
        overall = consensus
    else:
        overall = "ambiguous"

    verdict = dict(calls)
    verdict["overall"] = overall
    verdict["observationally_ambiguous"] = ambiguous

    config = {"thresholds": thr.as_dict()}
    if extra_config:
        config.update(extra_config)
    return CausalReport(xcorr=xcorr, granger=granger_result, ccm=ccm_result,
                        interventional=interventional, verdict=verdict,
                        config=config)
