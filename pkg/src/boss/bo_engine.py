"""Sequential design loop: GP-guided maximization of the log posterior.

Each iteration conditions the surrogate GP on all evaluations so far,
maximizes an upper-confidence-bound acquisition over the search box and
evaluates the objective at the winner. The loop returns the full design,
the final surrogate mean as a cheap stand-in for the objective, and a
ledger of every evaluation.
"""

import csv
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .errors import EvaluationError
from .surrogate_gp import (
    DesignSet,
    GpPosterior,
    SeKernelParams,
    condition,
    default_hyper_grid,
    initial_params,
    predict_batch,
    refresh_hyperparams,
)

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchSpace:
    """Compact box for the conditioning parameter."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape:
            raise ValueError("lower and upper must have the same shape")
        if lower.ndim != 1 or not 1 <= lower.size <= 3:
            raise ValueError("search space supports 1 to 3 dimensions")
        if not np.all(lower < upper):
            raise ValueError(f"each lower bound must be below its upper bound: {lower} vs {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dims(self) -> int:
        return self.lower.size

    @property
    def diameter(self) -> float:
        """Euclidean diagonal of the box."""
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, point) -> bool:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        return bool(np.all(point >= self.lower) and np.all(point <= self.upper))

    def clip(self, point: np.ndarray) -> np.ndarray:
        return np.clip(point, self.lower, self.upper)


@dataclass(frozen=True)
class BoConfig:
    """Knobs for one sequential-design run."""

    iterations: int
    initial_points: np.ndarray
    delta: float = 0.01
    refresh_every: int = 10
    af_candidates: Optional[int] = None  # default 512 * d
    seed: int = 0
    noise_var: float = 1e-6
    ucb_use_sd: bool = False

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.initial_points, dtype=float))
        object.__setattr__(self, "initial_points", pts)
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if len(pts) == 0:
            raise ValueError("at least one initial point is required")
        if len(pts) > self.iterations:
            raise ValueError(
                f"iterations ({self.iterations}) must cover the "
                f"{len(pts)} initial points"
            )
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.refresh_every < 1:
            raise ValueError("refresh_every must be positive")


@dataclass
class LedgerRow:
    iteration: int
    alpha: np.ndarray
    f_value: float
    cumulative_evals: int
    wall_ms: float
    refresh_flag: bool


@dataclass
class RunLedger:
    """Record of every objective evaluation and hyperparameter refresh."""

    rows: list = field(default_factory=list)
    refreshes: list = field(default_factory=list)  # (iteration, old, new)
    warnings: list = field(default_factory=list)

    @property
    def eval_count(self) -> int:
        return len(self.rows)

    def to_csv(self, path) -> None:
        dims = len(self.rows[0].alpha) if self.rows else 0
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(
                ["iter"]
                + [f"alpha_{i + 1}" for i in range(dims)]
                + ["f_value", "cumulative_evals", "wall_ms", "refresh_flag"]
            )
            for row in self.rows:
                writer.writerow(
                    [row.iteration]
                    + [repr(float(a)) for a in row.alpha]
                    + [
                        repr(float(row.f_value)),
                        row.cumulative_evals,
                        f"{row.wall_ms:.3f}",
                        int(row.refresh_flag),
                    ]
                )


@dataclass(frozen=True)
class SurrogateFn:
    """Final surrogate: the GP posterior mean over the search box."""

    gp: GpPosterior
    space: SearchSpace

    def __call__(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        single = alpha.ndim <= 1
        means, _ = predict_batch(self.gp, np.atleast_2d(alpha))
        return float(means[0]) if single else means

    @property
    def design(self) -> DesignSet:
        return self.gp.design


def gamma_t(t: int, delta: float) -> float:
    """Confidence multiplier 2 log(t^2 pi^2 / (6 delta))."""
    return 2.0 * np.log(t**2 * np.pi**2 / (6.0 * delta))


def ucb(gp: GpPosterior, t: int, delta: float, query, use_sd: bool = False) -> float:
    """Acquisition value at one point; see :func:`ucb_batch`."""
    return float(ucb_batch(gp, t, delta, np.atleast_2d(np.asarray(query, float)), use_sd)[0])


def ucb_batch(
    gp: GpPosterior, t: int, delta: float, queries: np.ndarray, use_sd: bool = False
) -> np.ndarray:
    """Mean plus scaled uncertainty.

    Follows the upper-confidence-bound form with the posterior variance as
    the uncertainty term; ``use_sd`` switches to the more common standard
    deviation form.
    """
    if t < 1:
        raise ValueError("iteration index must be >= 1")
    means, variances = predict_batch(gp, queries)
    spread = np.sqrt(variances) if use_sd else variances
    return means + np.sqrt(gamma_t(t, delta)) * spread


def _golden_section_sweeps(
    objective: Callable[[np.ndarray], np.ndarray],
    starts: np.ndarray,
    space: SearchSpace,
    sweeps: int,
    iters: int = 40,
) -> np.ndarray:
    """Coordinate-wise golden-section ascent from several starts in lockstep."""
    points = np.array(starts, dtype=float)
    m = len(points)
    for _ in range(sweeps):
        for dim in range(space.dims):
            a = np.full(m, space.lower[dim])
            b = np.full(m, space.upper[dim])
            for _ in range(iters):
                x1 = b - _GOLDEN * (b - a)
                x2 = a + _GOLDEN * (b - a)
                p1 = points.copy()
                p2 = points.copy()
                p1[:, dim] = x1
                p2[:, dim] = x2
                vals = objective(np.vstack([p1, p2]))
                f1, f2 = vals[:m], vals[m:]
                shrink_right = f1 > f2  # keep [a, x2]
                b = np.where(shrink_right, x2, b)
                a = np.where(shrink_right, a, x1)
            points[:, dim] = 0.5 * (a + b)
    return points


def maximize_af(
    gp: GpPosterior,
    t: int,
    delta: float,
    space: SearchSpace,
    budget: int,
    rng: np.random.Generator,
    use_sd: bool = False,
) -> np.ndarray:
    """Maximize the acquisition over the box.

    A scrambled low-discrepancy candidate set of size ``budget`` is scored
    in one batch, then the best three candidates are polished by
    coordinate-wise golden-section search.
    """
    if budget < 1:
        raise ValueError("acquisition budget must be positive")

    def score(queries):
        return ucb_batch(gp, t, delta, queries, use_sd)

    sobol = qmc.Sobol(d=space.dims, scramble=True, seed=rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # non power-of-two budgets
        unit = sobol.random(budget)
    candidates = space.lower + unit * (space.upper - space.lower)
    values = score(candidates)
    order = np.argsort(values)[::-1]
    starts = candidates[order[: min(3, budget)]]

    sweeps = 1 if space.dims == 1 else 2
    refined = _golden_section_sweeps(score, starts, space, sweeps)
    pool = np.vstack([candidates[order[:1]], refined])
    pool = np.clip(pool, space.lower, space.upper)
    best = pool[int(np.argmax(score(pool)))]
    return best


class _CachingObjective:
    """Wraps the true objective; repeated points reuse the stored value."""

    def __init__(self, objective: Callable[[np.ndarray], float]):
        self._objective = objective
        self._cache: dict[bytes, float] = {}
        self.true_eval_count = 0

    def __call__(self, alpha: np.ndarray) -> float:
        key = np.asarray(alpha, dtype=float).tobytes()
        if key in self._cache:
            return self._cache[key]
        value = float(self._objective(alpha))
        if not np.isfinite(value):
            raise EvaluationError(
                f"objective returned non-finite value {value} at {alpha}", point=alpha
            )
        self.true_eval_count += 1
        self._cache[key] = value
        return value


def default_initial_points(space: SearchSpace, count: int, seed: int = 0) -> np.ndarray:
    """Equally spaced points in one dimension, a Latin square otherwise."""
    if count < 1:
        raise ValueError("initial point count must be positive")
    if space.dims == 1:
        return np.linspace(space.lower[0], space.upper[0], count)[:, None]
    sampler = qmc.LatinHypercube(d=space.dims, seed=seed)
    unit = sampler.random(count)
    return space.lower + unit * (space.upper - space.lower)


def _separated(point: np.ndarray, existing: np.ndarray) -> bool:
    if len(existing) == 0:
        return True
    return float(np.min(np.linalg.norm(existing - point, axis=1))) >= 1e-10


def run_boss(
    objective: Callable[[np.ndarray], float],
    space: SearchSpace,
    cfg: BoConfig,
) -> tuple[DesignSet, SurrogateFn, RunLedger]:
    """Run the sequential design loop for ``cfg.iterations`` evaluations.

    The supplied initial points are consumed first (in order); every later
    point is the acquisition maximizer. Hyperparameters are refit by grid
    MLE after every ``cfg.refresh_every``-th evaluation. The ledger records
    each evaluation with timing and refresh flags.
    """
    initials = cfg.initial_points
    if initials.shape[1] != space.dims:
        raise ValueError(
            f"initial points have dimension {initials.shape[1]}, space has {space.dims}"
        )
    for point in initials:
        if not space.contains(point):
            raise ValueError(f"initial point {point} lies outside the search space")

    rng = np.random.default_rng(cfg.seed)
    wrapped = _CachingObjective(objective)
    budget = cfg.af_candidates if cfg.af_candidates is not None else 512 * space.dims
    ledger = RunLedger()

    points: list[np.ndarray] = []
    values: list[float] = []

    def guard(candidate: np.ndarray) -> np.ndarray:
        candidate = space.clip(candidate)
        existing = np.array(points) if points else np.empty((0, space.dims))
        while not _separated(candidate, existing):
            direction = rng.normal(size=space.dims)
            direction /= max(np.linalg.norm(direction), 1e-300)
            candidate = space.clip(candidate + 1e-6 * space.diameter * direction)
        return candidate

    def record(iteration: int, alpha: np.ndarray, value: float, ms: float, refreshed: bool):
        ledger.rows.append(
            LedgerRow(
                iteration=iteration,
                alpha=np.array(alpha),
                f_value=value,
                cumulative_evals=wrapped.true_eval_count,
                wall_ms=ms,
                refresh_flag=refreshed,
            )
        )

    params: Optional[SeKernelParams] = None
    center_offset = 0.0

    def maybe_refresh(count: int) -> bool:
        nonlocal params
        if count % cfg.refresh_every != 0 or count < 2:
            return False
        design = DesignSet(np.array(points), np.array(values), center_offset)
        grid = default_hyper_grid(space.diameter, design)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            new_params = refresh_hyperparams(design, params, grid)
        for w in caught:
            ledger.warnings.append(str(w.message))
        ledger.refreshes.append((count, params, new_params))
        params = new_params
        return True

    # initial stage: consume the provided points in order
    for point in initials:
        start = time.perf_counter()
        point = guard(np.asarray(point, dtype=float))
        value = wrapped(point)
        points.append(point)
        values.append(value)
        record(len(points), point, value, (time.perf_counter() - start) * 1e3, False)

    center_offset = float(np.mean(values))
    params = initial_params(
        space.diameter,
        DesignSet(np.array(points), np.array(values), center_offset),
        noise_var=cfg.noise_var,
    )
    # a refresh may already be due once the initial block is consumed
    if len(points) % cfg.refresh_every == 0:
        ledger.rows[-1].refresh_flag = maybe_refresh(len(points))

    while len(points) < cfg.iterations:
        start = time.perf_counter()
        design = DesignSet(np.array(points), np.array(values), center_offset)
        gp = condition(params, design)
        proposal = maximize_af(
            gp, len(points), cfg.delta, space, budget, rng, use_sd=cfg.ucb_use_sd
        )
        proposal = guard(proposal)
        value = wrapped(proposal)
        points.append(proposal)
        values.append(value)
        refreshed = maybe_refresh(len(points))
        record(
            len(points), proposal, value, (time.perf_counter() - start) * 1e3, refreshed
        )

    if wrapped.true_eval_count != cfg.iterations:
        raise EvaluationError(
            f"objective evaluation count {wrapped.true_eval_count} does not match "
            f"budget {cfg.iterations}"
        )

    final_design = DesignSet(np.array(points), np.array(values), center_offset)
    final_gp = condition(params, final_design)
    return final_design, SurrogateFn(gp=final_gp, space=space), ledger
