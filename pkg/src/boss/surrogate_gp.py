"""Zero-mean Gaussian-process surrogate with squared-exponential kernel.

The surrogate models the sequential design evaluations of the objective.
Observed values are centred by the mean of the initial-stage evaluations
(held in the design set) so the GP prior mean can stay at zero; a small
fixed noise variance regularizes the kernel matrix. Hyperparameters are
refreshed by an exhaustive grid search on the marginal likelihood.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from ._linalg import chol_with_jitter

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class SeKernelParams:
    """Squared-exponential kernel hyperparameters plus noise variance."""

    length_scale: float
    sd: float
    noise_var: float = 1e-6

    def __post_init__(self):
        if self.length_scale <= 0:
            raise ValueError(f"length_scale must be positive, got {self.length_scale}")
        if self.sd <= 0:
            raise ValueError(f"sd must be positive, got {self.sd}")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be non-negative, got {self.noise_var}")


@dataclass(frozen=True)
class DesignSet:
    """Accumulated (point, value) evaluations plus the centring offset."""

    points: np.ndarray  # (t, d)
    values: np.ndarray  # (t,)
    center_offset: float = 0.0

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        values = np.asarray(self.values, dtype=float).ravel()
        if len(points) != len(values):
            raise ValueError("points and values must have equal length")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    @property
    def centered_values(self) -> np.ndarray:
        return self.values - self.center_offset

    def min_pairwise_distance(self) -> float:
        if len(self) < 2:
            return np.inf
        diff = self.points[:, None, :] - self.points[None, :, :]
        dist = np.sqrt(np.sum(diff**2, axis=-1))
        return float(np.min(dist[np.triu_indices(len(self), k=1)]))


@dataclass(frozen=True)
class GpPosterior:
    """GP conditioned on a design set; factorization cached for prediction."""

    params: SeKernelParams
    design: DesignSet
    chol_factor: np.ndarray  # lower Cholesky of C + noise_var * I
    alpha_weights: np.ndarray  # solves (C + noise_var I) a = centred values


@dataclass(frozen=True)
class HyperGrid:
    """Candidate length scales and sds for the MLE refresh."""

    length_scales: np.ndarray
    sds: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "length_scales", np.atleast_1d(np.asarray(self.length_scales, float))
        )
        object.__setattr__(self, "sds", np.atleast_1d(np.asarray(self.sds, float)))


def kernel_eval(params: SeKernelParams, x1, x2) -> float:
    """sd^2 * exp(-||x1 - x2||^2 / (2 length_scale^2))."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    sq = float(np.sum((x1 - x2) ** 2))
    return params.sd**2 * float(np.exp(-sq / (2.0 * params.length_scale**2)))


def _cross_sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared distances between rows of a (m,d) and b (n,d)."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sum(diff**2, axis=-1)


def _kernel_matrix(params: SeKernelParams, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return params.sd**2 * np.exp(-_cross_sqdist(a, b) / (2.0 * params.length_scale**2))


def condition(params: SeKernelParams, design: DesignSet) -> GpPosterior:
    """Condition the GP on the design; factorizes C + noise_var I once."""
    if len(design) == 0:
        raise ValueError("design must contain at least one point")
    if design.min_pairwise_distance() < 1e-10:
        raise ValueError("design points must be pairwise distinct (separation >= 1e-10)")
    cov = _kernel_matrix(params, design.points, design.points)
    cov[np.diag_indices_from(cov)] += params.noise_var
    chol = chol_with_jitter(cov, "kernel matrix C + noise I")
    alpha = cho_solve((chol, True), design.centered_values)
    return GpPosterior(params=params, design=design, chol_factor=chol, alpha_weights=alpha)


def predict(gp: GpPosterior, query) -> tuple[float, float]:
    """Posterior mean and variance at one query point."""
    means, variances = predict_batch(gp, np.atleast_2d(np.asarray(query, float)))
    return float(means[0]), float(variances[0])


def predict_batch(gp: GpPosterior, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized posterior mean and variance over query rows (m, d)."""
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    k_cross = _kernel_matrix(gp.params, gp.design.points, queries)  # (t, m)
    means = k_cross.T @ gp.alpha_weights + gp.design.center_offset
    half = solve_triangular(gp.chol_factor, k_cross, lower=True)  # (t, m)
    variances = gp.params.sd**2 - np.sum(half**2, axis=0)
    return means, np.maximum(variances, 0.0)


def log_marginal_likelihood(params: SeKernelParams, design: DesignSet) -> float:
    """Appendix-form GP log likelihood of the centred design values."""
    if len(design) == 0:
        raise ValueError("design must contain at least one point")
    gp = condition(params, design)
    f = design.centered_values
    quad = float(f @ gp.alpha_weights)
    log_det = 2.0 * float(np.sum(np.log(np.diag(gp.chol_factor))))
    return -0.5 * quad - 0.5 * log_det - 0.5 * len(design) * _LOG_2PI


def default_hyper_grid(space_diameter: float, design: DesignSet) -> HyperGrid:
    """Scale-aware 25x25 log-spaced grid for the MLE refresh."""
    s = float(np.std(design.centered_values))
    s = max(s, 1e-3)
    return HyperGrid(
        length_scales=np.geomspace(space_diameter / 100.0, space_diameter, 25),
        sds=np.geomspace(0.01 * s, 100.0 * s, 25),
    )


def initial_params(space_diameter: float, design: DesignSet, noise_var: float = 1e-6) -> SeKernelParams:
    """Heuristic starting hyperparameters before any MLE refresh."""
    s = float(np.std(design.centered_values))
    return SeKernelParams(
        length_scale=space_diameter / 10.0,
        sd=max(s, 1.0),
        noise_var=noise_var,
    )


def refresh_hyperparams(
    design: DesignSet, current: SeKernelParams, grid: HyperGrid
) -> SeKernelParams:
    """Grid-search MLE update of (length_scale, sd); noise is never refit.

    Ties in the likelihood are broken toward the larger length scale
    (smoother surrogate). If no grid point yields a finite likelihood the
    incumbent parameters are kept and a ``RuntimeWarning`` is issued.
    """
    if len(design) < 2:
        raise ValueError("hyperparameter refresh needs at least two design points")
    sq_dist = _cross_sqdist(design.points, design.points)
    f = design.centered_values
    t = len(design)
    if not np.all(np.isfinite(f)):
        warnings.warn(
            "design values are not finite; keeping current hyperparameters",
            RuntimeWarning,
        )
        return current

    best = (-np.inf, None)
    for ell in grid.length_scales:
        corr = np.exp(-sq_dist / (2.0 * ell**2))
        for sd in grid.sds:
            cov = sd**2 * corr
            cov[np.diag_indices_from(cov)] += current.noise_var
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                continue
            half = solve_triangular(chol, f, lower=True)
            ll = (
                -0.5 * float(half @ half)
                - float(np.sum(np.log(np.diag(chol))))
                - 0.5 * t * _LOG_2PI
            )
            if not np.isfinite(ll):
                continue
            if ll > best[0] or (ll == best[0] and best[1] is not None and ell > best[1][0]):
                best = (ll, (ell, sd))

    if best[1] is None:
        warnings.warn(
            "hyperparameter grid search produced no finite likelihood; "
            "keeping current parameters",
            RuntimeWarning,
        )
        return current
    ell, sd = best[1]
    return SeKernelParams(length_scale=float(ell), sd=float(sd), noise_var=current.noise_var)
