"""Gauss-Hermite rules and mode/curvature-adapted quadrature.

The rules use the probabilists' convention: nodes and weights integrate
against the standard normal density, so weights sum to one and a rule
with ``k`` points is exact for polynomials up to degree ``2k - 1``.
The adaptive variant recentres the rule at a density's mode and rescales
it by the Cholesky factor of the inverse negative Hessian, which makes
it exact for Gaussian integrands at any ``k``.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ._linalg import chol_with_jitter
from .errors import EvaluationError

MAX_POINTS = 50

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class GhRule:
    """One-dimensional Gauss-Hermite rule (standard-normal weight)."""

    k: int
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class AghqResult:
    """Adapted quadrature rule and the normalizing constant it produced.

    ``adapted_log_weights[j]`` is the log contribution of node ``j`` to the
    integral (density value, reciprocal normal weight, rule weight and the
    Cholesky log-determinant all folded in), so that
    ``logsumexp(adapted_log_weights) == log_norm_const``.
    """

    mode: np.ndarray
    chol: np.ndarray
    log_norm_const: float
    adapted_nodes: np.ndarray
    adapted_log_weights: np.ndarray

    @property
    def normalized_weights(self) -> np.ndarray:
        """Node weights rescaled to sum to one."""
        w = np.exp(self.adapted_log_weights - self.log_norm_const)
        return w / w.sum()


def gh_rule(k: int) -> GhRule:
    """Return the k-point probabilists' Gauss-Hermite rule.

    Nodes and weights come from the Golub-Welsch eigen-decomposition of
    the (symmetric tridiagonal) Jacobi matrix of the Hermite recurrence.
    """
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise ValueError(f"points-per-dimension must be an integer, got {k!r}")
    if k < 1:
        raise ValueError(f"points-per-dimension must be >= 1, got {k}")
    if k > MAX_POINTS:
        raise ValueError(f"points-per-dimension capped at {MAX_POINTS}, got {k}")
    if k == 1:
        return GhRule(1, np.array([0.0]), np.array([1.0]))
    off_diag = np.sqrt(np.arange(1, k, dtype=float))
    nodes, vectors = eigh_tridiagonal(np.zeros(k), off_diag)
    weights = vectors[0, :] ** 2
    # enforce exact symmetry of the rule about 0
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    weights /= weights.sum()
    if k % 2 == 1:
        nodes[k // 2] = 0.0
    return GhRule(k, nodes, weights)


def gh_polynomial_check(rule: GhRule, degree: int) -> float:
    """Quadrature estimate of the ``degree``-th standard-normal moment."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if degree > 2 * rule.k - 1:
        raise ValueError(
            f"degree {degree} exceeds exactness bound {2 * rule.k - 1} of a "
            f"{rule.k}-point rule"
        )
    # power of |node| with the sign applied afterwards, then mirrored nodes
    # summed in pairs: odd-degree terms cancel exactly
    magnitude = np.abs(rule.nodes) ** degree
    if degree % 2 == 1:
        magnitude = magnitude * np.sign(rule.nodes)
    terms = rule.weights * magnitude
    return float(0.5 * np.sum(terms + terms[::-1]))


def tensor_rule(k: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product nodes ``(k**dim, dim)`` and log-weights ``(k**dim,)``."""
    rule = gh_rule(k)
    if dim == 1:
        return rule.nodes[:, None], np.log(rule.weights)
    grids = np.meshgrid(*([rule.nodes] * dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    log_w = np.zeros(k**dim)
    lw = np.log(rule.weights)
    for axis in range(dim):
        idx = np.meshgrid(*([np.arange(k)] * dim), indexing="ij")[axis].ravel()
        log_w += lw[idx]
    return nodes, log_w


def aghq_normalize(
    log_density: Callable[[np.ndarray], float],
    mode: np.ndarray,
    neg_hessian: np.ndarray,
    k: int,
) -> AghqResult:
    """Normalize an unnormalized log density by adapted Gauss-Hermite.

    Nodes are ``mode + L z`` for tensor nodes ``z``, where ``L`` is the
    lower Cholesky factor of the inverse of ``neg_hessian``; the weight of
    a node divides out the standard normal density of ``z`` so the rule is
    exact whenever ``log_density`` is quadratic. All sums run through
    log-sum-exp.
    """
    mode = np.atleast_1d(np.asarray(mode, dtype=float))
    neg_hessian = np.atleast_2d(np.asarray(neg_hessian, dtype=float))
    dim = mode.size
    if neg_hessian.shape != (dim, dim):
        raise ValueError(
            f"neg_hessian shape {neg_hessian.shape} does not match mode "
            f"dimension {dim}"
        )
    chol_h = chol_with_jitter(neg_hessian, "negative Hessian")
    # covariance Cholesky: L L^T = (neg_hessian)^-1
    identity = np.eye(dim)
    inv_h = np.linalg.solve(chol_h @ chol_h.T, identity)
    inv_h = 0.5 * (inv_h + inv_h.T)
    chol = chol_with_jitter(inv_h, "inverse negative Hessian")
    log_det_l = float(np.sum(np.log(np.diag(chol))))

    z_nodes, log_w = tensor_rule(k, dim)
    adapted_nodes = mode[None, :] + z_nodes @ chol.T
    log_phi = -0.5 * np.sum(z_nodes**2, axis=1) - 0.5 * dim * _LOG_2PI

    log_vals = np.empty(len(adapted_nodes))
    for j, point in enumerate(adapted_nodes):
        value = float(log_density(point))
        if not np.isfinite(value) and value != -np.inf:
            raise EvaluationError(
                f"log density returned non-finite value {value} at node {point}",
                point=point,
            )
        log_vals[j] = value

    adapted_log_weights = log_vals - log_phi + log_w + log_det_l
    peak = np.max(adapted_log_weights)
    if not np.isfinite(peak):
        raise EvaluationError("log density is -inf at every quadrature node")
    log_norm_const = float(peak + np.log(np.sum(np.exp(adapted_log_weights - peak))))
    return AghqResult(
        mode=mode,
        chol=chol,
        log_norm_const=log_norm_const,
        adapted_nodes=adapted_nodes,
        adapted_log_weights=adapted_log_weights,
    )
