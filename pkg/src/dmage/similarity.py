"""Geodesic similarity: distance normalization, kernel calibration, symmetrization.

Distances are turned into per-pair similarities in three steps.  Each row is
first shifted by its minimum off-diagonal distance (``rho``) and scaled by a
per-node bandwidth (``sigma``), so every node's nearest neighbor lands at
normalized distance 0.  The bandwidth is calibrated by binary search so that
``2 ** sum_j kernel(normalized distance)^2`` hits a target compactness
``q_p`` — larger targets pull more neighbors into the high-similarity range.
The normalized distances then pass through a Student-t kernel and the
resulting conditional similarities are symmetrized into a joint form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .distances import GeodesicDistanceMatrix, geodesic_distances
from .graph import AttributedGraph

__all__ = [
    "KernelParams",
    "CalibrationParams",
    "SimilarityMatrix",
    "CalibrationWarning",
    "t_kernel",
    "normalize_row",
    "calibrate_sigma",
    "calibrate_all",
    "conditional_similarity",
    "symmetrize",
    "similarity_from_distances",
    "graph_geodesic_similarity",
]

SIGMA_LO = 1e-4
MAX_DOUBLINGS = 64
DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITER = 100


class CalibrationWarning(UserWarning):
    """Bandwidth search could not bracket the target; a boundary was returned."""


@dataclass(frozen=True)
class KernelParams:
    """Student-t kernel configuration (degrees of freedom)."""

    nu: float

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")


@dataclass(frozen=True)
class CalibrationParams:
    """Per-node normalization obtained from bandwidth calibration.

    ``rho[i]`` is the minimum off-diagonal distance of row i and ``sigma[i]``
    the bandwidth found (or boundary fallback) for target ``q_p``.
    """

    rho: np.ndarray
    sigma: np.ndarray
    q_p: float
    tol: float
    max_iter: int


@dataclass(frozen=True)
class SimilarityMatrix:
    """Square matrix of pair similarities in [0, 1] with a zero diagonal.

    ``kind`` is "conditional" for the asymmetric per-row form and "joint"
    for the symmetrized form.
    """

    matrix: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in ("conditional", "joint"):
            raise ValueError(f"unknown similarity kind {self.kind!r}")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _kernel_log_const(nu: float) -> float:
    # log of sqrt(2*pi) * Gamma((nu+1)/2) / (sqrt(nu*pi) * Gamma(nu/2));
    # log-gamma keeps this finite for large nu.
    return (
        0.5 * math.log(2.0 * math.pi)
        + math.lgamma((nu + 1.0) / 2.0)
        - 0.5 * math.log(nu * math.pi)
        - math.lgamma(nu / 2.0)
    )


def t_kernel(d, nu: float):
    """Student-t similarity kernel, strictly decreasing in |d|.

    Evaluates ``C(nu) * (1 + d^2/nu) ** (-(nu+1)/2)`` elementwise, where the
    constant is computed through log-gamma so very large ``nu`` stays finite.
    Accepts scalars or arrays.
    """
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    d = np.asarray(d, dtype=np.float64)
    log_k = _kernel_log_const(nu) - 0.5 * (nu + 1.0) * np.log1p(d * d / nu)
    out = np.exp(log_k)
    return float(out) if out.ndim == 0 else out


def t_kernel_grad(d, nu: float):
    """Derivative of ``t_kernel`` with respect to d (elementwise)."""
    d = np.asarray(d, dtype=np.float64)
    k = t_kernel(d, nu)
    return -k * (nu + 1.0) * d / (nu + d * d)


def normalize_row(d_row, rho_i: float, sigma_i: float) -> np.ndarray:
    """Shift a distance row by ``rho_i`` and scale by ``sigma_i``."""
    if not sigma_i > 0:
        raise ValueError(f"sigma must be positive, got {sigma_i}")
    return (np.asarray(d_row, dtype=np.float64) - rho_i) / sigma_i


def _compactness(d_row, rho_i, nu, sigma):
    k = t_kernel((d_row - rho_i) / sigma, nu)
    with np.errstate(over="ignore"):
        return float(np.exp2(np.sum(k * k)))


def calibrate_sigma(
    d_row,
    rho_i: float,
    nu: float,
    q_p: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Find the bandwidth whose compactness matches the target ``q_p``.

    ``d_row`` holds the distances from one node to all *other* nodes (the
    self entry must already be removed).  The objective
    ``2 ** sum_j kernel((d_j - rho_i)/sigma)^2`` is non-decreasing in sigma,
    so a sign change brackets the root: the upper end starts at 1 and is
    doubled until the target is crossed, then plain bisection runs until the
    absolute objective error drops below ``tol``.  If the target cannot be
    bracketed (too small a target, or larger than the row can ever reach) the
    nearest boundary is returned and a :class:`CalibrationWarning` is issued.
    """
    d_row = np.asarray(d_row, dtype=np.float64)
    if d_row.size < 2:
        raise ValueError("distance row needs at least 2 entries")
    if not q_p > 1:
        raise ValueError(f"q_p must be > 1, got {q_p}")

    def objective(sigma):
        return _compactness(d_row, rho_i, nu, sigma) - q_p

    f_lo = objective(SIGMA_LO)
    if abs(f_lo) <= tol:
        return SIGMA_LO
    if f_lo > 0:
        # even the sharpest kernel overshoots the target (e.g. all neighbors
        # sit exactly at rho): no root below, return the lower boundary
        warnings.warn(
            f"compactness target {q_p} unreachable from below; returning sigma={SIGMA_LO}",
            CalibrationWarning,
        )
        return SIGMA_LO

    lo, hi = SIGMA_LO, 1.0
    f_hi = objective(hi)
    for _ in range(MAX_DOUBLINGS):
        if f_hi >= 0:
            break
        lo, hi = hi, hi * 2.0
        f_hi = objective(hi)
    if f_hi < 0:
        if abs(f_hi) <= tol:
            return hi
        warnings.warn(
            f"compactness target {q_p} unreachable from above; returning sigma={hi}",
            CalibrationWarning,
        )
        return hi

    mid = hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = objective(mid)
        if abs(f_mid) <= tol:
            return mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    warnings.warn(
        f"bisection did not reach tol={tol} within {max_iter} iterations",
        CalibrationWarning,
    )
    return mid


def calibrate_all(
    d_matrix: np.ndarray,
    nu: float,
    q_p: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CalibrationParams:
    """Row-wise rho and calibrated sigma for a full distance matrix.

    The diagonal is excluded both from ``rho`` (min over j != i) and from
    the calibration sum.
    """
    d_matrix = np.asarray(d_matrix, dtype=np.float64)
    n = d_matrix.shape[0]
    if n < 3:
        raise ValueError("calibration needs at least 3 nodes")
    rho = np.empty(n)
    sigma = np.empty(n)
    idx = np.arange(n)
    for i in range(n):
        row = d_matrix[i, idx != i]
        rho[i] = row.min()
        sigma[i] = calibrate_sigma(row, rho[i], nu, q_p, tol, max_iter)
    return CalibrationParams(rho, sigma, q_p, tol, max_iter)


def conditional_similarity(
    distances, kernel: KernelParams, calib: CalibrationParams
) -> SimilarityMatrix:
    """Row-normalized kernel similarities ``P[i, j] = kernel((d_ij - rho_i)/sigma_i)``.

    Generally asymmetric, since each row carries its own rho and sigma.  The
    diagonal is zeroed by convention.
    """
    d = distances.matrix if isinstance(distances, GeodesicDistanceMatrix) else np.asarray(distances)
    norm = (d - calib.rho[:, None]) / calib.sigma[:, None]
    p = t_kernel(norm, kernel.nu)
    np.fill_diagonal(p, 0.0)
    return SimilarityMatrix(p, "conditional")


def symmetrize(p: SimilarityMatrix, variant: str = "paper") -> SimilarityMatrix:
    """Symmetrize conditional similarities into a joint form.

    The default combines ``p_ij = p_i|j + p_j|i - 2 p_i|j p_j|i``; the
    "fuzzy" variant uses the probabilistic-union form ``p + q - p q``.
    """
    if p.kind != "conditional":
        raise ValueError("symmetrize expects a conditional similarity matrix")
    m = p.matrix
    if variant == "paper":
        joint = m + m.T - 2.0 * m * m.T
    elif variant == "fuzzy":
        joint = m + m.T - m * m.T
    else:
        raise ValueError(f"unknown symmetrize variant {variant!r}")
    np.fill_diagonal(joint, 0.0)
    return SimilarityMatrix(joint, "joint")


def similarity_from_distances(
    d_matrix,
    nu: float,
    q_p: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    symmetrize_variant: str = "paper",
) -> SimilarityMatrix:
    """Full distance-to-joint-similarity pipeline on a precomputed matrix."""
    d = d_matrix.matrix if isinstance(d_matrix, GeodesicDistanceMatrix) else np.asarray(d_matrix)
    calib = calibrate_all(d, nu, q_p, tol, max_iter)
    cond = conditional_similarity(d, KernelParams(nu), calib)
    return symmetrize(cond, symmetrize_variant)


def graph_geodesic_similarity(
    g: AttributedGraph,
    nu: float,
    q_p: float,
    metric="euclidean",
    lambda_: float = 10.0,
    features=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    symmetrize_variant: str = "paper",
    hop_count: bool = False,
) -> SimilarityMatrix:
    """Joint geodesic similarity of a graph: distances, calibration, kernel, symmetrization.

    ``features`` overrides the graph's own feature matrix for edge weighting
    when given (same node order).
    """
    if features is not None:
        g = AttributedGraph(g.n, g.edges, np.asarray(features, dtype=np.float64), g.labels)
    dist = geodesic_distances(g, metric, lambda_, hop_count)
    return similarity_from_distances(dist, nu, q_p, tol, max_iter, symmetrize_variant)
