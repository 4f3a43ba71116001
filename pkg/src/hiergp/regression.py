"""Plug-in Gaussian process regression: predictive mean, covariance, samples.

Conditioning a GP prior with mean m and kernel k on exact observations
f(D) at design points D gives the predictive equations

    mean(u) = m(u) + k(u, D)^T K(D)^{-1} (f(D) - m(D)),
    cov(u, u') = k(u, u') - k(u, D)^T K(D)^{-1} k(u', D),

implemented through a lower-triangular Cholesky factor of K(D) plus nugget.
The fitted state is immutable and cheap to share; prediction and sampling
are read-only.

Also provided are native-space (RKHS) utilities: finite kernel expansions
``g = sum_i a_i k(., z_i)``, their exact native norm, and the native norm of
the fitted interpolant, which by the minimal-norm property never exceeds the
norm of any interpolating element of the native space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from hiergp.designs import DesignSet
from hiergp.kernels import (
    ConditioningError,
    KernelSpec,
    _gram,
    cholesky_kernel_matrix,
    kernel_cross,
    kernel_diag,
    mean_eval,
)

# Diagnostic: number of predictive variances clamped up to zero because of
# round-off.  Plain int update; concurrent readers may observe a stale count.
negative_variance_clamps = 0


def reset_clamp_counter() -> None:
    global negative_variance_clamps
    negative_variance_clamps = 0


def _as_points(u, dim: int) -> tuple[np.ndarray, bool]:
    pts = np.asarray(u, dtype=float)
    single = pts.ndim <= 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, expected {dim}")
    return pts, single


@dataclass(frozen=True)
class FittedGP:
    """Immutable posterior state of a Gaussian process fit.

    ``factor`` is the lower Cholesky factor of the nugget-regularised kernel
    matrix and ``alpha`` solves K alpha = f(D) - m(D).
    """

    spec: KernelSpec
    design: DesignSet
    values: np.ndarray
    factor: np.ndarray
    alpha: np.ndarray
    nugget_used: float

    def __post_init__(self):
        for name in ("values", "factor", "alpha"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_points(self) -> int:
        return self.design.n_points

    @property
    def residual(self) -> np.ndarray:
        return self.values - mean_eval(self.spec.mean, self.design.points)


def fit(spec: KernelSpec, design: DesignSet, fvals, nugget: float = 1e-10) -> FittedGP:
    """Condition the GP prior on exact observations at the design points."""
    fvals = np.asarray(fvals, dtype=float)
    if fvals.shape != (design.n_points,):
        raise ValueError(
            f"expected {design.n_points} observations, got shape {fvals.shape}"
        )
    K, L, nugget_used = cholesky_kernel_matrix(spec, design, nugget)
    recon_err = np.linalg.norm(L @ L.T - K) / max(np.linalg.norm(K), 1e-300)
    if recon_err > 1e-8:
        raise ConditioningError(
            f"factor reconstruction error {recon_err:.2e}", nugget_used
        )
    resid = fvals - mean_eval(spec.mean, design.points)
    alpha = solve_triangular(L, resid, lower=True)
    alpha = solve_triangular(L.T, alpha, lower=False)
    return FittedGP(spec, design, fvals, L, alpha, nugget_used)


def predict_mean(gp: FittedGP, u) -> float | np.ndarray:
    """Predictive mean at one point or an array of points."""
    pts, single = _as_points(u, gp.design.dim)
    cross = kernel_cross(gp.spec, pts, gp.design.points)
    out = mean_eval(gp.spec.mean, pts) + cross @ gp.alpha
    out = np.atleast_1d(out)
    return float(out[0]) if single else out


def predict_var(gp: FittedGP, u) -> float | np.ndarray:
    """Predictive variance at one point or an array of points.

    Values are clamped at zero; round-off can push the exact expression
    slightly negative near design points.
    """
    global negative_variance_clamps
    pts, single = _as_points(u, gp.design.dim)
    cross = kernel_cross(gp.spec, pts, gp.design.points)
    w = solve_triangular(gp.factor, cross.T, lower=True)
    var = kernel_diag(gp.spec, pts) - np.sum(w * w, axis=0)
    negatives = int(np.count_nonzero(var < 0.0))
    if negatives:
        negative_variance_clamps += negatives
        var = np.maximum(var, 0.0)
    return float(var[0]) if single else var


def predict_cov(gp: FittedGP, grid: DesignSet) -> np.ndarray:
    """Predictive covariance matrix on a grid, clamped to be PSD.

    Symmetrised and, when round-off produces negative eigenvalues, projected
    back by flooring the spectrum at zero.
    """
    pts = grid.points if isinstance(grid, DesignSet) else np.atleast_2d(grid)
    prior = _gram(gp.spec, pts)
    cross = kernel_cross(gp.spec, pts, gp.design.points)
    w = solve_triangular(gp.factor, cross.T, lower=True)
    cov = prior - w.T @ w
    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if eigvals[0] < 0.0:
        cov = (eigvecs * np.maximum(eigvals, 0.0)) @ eigvecs.T
        cov = 0.5 * (cov + cov.T)
    return cov


# Starting jitter (relative to sigma2) for factorising predictive
# covariances, escalated tenfold on failure like the kernel-matrix nugget.
SAMPLE_JITTER = 1e-10
_MAX_JITTER_ESCALATIONS = 6


def sample_process(gp: FittedGP, grid: DesignSet, seed: int, n_draws: int) -> np.ndarray:
    """Joint draws of the predictive process on a grid.

    Returns an (n_draws, len(grid)) array; draws are reproducible given the
    seed.  The predictive covariance is jitter-regularised before
    factorisation because it degenerates to zero on dense grids.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    pts = grid.points if isinstance(grid, DesignSet) else np.atleast_2d(grid)
    mean = np.atleast_1d(predict_mean(gp, pts))
    cov = predict_cov(gp, grid)
    m = cov.shape[0]
    jitter = SAMPLE_JITTER
    for attempt in range(_MAX_JITTER_ESCALATIONS + 1):
        try:
            L = np.linalg.cholesky(cov + jitter * gp.spec.sigma2 * np.eye(m))
            break
        except np.linalg.LinAlgError:
            jitter *= 10.0
    else:
        raise ConditioningError("predictive covariance not factorisable", jitter)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_draws, m))
    return mean + z @ L.T


@dataclass(frozen=True)
class RkhsFunction:
    """Finite kernel expansion g(u) = sum_i a_i k(u, z_i)."""

    centers: DesignSet
    weights: np.ndarray
    spec: KernelSpec

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.centers.n_points,):
            raise ValueError("one weight per center required")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __call__(self, u) -> float | np.ndarray:
        pts, single = _as_points(u, self.centers.dim)
        vals = kernel_cross(self.spec, pts, self.centers.points) @ self.weights
        return float(vals[0]) if single else vals


def rkhs_norm(g: RkhsFunction) -> float:
    """Exact native-space norm sqrt(a^T K(z) a) of a kernel expansion."""
    K = _gram(g.spec, g.centers.points)
    return float(np.sqrt(max(g.weights @ K @ g.weights, 0.0)))


def interpolant_norm(gp: FittedGP) -> float:
    """Native norm of the zero-mean interpolant, sqrt(alpha^T (f - m(D))).

    Only meaningful for fits with a zero prior mean.
    """
    if gp.spec.mean.kind != "zero":
        raise ValueError("interpolant norm is defined for zero-mean fits")
    return float(np.sqrt(max(gp.alpha @ gp.residual, 0.0)))
