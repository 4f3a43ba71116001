"""Synthetic test functions with controlled Sobolev-type smoothness.

Smoothness is engineered spectrally in the Dirichlet sine basis on the unit
cube: a series with coefficients ``c_n = n**-(tau + 1/2) * zeta_n``,
``|zeta_n| <= 1``, has finite spectral Sobolev norm of every order below
``tau``.  The tensor variant assigns one decay exponent per coordinate,
producing mixed dominating smoothness.  Norms defined this way are
equivalent to the standard Sobolev norms up to constants, which is all the
rate studies need: only exponents are ever asserted, never constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hiergp.designs import DesignSet, halton, uniform_grid
from hiergp.regression import FittedGP, RkhsFunction, predict_mean, predict_var

UNIT_INTERVAL = ((0.0, 1.0),)


@dataclass(frozen=True)
class ErrorReport:
    """Grid-quadrature error norms of an emulator against the truth.

    ``l2_error`` and ``avg_pred_sd`` approximate the L2 norms of the mean
    error and of the pointwise predictive standard deviation; ``sup_error``
    and ``max_pred_sd`` are grid maxima.
    """

    l2_error: float
    sup_error: float
    avg_pred_sd: float
    grid_size: int
    max_pred_sd: float = 0.0


@dataclass(frozen=True)
class SineSeries:
    """f(u) = sum_n c_n sin(n pi u) on [0, 1]."""

    coefficients: np.ndarray
    tau_tilde: float
    seed: int | None = None

    kind = "sine_series"
    domain = UNIT_INTERVAL

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def smoothness(self) -> float:
        return self.tau_tilde

    def __call__(self, u) -> float | np.ndarray:
        pts = np.asarray(u, dtype=float)
        single = pts.ndim == 0
        x = pts.reshape(-1)
        modes = np.arange(1, self.coefficients.size + 1)
        vals = np.sin(math.pi * np.outer(x, modes)) @ self.coefficients
        return float(vals[0]) if single else vals


@dataclass(frozen=True)
class TensorSineSeries:
    """f(u) = sum_k c_k prod_j sin(k_j pi u_j) on the unit cube."""

    coefficients: np.ndarray
    r_tilde: tuple[float, ...]
    seed: int | None = None

    kind = "tensor_sine_series"

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != len(self.r_tilde):
            raise ValueError("coefficient tensor rank must match len(r_tilde)")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "r_tilde", tuple(float(r) for r in self.r_tilde))

    @property
    def dim(self) -> int:
        return self.coefficients.ndim

    @property
    def domain(self):
        return ((0.0, 1.0),) * self.dim

    @property
    def smoothness(self) -> tuple[float, ...]:
        return self.r_tilde

    def __call__(self, u) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(u, dtype=float))
        if pts.shape[1] != self.dim:
            raise ValueError(f"points must have dimension {self.dim}")
        sines = [
            np.sin(math.pi * np.outer(pts[:, j], np.arange(1, m + 1)))
            for j, m in enumerate(self.coefficients.shape)
        ]
        if self.dim == 1:
            return sines[0] @ self.coefficients
        if self.dim == 2:
            return np.einsum("pa,ab,pb->p", sines[0], self.coefficients, sines[1])
        if self.dim == 3:
            return np.einsum(
                "pa,abc,pb,pc->p", sines[0], self.coefficients, sines[1], sines[2]
            )
        raise NotImplementedError("tensor series implemented for d <= 3")


@dataclass(frozen=True)
class RkhsSection:
    """A kernel expansion used as ground truth; exactly reproducible by a fit."""

    fn: RkhsFunction

    kind = "rkhs_section"

    @property
    def domain(self):
        return self.fn.centers.domain

    @property
    def smoothness(self):
        return None

    def __call__(self, u):
        return self.fn(u)


@dataclass(frozen=True)
class CustomFunction:
    fn: object
    domain: tuple[tuple[float, float], ...]
    name: str = "custom"

    kind = "custom"
    smoothness = None

    def __call__(self, u):
        return self.fn(u)


def make_sine_series(tau_tilde: float, n_modes: int, seed: int) -> SineSeries:
    """Random sign series c_n = n**-(tau+1/2) zeta_n, zeta_n in {-1, +1}."""
    if tau_tilde <= 0.5:
        raise ValueError("tau_tilde must exceed 1/2")
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=n_modes)
    modes = np.arange(1, n_modes + 1, dtype=float)
    return SineSeries(signs * modes ** -(tau_tilde + 0.5), tau_tilde, seed)


def make_tensor_sine_series(r_tilde, n_modes: int, seed: int) -> TensorSineSeries:
    """Mixed-smoothness tensor series with per-coordinate decay exponents."""
    r_tilde = tuple(float(r) for r in r_tilde)
    if min(r_tilde) <= 0.5:
        raise ValueError("every r_tilde entry must exceed 1/2")
    d = len(r_tilde)
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=(n_modes,) * d)
    modes = np.arange(1, n_modes + 1, dtype=float)
    coeff = signs
    for j, r in enumerate(r_tilde):
        shape = [1] * d
        shape[j] = n_modes
        coeff = coeff * (modes ** -(r + 0.5)).reshape(shape)
    return TensorSineSeries(coeff, r_tilde, seed)


def spectral_norm(f, tau) -> float:
    """Spectral Sobolev norm of a sine series.

    One dimension: sqrt(sum (1 + (n pi)^2)**tau c_n^2 / 2).  Tensor series
    use the product weights with one exponent per coordinate.
    """
    if isinstance(f, SineSeries):
        if np.ndim(tau) != 0:
            raise ValueError("scalar smoothness order expected in 1D")
        modes = np.arange(1, f.coefficients.size + 1, dtype=float)
        weights = (1.0 + (modes * math.pi) ** 2) ** float(tau)
        return float(np.sqrt(np.sum(weights * f.coefficients**2) / 2.0))
    if isinstance(f, TensorSineSeries):
        taus = np.broadcast_to(np.asarray(tau, dtype=float), (f.dim,))
        sq = f.coefficients**2
        for j, t in enumerate(taus):
            modes = np.arange(1, f.coefficients.shape[j] + 1, dtype=float)
            shape = [1] * f.dim
            shape[j] = modes.size
            sq = sq * ((1.0 + (modes * math.pi) ** 2) ** t).reshape(shape)
        return float(np.sqrt(np.sum(sq) / 2.0**f.dim))
    raise TypeError("spectral_norm requires a spectral (sine-series) test function")


def default_eval_grid(domain) -> DesignSet:
    """Evaluation grid for L2-norm quadrature on a box.

    Uniform 2**12 points in 1D and 2**7 per axis in 2D, Halton 2**14 points
    above; the quadrature error sits well below the emulation errors the
    rate studies measure.
    """
    d = len(domain)
    if d == 1:
        return uniform_grid(domain, 2**12)
    if d == 2:
        return uniform_grid(domain, 2**7)
    return halton(domain, 2**14)


def error_norms(gp: FittedGP, f, eval_grid: DesignSet) -> ErrorReport:
    """Grid-quadrature L2/sup errors of the mean and predictive-sd norms."""
    pts = eval_grid.points
    vol = eval_grid.volume
    diff = np.asarray(f(pts), dtype=float) - predict_mean(gp, pts)
    var = predict_var(gp, pts)
    return ErrorReport(
        l2_error=float(np.sqrt(np.mean(diff**2) * vol)),
        sup_error=float(np.max(np.abs(diff))),
        avg_pred_sd=float(np.sqrt(np.mean(var) * vol)),
        grid_size=eval_grid.n_points,
        max_pred_sd=float(np.sqrt(np.max(var))),
    )


# ---------------------------------------------------------------------------
# JSON recipes
# ---------------------------------------------------------------------------


def recipe_to_dict(f) -> dict:
    if isinstance(f, SineSeries):
        if f.seed is None:
            raise ValueError("only seeded sine series are serialisable")
        return {
            "kind": f.kind,
            "tau_tilde": f.tau_tilde,
            "n_modes": int(f.coefficients.size),
            "seed": f.seed,
        }
    if isinstance(f, TensorSineSeries):
        if f.seed is None:
            raise ValueError("only seeded tensor series are serialisable")
        return {
            "kind": f.kind,
            "r_tilde": list(f.r_tilde),
            "n_modes": int(f.coefficients.shape[0]),
            "seed": f.seed,
        }
    raise TypeError(f"no JSON recipe for test functions of kind {type(f).__name__}")


def function_from_recipe(obj: dict):
    kind = obj.get("kind")
    if kind == "sine_series":
        return make_sine_series(
            float(obj["tau_tilde"]), int(obj["n_modes"]), int(obj["seed"])
        )
    if kind == "tensor_sine_series":
        return make_tensor_sine_series(
            obj["r_tilde"], int(obj["n_modes"]), int(obj["seed"])
        )
    raise ValueError(f"unknown test-function kind {kind!r}")
