"""Empirical-Bayes point estimation of kernel hyper-parameters.

The estimate maximises the log marginal likelihood (optionally plus a prior
log-density, for MAP estimation) over a compact box of admissible values.
The marginal variance has a closed-form profile maximiser and is never
searched numerically; the remaining free parameters are optimised in log
space by coordinate-wise golden-section refinement from a Latin-hypercube
set of starting points.  The search is derivative-free and deterministic
given the seed.

Keeping the estimates inside a fixed compact box is not a convenience: the
convergence behaviour of the plug-in emulator is only controlled when the
estimated parameters stay bounded away from zero and infinity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.linalg import solve_triangular

from hiergp.designs import DesignSet
from hiergp.kernels import (
    MATERN,
    SEPARABLE_MATERN,
    ConditioningError,
    KernelSpec,
    MaternParams,
    MeanSpec,
    SepMaternParams,
    cholesky_kernel_matrix,
    mean_eval,
)

_LOG_2PI = math.log(2.0 * math.pi)
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

DEFAULT_SIGMA2_BOUNDS = (1e-6, 1e6)
DEFAULT_LAM_BOUNDS = (1e-2, 10.0)
# The smoothness floor keeps tau = nu + d/2 above d/2 in one and two
# dimensions, as the rate theory requires.
DEFAULT_NU_BOUNDS = (0.6, 4.0)


class EstimationError(RuntimeError):
    """No admissible hyper-parameter value produced a usable fit."""


@dataclass(frozen=True)
class ParamBounds:
    """Closed interval for one hyper-parameter, optionally pinned."""

    lo: float
    hi: float
    fixed: float | None = None

    def __post_init__(self):
        if not (0.0 < self.lo <= self.hi < math.inf):
            raise ValueError(f"bounds must satisfy 0 < lo <= hi < inf, got {self}")
        if self.fixed is not None and not (self.lo <= self.fixed <= self.hi):
            raise ValueError(f"fixed value {self.fixed} outside [{self.lo}, {self.hi}]")

    @staticmethod
    def fixed_at(value: float) -> "ParamBounds":
        return ParamBounds(value, value, value)

    @property
    def is_free(self) -> bool:
        return self.fixed is None and self.lo < self.hi

    def pin(self) -> float:
        """Value of a non-free parameter."""
        return self.fixed if self.fixed is not None else self.lo

    def clip(self, value: float) -> float:
        return min(max(value, self.lo), self.hi)


@dataclass(frozen=True)
class HyperBox:
    """Compact search box over the hyper-parameters of one kernel family.

    ``bounds`` maps parameter names to intervals: ``sigma2``, ``lam``,
    ``nu`` for the classical Matern family, and ``sigma2``, ``lam_1``,
    ``nu_1``, ... for the separable family.
    """

    family: str
    bounds: Mapping[str, ParamBounds]
    mean: MeanSpec = field(default_factory=MeanSpec.zero)

    def __post_init__(self):
        names = set(self.bounds)
        if self.family == MATERN:
            expected = {"sigma2", "lam", "nu"}
        elif self.family == SEPARABLE_MATERN:
            d = (len(names) - 1) // 2
            expected = {"sigma2"} | {f"lam_{j}" for j in range(1, d + 1)} | {
                f"nu_{j}" for j in range(1, d + 1)
            }
        else:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if names != expected:
            raise ValueError(f"expected bounds for {sorted(expected)}, got {sorted(names)}")
        object.__setattr__(self, "bounds", dict(self.bounds))

    @staticmethod
    def matern_default(
        sigma2: ParamBounds | None = None,
        lam: ParamBounds | None = None,
        nu: ParamBounds | None = None,
        mean: MeanSpec | None = None,
    ) -> "HyperBox":
        return HyperBox(
            MATERN,
            {
                "sigma2": sigma2 or ParamBounds(*DEFAULT_SIGMA2_BOUNDS),
                "lam": lam or ParamBounds(*DEFAULT_LAM_BOUNDS),
                "nu": nu or ParamBounds(*DEFAULT_NU_BOUNDS),
            },
            mean or MeanSpec.zero(),
        )

    @staticmethod
    def separable_default(dim: int, mean: MeanSpec | None = None, **overrides) -> "HyperBox":
        bounds: dict[str, ParamBounds] = {"sigma2": ParamBounds(*DEFAULT_SIGMA2_BOUNDS)}
        for j in range(1, dim + 1):
            bounds[f"lam_{j}"] = ParamBounds(*DEFAULT_LAM_BOUNDS)
            bounds[f"nu_{j}"] = ParamBounds(*DEFAULT_NU_BOUNDS)
        bounds.update(overrides)
        return HyperBox(SEPARABLE_MATERN, bounds, mean or MeanSpec.zero())

    @property
    def dim(self) -> int:
        if self.family == MATERN:
            return 1
        return (len(self.bounds) - 1) // 2

    def make_params(self, values: Mapping[str, float]):
        if self.family == MATERN:
            return MaternParams(values["sigma2"], values["lam"], values["nu"])
        per_dim = tuple(
            (values[f"lam_{j}"], values[f"nu_{j}"]) for j in range(1, self.dim + 1)
        )
        return SepMaternParams(values["sigma2"], per_dim)

    def make_spec(self, values: Mapping[str, float]) -> KernelSpec:
        return KernelSpec(self.family, self.make_params(values), self.mean)

    def contains(self, params) -> bool:
        values = self._values_of(params)
        return all(
            b.lo * (1 - 1e-12) <= values[name] <= b.hi * (1 + 1e-12)
            for name, b in self.bounds.items()
        )

    def _values_of(self, params) -> dict[str, float]:
        if self.family == MATERN:
            return {"sigma2": params.sigma2, "lam": params.lam, "nu": params.nu}
        out = {"sigma2": params.sigma2}
        for j, (lam, nu) in enumerate(params.per_dim, start=1):
            out[f"lam_{j}"] = lam
            out[f"nu_{j}"] = nu
        return out


@dataclass(frozen=True)
class EstimationResult:
    params: MaternParams | SepMaternParams
    log_marginal: float
    evaluations: int
    converged: bool


def log_marginal_likelihood(
    spec: KernelSpec, design: DesignSet, fvals, nugget: float = 1e-10
) -> float:
    """Gaussian log marginal likelihood of observations under the GP prior.

    -1/2 r^T K^{-1} r - 1/2 log det K - N/2 log 2 pi, with the residual
    r = f(D) - m(D) and the determinant read off the Cholesky diagonal.
    """
    fvals = np.asarray(fvals, dtype=float)
    _, L, _ = cholesky_kernel_matrix(spec, design, nugget)
    resid = fvals - mean_eval(spec.mean, design.points)
    w = solve_triangular(L, resid, lower=True)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    n = design.n_points
    return float(-0.5 * (w @ w) - 0.5 * logdet - 0.5 * n * _LOG_2PI)


def profile_sigma2(
    spec: KernelSpec, design: DesignSet, fvals, floor: float = 1e-12, nugget: float = 1e-10
) -> float:
    """Closed-form maximiser of the marginal likelihood in the variance.

    With Ktilde the unit-variance kernel matrix, the maximiser is
    r^T Ktilde^{-1} r / N.  A zero residual is degenerate (the likelihood
    increases as the variance shrinks); the floor is returned with a warning.
    """
    fvals = np.asarray(fvals, dtype=float)
    unit = spec.with_params(spec.params.with_sigma2(1.0))
    _, L, _ = cholesky_kernel_matrix(unit, design, nugget)
    resid = fvals - mean_eval(spec.mean, design.points)
    w = solve_triangular(L, resid, lower=True)
    quad = float(w @ w) / design.n_points
    if quad <= 0.0:
        warnings.warn(
            "zero residual: profiled variance is degenerate, returning floor",
            RuntimeWarning,
            stacklevel=2,
        )
        return floor
    return max(quad, floor)


def _golden_max(f: Callable[[float], float], lo: float, hi: float, iters: int = 28):
    """Deterministic golden-section maximisation on [lo, hi]."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def estimate(
    box: HyperBox,
    design: DesignSet,
    fvals,
    objective: str = "mle",
    log_prior: Callable[[Mapping[str, float]], float] | None = None,
    budget: int = 8,
    seed: int = 0,
    nugget: float = 1e-10,
    sweeps: int = 3,
) -> EstimationResult:
    """Point estimate of the hyper-parameters inside a compact box.

    Multi-start search: ``budget`` Latin-hypercube starting points in the
    log-parameter box, each refined by coordinate-wise golden sections.  The
    variance, when free, is profiled in closed form at every objective
    evaluation and clipped to its bounds.  With ``objective="map"`` the
    supplied ``log_prior`` (a callable on the dict of log-parameters) is
    added; a missing prior means a flat one, reproducing the MLE.

    The returned parameters always lie inside the box.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if objective not in ("mle", "map"):
        raise ValueError(f"objective must be 'mle' or 'map', got {objective!r}")
    fvals = np.asarray(fvals, dtype=float)

    pinned = {n: b.pin() for n, b in box.bounds.items() if not b.is_free}
    profile_variance = "sigma2" not in pinned
    search_names = [
        n for n, b in box.bounds.items() if b.is_free and n != "sigma2"
    ]
    evaluations = 0

    def evaluate(xlog: np.ndarray):
        nonlocal evaluations
        evaluations += 1
        values = dict(pinned)
        for name, lx in zip(search_names, xlog):
            values[name] = math.exp(lx)
        try:
            if profile_variance:
                s2_bounds = box.bounds["sigma2"]
                unit_spec = box.make_spec({**values, "sigma2": 1.0})
                s2 = profile_sigma2(
                    unit_spec, design, fvals, floor=s2_bounds.lo, nugget=nugget
                )
                values["sigma2"] = s2_bounds.clip(s2)
            spec = box.make_spec(values)
            lml = log_marginal_likelihood(spec, design, fvals, nugget)
        except ConditioningError:
            return -math.inf, -math.inf, values
        obj = lml
        if objective == "map" and log_prior is not None:
            obj = obj + float(log_prior({n: math.log(v) for n, v in values.items()}))
        return obj, lml, values

    best = None  # (obj, lml, values); strict improvement keeps first-best ties

    def consider(result):
        nonlocal best
        if math.isfinite(result[0]) and (best is None or result[0] > best[0]):
            best = result

    if not search_names:
        consider(evaluate(np.empty(0)))
        if best is None:
            raise EstimationError("hyper-parameter evaluation failed to condition")
        return EstimationResult(
            box.make_params(best[2]), best[1], evaluations, True
        )

    lo_log = np.array([math.log(box.bounds[n].lo) for n in search_names])
    hi_log = np.array([math.log(box.bounds[n].hi) for n in search_names])
    rng = np.random.default_rng(seed)
    strata = np.stack([rng.permutation(budget) for _ in search_names], axis=1)
    starts = lo_log + (strata + 0.5) / budget * (hi_log - lo_log)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for start in starts:
            x = start.copy()
            current = evaluate(x)
            for _ in range(sweeps):
                for j in range(len(search_names)):
                    def along(lx, j=j):
                        trial = x.copy()
                        trial[j] = lx
                        return evaluate(trial)[0]

                    xj, _ = _golden_max(along, lo_log[j], hi_log[j])
                    x[j] = xj
                current = evaluate(x)
            consider(current)

    if best is None:
        raise EstimationError("all starting points failed to condition")
    return EstimationResult(box.make_params(best[2]), best[1], evaluations, True)
