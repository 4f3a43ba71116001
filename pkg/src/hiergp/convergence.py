"""Empirical convergence-rate studies and their theoretical rate targets.

A study sweeps an increasing schedule of design sizes: for each size it
builds the design, optionally re-estimates hyper-parameters inside a fixed
compact box, fits the emulator, and records geometry diagnostics together
with grid-quadrature error norms.  Rates are then extracted by least
squares on (log N, log error).

Predicted exponents follow the plug-in error bounds.  With tau the native
Sobolev order of the kernel (bounded between tau_minus and tau_plus along
the sweep) and tau_tilde the smoothness of the target, the mean error in
the H^beta norm scales like

    h ** (min(tau_tilde, tau_minus) - beta) * rho ** max(tau_plus - tau_tilde, 0),

so with fill distance h ~ N**-r_h and mesh ratio rho ~ N**r_rho the rate in
N is ``r_h * (min(tau_tilde, tau_minus) - beta) - r_rho * max(tau_plus -
tau_tilde, 0)``.  Sparse-grid (separable-kernel) studies use the
mixed-smoothness analogue, which carries an extra polylogarithmic factor in
dimensions above one.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from hiergp.designs import (
    CLENSHAW_CURTIS,
    NESTED_UNIFORM,
    DesignSet,
    GeometryDiagnostics,
    SparseGridSpec,
    geometry,
    halton,
    smolyak_grid,
    uniform_grid,
)
from hiergp.hyperfit import HyperBox, estimate
from hiergp.kernels import KernelSpec
from hiergp.regression import fit
from hiergp.testbed import ErrorReport, default_eval_grid, error_norms

MATCHED = "matched"
UNDER_SMOOTHED = "under"
OVER_SMOOTHED = "over"


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log error against log N.

    ``slope`` is the positive decay rate (the negated regression slope).
    """

    slope: float
    intercept: float
    r_squared: float
    points_used: int


@dataclass(frozen=True)
class TheoremRate:
    """Predicted rate exponents for a study configuration.

    ``exponent_in_N`` is the headline algebraic rate; sparse-grid studies
    additionally report the power of the log factor and the auxiliary
    exponent ``alpha_prime`` that drives it.
    """

    exponent_in_h: float
    exponent_in_rho: float
    exponent_in_N: float
    regime: str
    alpha_prime: float | None = None
    polylog_power: float = 0.0


def predicted_rate_matern(
    tau_tilde: float,
    tau_minus: float,
    tau_plus: float,
    beta: float = 0.0,
    d: int = 1,
    r_h: float | None = None,
    r_rho: float = 0.0,
) -> TheoremRate:
    """Predicted classical-kernel rate for given smoothness bounds.

    ``r_h`` and ``r_rho`` are the design-family exponents h ~ N**-r_h and
    rho ~ N**r_rho; quasi-uniform families have r_rho = 0 and r_h defaults
    to the optimal 1/d.
    """
    if tau_minus > tau_plus:
        raise ValueError("tau_minus must not exceed tau_plus")
    if beta > tau_tilde:
        raise ValueError("beta must not exceed tau_tilde")
    if r_h is None:
        r_h = 1.0 / d
    exp_h = min(tau_tilde, tau_minus) - beta
    exp_rho = max(tau_plus - tau_tilde, 0.0)
    exp_n = r_h * exp_h - r_rho * exp_rho
    if tau_plus < tau_tilde:
        regime = UNDER_SMOOTHED
    elif tau_minus > tau_tilde:
        regime = OVER_SMOOTHED
    else:
        regime = MATCHED
    return TheoremRate(exp_h, exp_rho, exp_n, regime)


def predicted_rate_separable(
    r_tilde,
    r_minus,
    r_plus,
    beta=None,
    r_h: float = 1.0,
    r_rho: float = 0.0,
) -> TheoremRate:
    """Predicted sparse-grid rate under mixed dominating smoothness.

    alpha  = min_j [ r_h (min(r_tilde_j, r_minus_j) - beta_j)
                     - r_rho max(r_plus_j - r_tilde_j, 0) ]
    alpha' = min_j [ r_h (min(r_tilde_j, r_plus_j) - beta_j)
                     - r_rho max(r_minus_j - r_tilde_j, 0) ]

    and the error decays like N**-alpha (log N)**((1 + alpha')(d - 1)).
    """
    r_tilde = np.atleast_1d(np.asarray(r_tilde, dtype=float))
    d = r_tilde.size
    r_minus = np.broadcast_to(np.asarray(r_minus, dtype=float), (d,))
    r_plus = np.broadcast_to(np.asarray(r_plus, dtype=float), (d,))
    beta_v = (
        np.zeros(d) if beta is None else np.broadcast_to(np.asarray(beta, dtype=float), (d,))
    )
    if np.any(r_minus > r_plus):
        raise ValueError("r_minus must not exceed r_plus componentwise")
    if np.any(beta_v > r_tilde):
        raise ValueError("beta must not exceed r_tilde componentwise")
    terms = r_h * (np.minimum(r_tilde, r_minus) - beta_v) - r_rho * np.maximum(
        r_plus - r_tilde, 0.0
    )
    terms_prime = r_h * (np.minimum(r_tilde, r_plus) - beta_v) - r_rho * np.maximum(
        r_minus - r_tilde, 0.0
    )
    j = int(np.argmin(terms))
    alpha = float(terms[j])
    alpha_prime = float(np.min(terms_prime))
    if np.any(r_plus < r_tilde):
        regime = UNDER_SMOOTHED
    elif np.all(r_minus > r_tilde):
        regime = OVER_SMOOTHED
    else:
        regime = MATCHED
    return TheoremRate(
        exponent_in_h=float(np.minimum(r_tilde, r_minus)[j] - beta_v[j]),
        exponent_in_rho=float(np.maximum(r_plus - r_tilde, 0.0)[j]),
        exponent_in_N=alpha,
        regime=regime,
        alpha_prime=alpha_prime,
        polylog_power=(1.0 + alpha_prime) * (d - 1),
    )


def fit_rate(pairs) -> RateFit:
    """Least-squares power-law fit to (N, error) pairs with positive errors."""
    clean = [(n, e) for n, e in pairs if e > 0.0 and math.isfinite(e)]
    if len(clean) < 3:
        raise ValueError("rate fit requires at least 3 positive-error pairs")
    log_n = np.log([n for n, _ in clean])
    log_e = np.log([e for _, e in clean])
    slope, intercept = np.polyfit(log_n, log_e, 1)
    pred = slope * log_n + intercept
    ss_res = float(np.sum((log_e - pred) ** 2))
    ss_tot = float(np.sum((log_e - np.mean(log_e)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(-float(slope), float(intercept), float(r2), len(clean))


# ---------------------------------------------------------------------------
# study configuration and execution
# ---------------------------------------------------------------------------

UNIFORM = "uniform"
HALTON = "halton"
SMOLYAK_CC = "smolyak_cc"
SMOLYAK_UNIFORM = "smolyak_uniform"

_DESIGN_FAMILIES = (UNIFORM, HALTON, SMOLYAK_CC, SMOLYAK_UNIFORM)


@dataclass(frozen=True)
class DesignFamily:
    """A named family of designs indexed by one integer size parameter.

    The size parameter is points-per-axis for uniform grids, the point
    count for Halton sets, and the level for Smolyak grids.
    """

    family: str
    domain: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.family not in _DESIGN_FAMILIES:
            raise ValueError(f"unknown design family {self.family!r}")
        object.__setattr__(
            self, "domain", tuple((float(a), float(b)) for a, b in self.domain)
        )

    @property
    def dim(self) -> int:
        return len(self.domain)

    def build(self, size: int) -> DesignSet:
        if self.family == UNIFORM:
            return uniform_grid(self.domain, size)
        if self.family == HALTON:
            return halton(self.domain, size)
        one_dim = CLENSHAW_CURTIS if self.family == SMOLYAK_CC else NESTED_UNIFORM
        return smolyak_grid(SparseGridSpec(size, self.dim, one_dim), self.domain)

    def rate_exponents(self) -> tuple[float, float]:
        """(r_h, r_rho) of the family: h ~ N**-r_h, rho ~ N**r_rho.

        For Smolyak families these are the one-dimensional exponents used by
        the sparse-grid rate; boundary clustering makes the nested cosine
        points non-quasi-uniform (r_rho = 1) while nested uniform points are
        quasi-uniform (r_rho = 0).
        """
        if self.family == SMOLYAK_CC:
            return 1.0, 1.0
        if self.family == SMOLYAK_UNIFORM:
            return 1.0, 0.0
        return 1.0 / self.dim, 0.0


@dataclass(frozen=True)
class StudyConfig:
    """One convergence sweep: designs, target function, kernel policy.

    With ``box`` unset the kernel is held fixed at ``kernel`` across the
    sweep; otherwise the free hyper-parameters are re-estimated for every
    design inside the box (the same box along the whole sweep, so the
    estimates stay in one compact set).
    """

    design: DesignFamily
    schedule: tuple[int, ...]
    test_function: object
    kernel: KernelSpec
    box: HyperBox | None = None
    eval_grid: DesignSet | None = None
    nugget: float = 1e-12
    seed: int = 0
    estimate_budget: int = 6

    def __post_init__(self):
        sched = tuple(int(s) for s in self.schedule)
        if len(sched) < 4 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("schedule must be strictly increasing with length >= 4")
        object.__setattr__(self, "schedule", sched)


@dataclass(frozen=True)
class CellResult:
    """Outcome of one sweep cell; ``status`` is "ok" or an error message."""

    size: int
    n_points: int
    geom: GeometryDiagnostics | None
    errors: ErrorReport | None
    params: object | None
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _run_cell(cfg: StudyConfig, size: int, eval_grid: DesignSet) -> CellResult:
    try:
        design = cfg.design.build(size)
        fvals = np.asarray(cfg.test_function(design.points), dtype=float)
        if cfg.box is not None:
            seed = np.random.default_rng((cfg.seed, size)).integers(2**31)
            res = estimate(
                cfg.box,
                design,
                fvals,
                budget=cfg.estimate_budget,
                seed=int(seed),
                nugget=cfg.nugget,
            )
            spec = KernelSpec(cfg.box.family, res.params, cfg.box.mean)
        else:
            spec = cfg.kernel
        gp = fit(spec, design, fvals, nugget=cfg.nugget)
        geom = geometry(design) if design.n_points >= 2 else None
        rep = error_norms(gp, cfg.test_function, eval_grid)
        return CellResult(size, design.n_points, geom, rep, spec.params)
    except Exception as exc:  # noqa: BLE001 - cell failures must not kill the sweep
        return CellResult(size, 0, None, None, None, status=f"{type(exc).__name__}: {exc}")


def run_study(cfg: StudyConfig, jobs: int = 1) -> list[CellResult]:
    """Execute a sweep; failed cells are flagged, not fatal.

    Cells are independent; per-cell randomness is derived from (seed, size)
    so serial and parallel execution produce identical results.
    """
    eval_grid = cfg.eval_grid or default_eval_grid(cfg.design.domain)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_run_cell, cfg, size, eval_grid) for size in cfg.schedule
            ]
            return [f.result() for f in futures]
    return [_run_cell(cfg, size, eval_grid) for size in cfg.schedule]


def sup_error_study(cfg: StudyConfig, jobs: int = 1):
    """Sweep reporting sup-norm quantities.

    Returns (cells, sup_pairs, sd_pairs) where the pairs hold (N, sup error)
    and (N, max predictive sd) for the successful cells.  Rate targets for
    these quantities lose d/2 relative to the L2 exponent through the
    embedding into continuous functions.
    """
    cells = run_study(cfg, jobs=jobs)
    sup_pairs = [(c.n_points, c.errors.sup_error) for c in cells if c.ok]
    sd_pairs = [(c.n_points, c.errors.max_pred_sd) for c in cells if c.ok]
    return cells, sup_pairs, sd_pairs


def rate_from_cells(cells, which: str = "l2_error", tail: int | None = None) -> RateFit:
    """Rate fit over the asymptotic tail of a sweep.

    Uses the last max(4, ceil(len/2)) successful cells by default; early
    cells sit in the pre-asymptotic regime and would pollute the slope.
    """
    ok = [c for c in cells if c.ok]
    if tail is None:
        tail = max(4, math.ceil(len(ok) / 2))
    ok = ok[-tail:]
    pairs = [(c.n_points, getattr(c.errors, which)) for c in ok]
    return fit_rate(pairs)


def assumption_flags(tau_tilde, tau_minus, d: int) -> list[str]:
    """Warnings for smoothness configurations outside the validated range."""
    flags = []
    for name, value in (("tau_tilde", tau_tilde), ("tau_minus", tau_minus)):
        if value is None:
            continue
        for v in np.atleast_1d(value):
            if math.floor(v) <= d / 2.0:
                flags.append(
                    f"{name}={v:g} has integer part <= d/2; rate guarantees may not apply"
                )
                break
    return flags
