"""Bayesian inverse problems with Gaussian-process surrogate likelihoods.

The posterior for data ``y = G(u) + noise`` with Gaussian noise covariance
``Gamma`` has density proportional to ``exp(-Phi(u))`` against the prior,
where ``Phi(u) = 0.5 ||y - G(u)||^2_Gamma`` is the misfit potential.  A
quadrature reference posterior (midpoint tensor rule, dimensions up to
three) serves as ground truth for the surrogate-accelerated variants:

    exact         exp(-Phi(u))
    mean_g        exp(-0.5 ||y - mG(u)||^2_Gamma)
    mean_phi      exp(-mPhi(u))
    sample_g      exp(-0.5 ||y - G_draw(u)||^2_Gamma),  one process draw
    sample_phi    exp(-Phi_draw(u))
    marginal_phi  exp(-mPhi(u) + 0.5 v(u))              lognormal mean
    marginal_g    det(I + Gamma^-1 C)^-1/2
                  * exp(-0.5 (y - mG)^T (Gamma + C)^-1 (y - mG)),
                  with C(u) = v(u) I  (independent outputs, shared kernel)

where mG, mPhi are predictive means and v the predictive variance.  Vector
observations are emulated one output at a time on a shared design.  Sample
variants realise joint draws on the fixed evaluation grid (the measurable
object Hellinger distances are computed from), not pathwise samples.

All normalisations go through shifted log-sum-exp, so concentrated
posteriors never underflow to an all-zero density.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_banded
from scipy.special import logsumexp

from hiergp.convergence import RateFit, fit_rate
from hiergp.designs import DesignSet, halton, uniform_grid
from hiergp.hyperfit import HyperBox, estimate
from hiergp.kernels import KernelSpec
from hiergp.regression import FittedGP, fit, predict_mean, predict_var, sample_process

VARIANTS = (
    "exact",
    "mean_g",
    "mean_phi",
    "sample_g",
    "sample_phi",
    "marginal_g",
    "marginal_phi",
)
_G_VARIANTS = ("mean_g", "sample_g", "marginal_g")
_PHI_VARIANTS = ("mean_phi", "sample_phi", "marginal_phi")
_SAMPLE_VARIANTS = ("sample_g", "sample_phi")


@dataclass(frozen=True)
class InverseProblem:
    """Forward map, data, noise covariance and prior on a box domain."""

    domain: tuple[tuple[float, float], ...]
    forward: Callable[[np.ndarray], np.ndarray]
    y: np.ndarray
    gamma: np.ndarray
    prior: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        box = tuple((float(a), float(b)) for a, b in self.domain)
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        gamma = np.atleast_2d(np.asarray(self.gamma, dtype=float))
        if not np.all(np.isfinite(y)):
            raise ValueError("data vector must be finite")
        if gamma.shape != (y.size, y.size):
            raise ValueError("noise covariance shape must match the data vector")
        if not np.allclose(gamma, gamma.T):
            raise ValueError("noise covariance must be symmetric")
        y.setflags(write=False)
        gamma.setflags(write=False)
        object.__setattr__(self, "domain", box)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "gamma", gamma)

    @property
    def dim(self) -> int:
        return len(self.domain)

    @property
    def d_y(self) -> int:
        return self.y.size

    @property
    def volume(self) -> float:
        return float(np.prod([b - a for a, b in self.domain]))

    @cached_property
    def _gamma_cho(self):
        try:
            return cho_factor(self.gamma, lower=True)
        except np.linalg.LinAlgError as exc:
            raise ValueError("noise covariance must be positive definite") from exc

    @cached_property
    def _gamma_eig(self):
        return np.linalg.eigh(self.gamma)

    def prior_density(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if self.prior is None:
            return np.full(pts.shape[0], 1.0 / self.volume)
        return np.asarray(self.prior(pts), dtype=float)

    def forward_at(self, pts: np.ndarray) -> np.ndarray:
        """Forward map at many points, shape (m, d_y)."""
        pts = np.atleast_2d(pts)
        return np.array([np.atleast_1d(self.forward(u)) for u in pts], dtype=float)


def potential(ip: InverseProblem, u) -> float | np.ndarray:
    """Misfit Phi(u) = 0.5 (y - G(u))^T Gamma^{-1} (y - G(u))."""
    pts = np.asarray(u, dtype=float)
    single = pts.ndim <= 1
    resid = ip.y - ip.forward_at(pts)
    sol = cho_solve(ip._gamma_cho, resid.T)
    vals = 0.5 * np.sum(resid.T * sol, axis=0)
    return float(vals[0]) if single else vals


@dataclass(frozen=True)
class QuadratureGrid:
    """Midpoint tensor rule with cached prior values; weights sum to |U|."""

    nodes: np.ndarray
    weights: np.ndarray
    prior_values: np.ndarray
    domain: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for name in ("nodes", "weights", "prior_values"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.weights <= 0.0):
            raise ValueError("quadrature weights must be positive")
        mass = float(self.weights @ self.prior_values)
        if abs(mass - 1.0) > 1e-6:
            raise ValueError(f"prior mass on the grid is {mass:.8f}, expected 1")

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def as_design(self) -> DesignSet:
        return DesignSet(self.nodes, self.domain)


def quadrature_grid(ip: InverseProblem, nodes_per_dim: int) -> QuadratureGrid:
    """Tensor midpoint rule on the problem domain; d <= 3 stays tractable."""
    if ip.dim > 3:
        raise ValueError("quadrature reference supports at most 3 dimensions")
    axes, widths = [], []
    for a, b in ip.domain:
        h = (b - a) / nodes_per_dim
        axes.append(a + h * (np.arange(nodes_per_dim) + 0.5))
        widths.append(h)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    weights = np.full(nodes.shape[0], float(np.prod(widths)))
    return QuadratureGrid(nodes, weights, ip.prior_density(nodes), ip.domain)


# ---------------------------------------------------------------------------
# posterior approximations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PosteriorApprox:
    """One posterior approximation variant and its fitted surrogates."""

    variant: str
    g_surrogates: tuple[FittedGP, ...] = ()
    phi_surrogate: FittedGP | None = None
    grid: DesignSet | None = None
    draws: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant in _G_VARIANTS and not self.g_surrogates:
            raise ValueError(f"{self.variant} requires per-output surrogates of G")
        if self.variant in _PHI_VARIANTS and self.phi_surrogate is None:
            raise ValueError(f"{self.variant} requires a surrogate of the potential")
        if self.variant in _SAMPLE_VARIANTS and (self.grid is None or self.draws is None):
            raise ValueError(f"{self.variant} requires a realised draw on a grid")


def exact_approx() -> PosteriorApprox:
    return PosteriorApprox("exact")


def mean_g_approx(g_surrogates) -> PosteriorApprox:
    return PosteriorApprox("mean_g", g_surrogates=tuple(g_surrogates))


def mean_phi_approx(phi_surrogate: FittedGP) -> PosteriorApprox:
    return PosteriorApprox("mean_phi", phi_surrogate=phi_surrogate)


def marginal_g_approx(g_surrogates) -> PosteriorApprox:
    return PosteriorApprox("marginal_g", g_surrogates=tuple(g_surrogates))


def marginal_phi_approx(phi_surrogate: FittedGP) -> PosteriorApprox:
    return PosteriorApprox("marginal_phi", phi_surrogate=phi_surrogate)


def _seed_tuple(seed, j: int) -> tuple[int, ...]:
    base = tuple(seed) if isinstance(seed, tuple) else (seed,)
    return (*base, j)


def sample_g_approx(g_surrogates, grid: DesignSet, seed) -> PosteriorApprox:
    """Freeze one joint predictive-process draw per output on the grid."""
    g_surrogates = tuple(g_surrogates)
    draws = np.vstack(
        [
            sample_process(gp, grid, seed=_seed_tuple(seed, j), n_draws=1)
            for j, gp in enumerate(g_surrogates)
        ]
    )
    return PosteriorApprox("sample_g", g_surrogates=g_surrogates, grid=grid, draws=draws)


def sample_phi_approx(phi_surrogate: FittedGP, grid: DesignSet, seed) -> PosteriorApprox:
    draws = sample_process(phi_surrogate, grid, seed=_seed_tuple(seed, 0), n_draws=1)
    return PosteriorApprox(
        "sample_phi", phi_surrogate=phi_surrogate, grid=grid, draws=draws
    )


def _gamma_quad(ip: InverseProblem, resid: np.ndarray) -> np.ndarray:
    """(m, d_y) residuals -> r^T Gamma^{-1} r per row."""
    sol = cho_solve(ip._gamma_cho, resid.T)
    return np.sum(resid.T * sol, axis=0)


def log_likelihood_on_points(pa: PosteriorApprox, ip: InverseProblem, pts: np.ndarray) -> np.ndarray:
    """Log of the unnormalised density against the prior, vectorised."""
    pts = np.atleast_2d(pts)
    v = pa.variant
    if v == "exact":
        return -np.atleast_1d(potential(ip, pts))
    if v == "mean_g":
        m = np.column_stack([predict_mean(gp, pts) for gp in pa.g_surrogates])
        return -0.5 * _gamma_quad(ip, ip.y - m)
    if v == "mean_phi":
        return -np.atleast_1d(predict_mean(pa.phi_surrogate, pts))
    if v == "marginal_phi":
        m = np.atleast_1d(predict_mean(pa.phi_surrogate, pts))
        var = np.atleast_1d(predict_var(pa.phi_surrogate, pts))
        return -m + 0.5 * var
    if v == "marginal_g":
        # Shared scalar predictive variance across independent outputs:
        # C(u) = v(u) I, so (Gamma + C)^{-1} and the determinant reduce to
        # the eigenvalues of Gamma shifted by v(u).
        m = np.column_stack([predict_mean(gp, pts) for gp in pa.g_surrogates])
        var = np.atleast_1d(predict_var(pa.g_surrogates[0], pts))
        eigvals, eigvecs = ip._gamma_eig
        rot = (ip.y - m) @ eigvecs
        shifted = eigvals[None, :] + var[:, None]
        if np.any(shifted <= 0.0):
            raise np.linalg.LinAlgError("Gamma + C not positive definite")
        quad = np.sum(rot**2 / shifted, axis=1)
        logdet = np.sum(np.log1p(var[:, None] / eigvals[None, :]), axis=1)
        return -0.5 * logdet - 0.5 * quad
    # sample variants: defined on the realisation grid only
    idx = _match_grid_rows(pa.grid, pts)
    if v == "sample_g":
        resid = ip.y[None, :] - pa.draws[:, idx].T
        return -0.5 * _gamma_quad(ip, resid)
    return -pa.draws[0, idx]


def _match_grid_rows(grid: DesignSet, pts: np.ndarray) -> np.ndarray:
    """Indices of ``pts`` rows in the realisation grid; exact rows required."""
    if pts.shape == grid.points.shape and np.array_equal(pts, grid.points):
        return np.arange(pts.shape[0])
    lookup = {tuple(row): i for i, row in enumerate(grid.points)}
    try:
        return np.array([lookup[tuple(row)] for row in pts], dtype=int)
    except KeyError as exc:
        raise ValueError(
            "sample variants are realised on a fixed grid; densities exist "
            "only at its nodes"
        ) from exc


def approx_density(pa: PosteriorApprox, ip: InverseProblem, u) -> float:
    """Unnormalised density against the prior at one point."""
    pts = np.atleast_2d(np.asarray(u, dtype=float))
    return float(np.exp(log_likelihood_on_points(pa, ip, pts))[0])


def posterior_on_grid(pa: PosteriorApprox, ip: InverseProblem, grid: QuadratureGrid) -> np.ndarray:
    """Normalised posterior density values (against Lebesgue) on the grid."""
    loglik = log_likelihood_on_points(pa, ip, grid.nodes)
    with np.errstate(divide="ignore"):
        logdens = loglik + np.log(grid.prior_values)
    log_z = logsumexp(np.log(grid.weights) + logdens)
    if not np.isfinite(log_z):
        raise ValueError("posterior normalisation failed: zero mass on the grid")
    return np.exp(logdens - log_z)


def reference_posterior(ip: InverseProblem, grid: QuadratureGrid) -> np.ndarray:
    """Quadrature ground-truth posterior density on the grid."""
    return posterior_on_grid(exact_approx(), ip, grid)


def hellinger_on_grid(p_values, q_values, grid: QuadratureGrid) -> float:
    """Hellinger distance between two densities known on a common grid.

    Both inputs are renormalised with the grid weights first, so unnormalised
    densities are accepted.
    """
    p = np.asarray(p_values, dtype=float)
    q = np.asarray(q_values, dtype=float)
    if np.any(p < 0.0) or np.any(q < 0.0):
        raise ValueError("densities must be nonnegative")
    mass_p = float(grid.weights @ p)
    mass_q = float(grid.weights @ q)
    if mass_p <= 0.0 or mass_q <= 0.0:
        raise ValueError("cannot normalise an all-zero density")
    diff = np.sqrt(p / mass_p) - np.sqrt(q / mass_q)
    d2 = 0.5 * float(grid.weights @ diff**2)
    return math.sqrt(min(max(d2, 0.0), 1.0))


# ---------------------------------------------------------------------------
# posterior-error sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    """Posterior-approximation error study over a schedule of design sizes."""

    schedule: tuple[int, ...]
    variants: tuple[str, ...]
    kernel: KernelSpec
    box: HyperBox | None = None
    design_family: str = "uniform"
    quad_nodes_per_dim: int = 512
    n_draws: int = 32
    nugget: float = 1e-12
    seed: int = 0
    estimate_budget: int = 4

    def __post_init__(self):
        sched = tuple(int(s) for s in self.schedule)
        if len(sched) < 1 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("schedule must be strictly increasing and nonempty")
        variants = tuple(self.variants)
        if not variants:
            raise ValueError("variant set must not be empty")
        for v in variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}")
        object.__setattr__(self, "schedule", sched)
        object.__setattr__(self, "variants", variants)


@dataclass(frozen=True)
class SweepCell:
    size: int
    n_points: int
    hellinger: dict[str, float]
    mc_se: dict[str, float]
    surrogate_l2_g: float | None
    surrogate_l2_phi: float | None
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class SweepResult:
    cells: list[SweepCell]
    variants: tuple[str, ...]

    def curve(self, variant: str) -> list[tuple[int, float]]:
        return [
            (c.n_points, c.hellinger[variant])
            for c in self.cells
            if c.ok and variant in c.hellinger
        ]

    def rate(self, variant: str) -> RateFit:
        return fit_rate(self.curve(variant))


def _fit_surrogate(spec, box, design, values, nugget, budget, seed):
    if box is None:
        return fit(spec, design, values, nugget=nugget)
    res = estimate(box, design, values, budget=budget, seed=seed, nugget=nugget)
    fitted_spec = KernelSpec(box.family, res.params, box.mean)
    return fit(fitted_spec, design, values, nugget=nugget)


def _sweep_cell(ip, cfg, size, grid, ref_density, g_true, phi_true):
    try:
        if cfg.design_family == "uniform":
            design = uniform_grid(ip.domain, size)
        elif cfg.design_family == "halton":
            design = halton(ip.domain, size)
        else:
            raise ValueError(f"unknown design family {cfg.design_family!r}")
        cell_seed = int(np.random.default_rng((cfg.seed, size)).integers(2**31))

        need_g = any(v in _G_VARIANTS for v in cfg.variants)
        need_phi = any(v in _PHI_VARIANTS for v in cfg.variants)
        g_gps: tuple[FittedGP, ...] = ()
        phi_gp = None
        l2_g = l2_phi = None
        if need_g:
            g_data = ip.forward_at(design.points)
            # One shared kernel spec across outputs (estimated, when a box is
            # given, from the first output): the marginal variant's product
            # structure assumes identical kernels per output.
            first = _fit_surrogate(
                cfg.kernel, cfg.box, design, g_data[:, 0], cfg.nugget,
                cfg.estimate_budget, cell_seed,
            )
            rest = [
                fit(first.spec, design, g_data[:, j], nugget=cfg.nugget)
                for j in range(1, ip.d_y)
            ]
            g_gps = (first, *rest)
            g_mean = np.column_stack([predict_mean(gp, grid.nodes) for gp in g_gps])
            sq = np.sum((g_true - g_mean) ** 2, axis=1)
            l2_g = math.sqrt(float(grid.weights @ (grid.prior_values * sq)))
        if need_phi:
            phi_data = np.atleast_1d(potential(ip, design.points))
            phi_gp = _fit_surrogate(
                cfg.kernel, cfg.box, design, phi_data, cfg.nugget,
                cfg.estimate_budget, cell_seed,
            )
            phi_mean = np.atleast_1d(predict_mean(phi_gp, grid.nodes))
            l2_phi = math.sqrt(
                float(grid.weights @ (grid.prior_values * (phi_true - phi_mean) ** 2))
            )

        hell: dict[str, float] = {}
        mc_se: dict[str, float] = {}
        grid_design = grid.as_design()
        for v in cfg.variants:
            if v in _SAMPLE_VARIANTS:
                # All draws share one covariance factorisation per process.
                # Reported: root of the average squared distance over draws,
                # with its Monte Carlo standard error (delta method).
                if v == "sample_g":
                    per_output = [
                        sample_process(
                            gp, grid_design, seed=(cfg.seed, size, j), n_draws=cfg.n_draws
                        )
                        for j, gp in enumerate(g_gps)
                    ]
                    realised = [
                        np.vstack([draws[k] for draws in per_output])
                        for k in range(cfg.n_draws)
                    ]
                else:
                    flat = sample_process(
                        phi_gp, grid_design, seed=(cfg.seed, size, 0), n_draws=cfg.n_draws
                    )
                    realised = [flat[k][None, :] for k in range(cfg.n_draws)]
                d2s = []
                for draw in realised:
                    pa = PosteriorApprox(
                        v,
                        g_surrogates=g_gps,
                        phi_surrogate=phi_gp,
                        grid=grid_design,
                        draws=draw,
                    )
                    dens = posterior_on_grid(pa, ip, grid)
                    d2s.append(hellinger_on_grid(ref_density, dens, grid) ** 2)
                d2s = np.array(d2s)
                root = math.sqrt(float(np.mean(d2s)))
                hell[v] = root
                se2 = float(np.std(d2s, ddof=1) / math.sqrt(len(d2s)))
                mc_se[v] = se2 / (2.0 * root) if root > 0.0 else 0.0
            else:
                pa = {
                    "exact": exact_approx,
                    "mean_g": lambda: mean_g_approx(g_gps),
                    "mean_phi": lambda: mean_phi_approx(phi_gp),
                    "marginal_g": lambda: marginal_g_approx(g_gps),
                    "marginal_phi": lambda: marginal_phi_approx(phi_gp),
                }[v]()
                dens = posterior_on_grid(pa, ip, grid)
                hell[v] = hellinger_on_grid(ref_density, dens, grid)
        return SweepCell(size, design.n_points, hell, mc_se, l2_g, l2_phi)
    except Exception as exc:  # noqa: BLE001 - flag the cell, keep the sweep
        return SweepCell(size, 0, {}, {}, None, None, status=f"{type(exc).__name__}: {exc}")


def posterior_error_sweep(ip: InverseProblem, cfg: SweepConfig, jobs: int = 1) -> SweepResult:
    """Hellinger distances of the approximation variants along a design sweep.

    The reference posterior and true forward values are computed once on the
    quadrature grid; each cell then fits surrogates on its design and
    evaluates every requested variant.  Cells are independent and
    seed-deterministic, so parallel execution reproduces serial results.
    """
    if ip.dim > 2:
        raise ValueError("posterior sweeps support at most 2 dimensions")
    grid = quadrature_grid(ip, cfg.quad_nodes_per_dim)
    g_true = ip.forward_at(grid.nodes)
    phi_true = np.atleast_1d(potential(ip, grid.nodes))
    ref = reference_posterior(ip, grid)
    args = [(ip, cfg, size, grid, ref, g_true, phi_true) for size in cfg.schedule]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_sweep_cell, *a) for a in args]
            cells = [f.result() for f in futures]
    else:
        cells = [_sweep_cell(*a) for a in args]
    return SweepResult(cells, cfg.variants)


# ---------------------------------------------------------------------------
# random-walk Metropolis
# ---------------------------------------------------------------------------


def rwm_sampler(
    pa: PosteriorApprox,
    ip: InverseProblem,
    n_samples: int,
    step: float,
    seed: int,
) -> tuple[np.ndarray, float]:
    """Random-walk Metropolis chain targeting an approximation's posterior.

    Gaussian proposals with scale ``step``; proposals outside the domain box
    are rejected outright (the prior carries no mass there).  Returns the
    chain, one state per proposal, and the acceptance rate.  Sample variants
    are grid-realised and have no pointwise density, so they cannot be
    sampled this way.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    if pa.variant in _SAMPLE_VARIANTS:
        raise ValueError("sample variants have grid-realised densities; "
                         "run the chain on a mean or marginal variant instead")
    lo = np.array([a for a, _ in ip.domain])
    hi = np.array([b for _, b in ip.domain])
    rng = np.random.default_rng(seed)

    def log_target(u: np.ndarray) -> float:
        ll = float(log_likelihood_on_points(pa, ip, u[None, :])[0])
        prior = float(ip.prior_density(u[None, :])[0])
        return ll + math.log(prior) if prior > 0.0 else -math.inf

    current = 0.5 * (lo + hi)
    current_log = log_target(current)
    chain = np.empty((n_samples, ip.dim))
    accepted = 0
    for t in range(n_samples):
        proposal = current + step * rng.standard_normal(ip.dim)
        if np.all(proposal >= lo) & np.all(proposal <= hi):
            proposal_log = log_target(proposal)
            if math.log(rng.uniform()) < proposal_log - current_log:
                current, current_log = proposal, proposal_log
                accepted += 1
        chain[t] = current
    return chain, accepted / n_samples


# ---------------------------------------------------------------------------
# built-in forward maps
# ---------------------------------------------------------------------------

_BVP_CELLS = 256
_BVP_OBS = (0.25, 0.5, 0.75)


def _bvp_forward(u: np.ndarray) -> np.ndarray:
    """Two-point boundary value problem -(a p')' = 1 on (0, 1), p(0)=p(1)=0.

    The diffusion coefficient is piecewise constant, a = exp(u_j) on the
    j-th of len(u) equal subintervals; the solve is a direct tridiagonal
    factorisation on a fixed mesh, observed at x = 0.25, 0.5, 0.75.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    m = _BVP_CELLS
    h = 1.0 / m
    centers = (np.arange(m) + 0.5) * h
    piece = np.minimum((centers * u.size).astype(int), u.size - 1)
    a = np.exp(u[piece])
    # rows are interior nodes i = 1..m-1; a[i-1], a[i] flank node i
    lower = -a[1 : m - 1] / h**2
    diag = (a[: m - 1] + a[1:]) / h**2
    upper = -a[1 : m - 1] / h**2
    ab = np.zeros((3, m - 1))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    interior = solve_banded((1, 1), ab, np.ones(m - 1))
    p = np.concatenate([[0.0], interior, [0.0]])
    obs_idx = [int(round(x * m)) for x in _BVP_OBS]
    return p[obs_idx]


def make_forward(name: str, dim: int) -> tuple[Callable[[np.ndarray], np.ndarray], int]:
    """Built-in forward maps selectable by name: (callable, d_y).

    ``identity`` maps u to itself; ``sin-exp`` is the scalar-input pair
    (sin 2 pi u, exp u); ``tridiag-bvp`` observes the diffusion problem
    above at three interior points.
    """
    if name == "identity":
        return (lambda u: np.atleast_1d(np.asarray(u, dtype=float))), dim
    if name == "sin-exp":
        if dim != 1:
            raise ValueError("sin-exp is a scalar-input forward map")
        return (
            lambda u: np.array(
                [math.sin(2.0 * math.pi * float(u[0])), math.exp(float(u[0]))]
            )
        ), 2
    if name == "tridiag-bvp":
        if dim > 3:
            raise ValueError("tridiag-bvp supports up to 3 parameters")
        return _bvp_forward, len(_BVP_OBS)
    raise ValueError(f"unknown forward map {name!r}")
