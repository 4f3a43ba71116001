"""Matern-family covariance kernels, prior mean functions and kernel matrices.

The classical Matern kernel implemented here is parameterised as

    k(r) = sigma2 / (Gamma(nu) 2**(nu-1)) * (r/lam)**nu * B_nu(r/lam),

where ``B_nu`` is the modified Bessel function of the second kind, ``sigma2``
the marginal variance, ``lam`` the correlation length and ``nu`` the
smoothness.  Note that the scaled distance is ``r/lam`` directly, not
``sqrt(2 nu) r / lam`` as in some other parameterisations.  The separable
(tensor-product) variant multiplies one-dimensional Matern factors, one per
coordinate, with a single overall variance.

Kernel matrices are assembled exactly symmetric (the upper triangle is a
mirror of the lower one) and validated by Cholesky factorisation under an
escalating-nugget policy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform
from scipy.special import gammaln, kv, kve

_LN2 = math.log(2.0)

# Value returned by bessel_k when the true result exceeds double range.
BESSEL_SATURATION = np.finfo(float).max


class ConditioningError(np.linalg.LinAlgError):
    """Kernel matrix could not be factorised even after nugget escalation."""

    def __init__(self, message: str, nugget_tried: float):
        super().__init__(message)
        self.nugget_tried = nugget_tried


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class MaternParams:
    """Hyper-parameters of the classical Matern kernel.

    Attributes
    ----------
    sigma2 : float
        Marginal variance, ``k(u, u) = sigma2``.
    lam : float
        Correlation length, in the same units as the inputs.
    nu : float
        Smoothness parameter.
    """

    sigma2: float
    lam: float
    nu: float

    def __post_init__(self):
        _check_positive("sigma2", self.sigma2)
        _check_positive("lam", self.lam)
        _check_positive("nu", self.nu)

    def with_sigma2(self, sigma2: float) -> "MaternParams":
        return MaternParams(sigma2, self.lam, self.nu)


@dataclass(frozen=True)
class SepMaternParams:
    """Hyper-parameters of the separable (tensor-product) Matern kernel.

    ``per_dim`` holds one ``(lam_j, nu_j)`` pair per coordinate; ``sigma2``
    is the product variance, the only variance degree of freedom left after
    absorbing the per-factor variances.
    """

    sigma2: float
    per_dim: tuple[tuple[float, float], ...]

    def __post_init__(self):
        _check_positive("sigma2", self.sigma2)
        if len(self.per_dim) < 1:
            raise ValueError("per_dim must contain at least one (lam, nu) pair")
        norm = tuple(
            (_check_positive("lam", l), _check_positive("nu", n)) for l, n in self.per_dim
        )
        object.__setattr__(self, "per_dim", norm)

    @property
    def dim(self) -> int:
        return len(self.per_dim)

    def with_sigma2(self, sigma2: float) -> "SepMaternParams":
        return SepMaternParams(sigma2, self.per_dim)


@dataclass(frozen=True)
class MeanSpec:
    """Prior mean function: identically zero, or a multivariate polynomial.

    Polynomial coefficients are keyed by multi-index, e.g. ``{(0,): 1.0,
    (1,): 2.0}`` is ``1 + 2 u`` in one dimension.
    """

    kind: str = "zero"
    coefficients: Mapping[tuple[int, ...], float] = field(default_factory=dict)
    max_degree: int = 0

    def __post_init__(self):
        if self.kind not in ("zero", "polynomial"):
            raise ValueError(f"unknown mean kind {self.kind!r}")
        coeffs = {tuple(int(i) for i in k): float(v) for k, v in self.coefficients.items()}
        if self.kind == "zero" and coeffs:
            raise ValueError("zero mean must have no coefficients")
        for idx in coeffs:
            if any(i < 0 for i in idx):
                raise ValueError(f"negative exponent in multi-index {idx}")
            if sum(idx) > self.max_degree:
                raise ValueError(f"multi-index {idx} exceeds max_degree {self.max_degree}")
        object.__setattr__(self, "coefficients", coeffs)

    @staticmethod
    def zero() -> "MeanSpec":
        return MeanSpec("zero")

    @staticmethod
    def polynomial(coefficients: Mapping[tuple[int, ...], float]) -> "MeanSpec":
        degree = max((sum(idx) for idx in coefficients), default=0)
        return MeanSpec("polynomial", dict(coefficients), degree)


MATERN = "matern"
SEPARABLE_MATERN = "separable_matern"


@dataclass(frozen=True)
class KernelSpec:
    """A covariance kernel plus prior mean: the full prior of the emulator."""

    family: str
    params: MaternParams | SepMaternParams
    mean: MeanSpec = field(default_factory=MeanSpec.zero)

    def __post_init__(self):
        if self.family == MATERN:
            if not isinstance(self.params, MaternParams):
                raise ValueError("matern family requires MaternParams")
        elif self.family == SEPARABLE_MATERN:
            if not isinstance(self.params, SepMaternParams):
                raise ValueError("separable_matern family requires SepMaternParams")
        else:
            raise ValueError(f"unknown kernel family {self.family!r}")

    @property
    def sigma2(self) -> float:
        return self.params.sigma2

    def with_params(self, params) -> "KernelSpec":
        return KernelSpec(self.family, params, self.mean)


def matern(sigma2: float, lam: float, nu: float, mean: MeanSpec | None = None) -> KernelSpec:
    """Convenience constructor for a classical Matern kernel spec."""
    return KernelSpec(MATERN, MaternParams(sigma2, lam, nu), mean or MeanSpec.zero())


def separable_matern(
    sigma2: float, per_dim, mean: MeanSpec | None = None
) -> KernelSpec:
    """Convenience constructor for a separable Matern kernel spec."""
    return KernelSpec(
        SEPARABLE_MATERN, SepMaternParams(sigma2, tuple(per_dim)), mean or MeanSpec.zero()
    )


# ---------------------------------------------------------------------------
# kernel evaluation
# ---------------------------------------------------------------------------


def _matern_profile(lam: float, nu: float, r: np.ndarray) -> np.ndarray:
    """Unit-variance Matern profile at distances ``r`` (array, r >= 0).

    Evaluated in log space through the exponentially scaled Bessel function,
    which keeps the product ``x**nu * B_nu(x)`` representable over the whole
    distance range.  Where the scaled Bessel value itself overflows (x so
    small that B_nu exceeds double range) the profile has already reached 1
    to machine precision, so 1 is returned there.
    """
    x = r / lam
    out = np.ones_like(x)
    pos = x > 0.0
    if np.any(pos):
        xp = x[pos]
        with np.errstate(over="ignore", divide="ignore"):
            scaled = kve(nu, xp)
            logk = (
                nu * np.log(xp)
                + np.log(scaled)
                - xp
                - gammaln(nu)
                - (nu - 1.0) * _LN2
            )
            vals = np.exp(logk)
        out[pos] = np.where(np.isfinite(scaled), vals, 1.0)
    return out


def matern_eval(params: MaternParams, r) -> float | np.ndarray:
    """Evaluate the Matern kernel at distance(s) ``r >= 0``.

    Returns ``sigma2`` exactly at ``r = 0`` (the kernel formula is an
    indeterminate 0 * inf there) and is continuous and nonincreasing in
    ``r``.  Scalar in, scalar out; array in, array out.
    """
    r_arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r_arr)):
        raise ValueError("distances must be finite")
    if np.any(r_arr < 0.0):
        raise ValueError("distances must be nonnegative")
    vals = params.sigma2 * _matern_profile(params.lam, params.nu, r_arr)
    return float(vals) if np.isscalar(r) or r_arr.ndim == 0 else vals


def bessel_k(nu: float, x) -> float | np.ndarray:
    """Modified Bessel function of the second kind, B_nu(x) for x > 0.

    Overflow near ``x -> 0`` is reported as a saturated large value
    (``BESSEL_SATURATION``) together with a RuntimeWarning rather than inf.
    """
    nu = _check_positive("nu", nu)
    x_arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x_arr)) or np.any(x_arr <= 0.0):
        raise ValueError("bessel_k requires finite x > 0")
    with np.errstate(over="ignore"):
        vals = kv(nu, x_arr)
    overflow = ~np.isfinite(vals)
    if np.any(overflow):
        warnings.warn(
            "bessel_k overflow for tiny argument; returning saturated value",
            RuntimeWarning,
            stacklevel=2,
        )
        vals = np.where(overflow, BESSEL_SATURATION, vals)
    return float(vals) if np.isscalar(x) or x_arr.ndim == 0 else vals


def sepmatern_eval(params: SepMaternParams, u, v) -> float:
    """Evaluate the separable Matern kernel at a pair of points."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("u and v must be points of equal dimension")
    if u.size != params.dim:
        raise ValueError(
            f"points have dimension {u.size}, kernel has {params.dim} factors"
        )
    value = params.sigma2
    for j, (lam_j, nu_j) in enumerate(params.per_dim):
        dist_j = np.abs(u[j : j + 1] - v[j : j + 1])
        value *= float(_matern_profile(lam_j, nu_j, dist_j)[0])
    return float(value)


def matern_spectral_density(params: MaternParams, d: int, omega_norm) -> float | np.ndarray:
    """Spectral density of the Matern kernel in d dimensions.

        S(w) = sigma2 * Gamma(nu + d/2) / (Gamma(nu) pi**(d/2))
               * lam**d * (1 + lam**2 |w|**2) ** -(nu + d/2)

    normalised so that the density integrates (over R^d) to k(0) = sigma2.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    w = np.asarray(omega_norm, dtype=float)
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise ValueError("omega_norm must be finite and nonnegative")
    nu, lam = params.nu, params.lam
    const = params.sigma2 * math.exp(
        gammaln(nu + d / 2.0) - gammaln(nu) - (d / 2.0) * math.log(math.pi)
    )
    vals = const * lam**d * (1.0 + lam**2 * w**2) ** (-(nu + d / 2.0))
    return float(vals) if np.isscalar(omega_norm) or w.ndim == 0 else vals


def mean_eval(mean: MeanSpec, u) -> float | np.ndarray:
    """Evaluate the prior mean at one point ``(d,)`` or many points ``(m, d)``."""
    pts = np.asarray(u, dtype=float)
    single = pts.ndim <= 1
    pts = np.atleast_2d(pts)
    if mean.kind == "zero":
        out = np.zeros(pts.shape[0])
    else:
        dim = pts.shape[1]
        out = np.zeros(pts.shape[0])
        for idx, coeff in mean.coefficients.items():
            if len(idx) != dim:
                raise ValueError(
                    f"multi-index {idx} does not match point dimension {dim}"
                )
            term = np.full(pts.shape[0], coeff)
            for j, power in enumerate(idx):
                if power:
                    term = term * pts[:, j] ** power
            out += term
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# kernel matrices
# ---------------------------------------------------------------------------


def _gram(spec: KernelSpec, points: np.ndarray) -> np.ndarray:
    """Raw kernel Gram matrix at ``points`` (n, d); exactly symmetric."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if spec.family == MATERN:
        if n == 1:
            cond = np.zeros(0)
        else:
            cond = pdist(points)
        vals = spec.sigma2 * _matern_profile(spec.params.lam, spec.params.nu, cond)
        K = squareform(vals)
    else:
        prof = np.ones(n * (n - 1) // 2)
        for j, (lam_j, nu_j) in enumerate(spec.params.per_dim):
            dj = pdist(points[:, j : j + 1])
            prof *= _matern_profile(lam_j, nu_j, dj)
        K = squareform(spec.sigma2 * prof)
    np.fill_diagonal(K, spec.sigma2)
    return K


def kernel_cross(spec: KernelSpec, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Cross-covariance matrix k(x_i, z_j) of shape (len(x), len(z))."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if spec.family == MATERN:
        return spec.sigma2 * _matern_profile(
            spec.params.lam, spec.params.nu, cdist(x, z)
        )
    prof = np.ones((x.shape[0], z.shape[0]))
    for j, (lam_j, nu_j) in enumerate(spec.params.per_dim):
        dj = cdist(x[:, j : j + 1], z[:, j : j + 1])
        prof *= _matern_profile(lam_j, nu_j, dj)
    return spec.sigma2 * prof


def kernel_diag(spec: KernelSpec, x: np.ndarray) -> np.ndarray:
    """Pointwise prior variances k(u, u); constant sigma2 for both families."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.full(x.shape[0], spec.sigma2)


# Nugget escalation: retry with nugget * 10**k, k = 0..MAX_NUGGET_ESCALATIONS.
# A zero starting nugget escalates through ZERO_NUGGET_FLOOR first.
MAX_NUGGET_ESCALATIONS = 6
ZERO_NUGGET_FLOOR = 1e-12


def _nugget_schedule(nugget: float):
    if nugget < 0.0 or not math.isfinite(nugget):
        raise ValueError("nugget must be a nonnegative finite number")
    yield nugget
    base = nugget if nugget > 0.0 else ZERO_NUGGET_FLOOR / 10.0
    for k in range(1, MAX_NUGGET_ESCALATIONS + 1):
        yield base * 10.0**k


def cholesky_kernel_matrix(
    spec: KernelSpec, design, nugget: float = 1e-10
) -> tuple[np.ndarray, np.ndarray, float]:
    """Assemble K + nugget * sigma2 * I and factorise it.

    Returns ``(K, L, nugget_used)`` with ``K = L @ L.T``.  On factorisation
    failure the nugget is escalated tenfold up to ``MAX_NUGGET_ESCALATIONS``
    times before a ConditioningError (carrying the last nugget tried) is
    raised.
    """
    points = getattr(design, "points", design)
    base = _gram(spec, points)
    tried = nugget
    for tried in _nugget_schedule(nugget):
        K = base.copy()
        np.fill_diagonal(K, spec.sigma2 * (1.0 + tried))
        try:
            L = np.linalg.cholesky(K)
        except np.linalg.LinAlgError:
            continue
        return K, L, tried
    raise ConditioningError(
        f"kernel matrix not positive definite even with nugget {tried:g}", tried
    )


def kernel_matrix(spec: KernelSpec, design, nugget: float = 1e-10) -> np.ndarray:
    """Kernel matrix on a design, validated positive definite.

    ``K[i, j] = k(u_i, u_j) + nugget * sigma2 * 1{i == j}``, with the nugget
    escalated as needed for the Cholesky factorisation to succeed.
    """
    K, _, _ = cholesky_kernel_matrix(spec, design, nugget)
    return K


# ---------------------------------------------------------------------------
# JSON encoding of kernel specs (used by CLI configs and recipes)
# ---------------------------------------------------------------------------


def mean_to_dict(mean: MeanSpec) -> dict:
    if mean.kind == "zero":
        return {"kind": "zero"}
    coeffs = {",".join(str(i) for i in idx): v for idx, v in mean.coefficients.items()}
    return {"kind": "polynomial", "coefficients": coeffs}


def mean_from_dict(obj: dict) -> MeanSpec:
    kind = obj.get("kind", "zero")
    if kind == "zero":
        return MeanSpec.zero()
    if kind != "polynomial":
        raise ValueError(f"unknown mean kind {kind!r}")
    coeffs = {
        tuple(int(s) for s in key.split(",")): float(v)
        for key, v in obj.get("coefficients", {}).items()
    }
    return MeanSpec.polynomial(coeffs)


def spec_to_dict(spec: KernelSpec) -> dict:
    if spec.family == MATERN:
        p = spec.params
        out = {"family": MATERN, "sigma2": p.sigma2, "lam": p.lam, "nu": p.nu}
    else:
        out = {
            "family": SEPARABLE_MATERN,
            "sigma2": spec.params.sigma2,
            "per_dim": [{"lam": l, "nu": n} for l, n in spec.params.per_dim],
        }
    out["mean"] = mean_to_dict(spec.mean)
    return out


def spec_from_dict(obj: dict) -> KernelSpec:
    family = obj.get("family")
    mean = mean_from_dict(obj.get("mean", {"kind": "zero"}))
    if family == MATERN:
        return matern(float(obj["sigma2"]), float(obj["lam"]), float(obj["nu"]), mean)
    if family == SEPARABLE_MATERN:
        per_dim = tuple((float(e["lam"]), float(e["nu"])) for e in obj["per_dim"])
        return separable_matern(float(obj["sigma2"]), per_dim, mean)
    raise ValueError(f"unknown kernel family {family!r}")
