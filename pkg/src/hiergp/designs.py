"""Design point sets on axis-aligned boxes, and their geometry diagnostics.

Generators: tensor-product uniform grids (left endpoint excluded, so the 1D
grid is ``{i/n (b-a) + a}``), Halton sequences, nested Clenshaw-Curtis and
nested uniform one-dimensional families, and Smolyak sparse grids built from
the nested families.

Diagnostics: fill distance (largest distance from any domain point to its
nearest design point), separation radius (half the minimal pairwise
distance) and their ratio, the mesh ratio.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

CLENSHAW_CURTIS = "clenshaw_curtis"
NESTED_UNIFORM = "nested_uniform"

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


def _normalize_domain(domain) -> tuple[tuple[float, float], ...]:
    box = tuple((float(a), float(b)) for a, b in domain)
    for a, b in box:
        if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
            raise ValueError(f"degenerate domain interval ({a}, {b})")
    return box


@dataclass(frozen=True)
class DesignSet:
    """An ordered set of distinct points inside an axis-aligned box."""

    points: np.ndarray
    domain: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float)).copy()
        box = _normalize_domain(self.domain)
        if pts.shape[1] != len(box):
            raise ValueError(
                f"points have dimension {pts.shape[1]}, domain has {len(box)}"
            )
        if not np.all(np.isfinite(pts)):
            raise ValueError("design points must be finite")
        lo = np.array([a for a, _ in box])
        hi = np.array([b for _, b in box])
        if np.any(pts < lo) or np.any(pts > hi):
            raise ValueError("design points must lie inside the domain box")
        # Duplicate detection via unique rows; pairwise distances would cost
        # O(N^2) memory on large evaluation grids.
        if pts.shape[0] > 1 and np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValueError("design points must be pairwise distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "domain", box)

    @staticmethod
    def from_points(points, domain) -> "DesignSet":
        return DesignSet(np.asarray(points, dtype=float), tuple(domain))

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def volume(self) -> float:
        return float(np.prod([b - a for a, b in self.domain]))


@dataclass(frozen=True)
class GeometryDiagnostics:
    """Fill distance h, separation radius q and mesh ratio rho = h / q.

    ``fill_resolution`` reports the candidate-search resolution of the fill
    distance; it is 0 where h is computed exactly (one dimension).
    """

    fill_distance: float
    separation_radius: float
    mesh_ratio: float
    fill_resolution: float = 0.0

    def __post_init__(self):
        ratio = self.fill_distance / self.separation_radius
        if abs(self.mesh_ratio - ratio) > 1e-12 * max(1.0, abs(ratio)):
            raise ValueError("mesh_ratio must equal fill_distance / separation_radius")
        # h underestimates by at most the search resolution, never more.
        if self.mesh_ratio < 1.0 - 1e-9:
            raise ValueError("mesh ratio below 1 signals inconsistent geometry")


@dataclass(frozen=True)
class SparseGridSpec:
    """Level, dimension and one-dimensional family of a Smolyak grid."""

    level: int
    dim: int
    one_dim_family: str = CLENSHAW_CURTIS

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.level < self.dim:
            raise ValueError("sparse grid level must be >= dimension")
        if self.one_dim_family not in (CLENSHAW_CURTIS, NESTED_UNIFORM):
            raise ValueError(f"unknown 1D family {self.one_dim_family!r}")


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def uniform_grid(domain, n_per_dim: int) -> DesignSet:
    """Tensor product of 1D grids {a + (i/n)(b-a) : i = 1..n}.

    The left endpoint is excluded, so the one-dimensional grid on [0, 1] is
    {1/n, 2/n, ..., 1} and N = n**d overall.
    """
    if n_per_dim < 1:
        raise ValueError("n_per_dim must be >= 1")
    box = _normalize_domain(domain)
    axes = [
        a + (np.arange(1, n_per_dim + 1) / n_per_dim) * (b - a) for a, b in box
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return DesignSet(pts, box)


def _radical_inverse(n: int, base: int) -> float:
    inv, denom = 0.0, 1.0
    while n > 0:
        n, rem = divmod(n, base)
        denom *= base
        inv += rem / denom
    return inv


def halton(domain, n_points: int) -> DesignSet:
    """First ``n_points`` Halton points (index starting at 1), mapped to the box.

    Bases are the first d primes; dimensions above 16 are not supported.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    box = _normalize_domain(domain)
    d = len(box)
    if d > len(_PRIMES):
        raise ValueError(f"halton supports at most {len(_PRIMES)} dimensions")
    unit = np.array(
        [
            [_radical_inverse(n, _PRIMES[j]) for j in range(d)]
            for n in range(1, n_points + 1)
        ]
    )
    lo = np.array([a for a, _ in box])
    hi = np.array([b for _, b in box])
    return DesignSet(lo + unit * (hi - lo), box)


def _level_fracs(level: int) -> np.ndarray:
    """Generating fractions of the nested 1D families at a given level.

    Level 1 is the single fraction 1/2; level i >= 2 holds the 2**(i-1) + 1
    dyadic fractions j / 2**(i-1).  Dyadic fractions are exact doubles, so
    equality of fractions is equality of generating indices.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    if level == 1:
        return np.array([0.5])
    m = 2 ** (level - 1)
    return np.arange(m + 1) / m


def _coords_from_fracs(family: str, fracs: np.ndarray) -> np.ndarray:
    if family == CLENSHAW_CURTIS:
        # sin(pi (f - 1/2)) == -cos(pi f), but lands exactly on 0 and +-1
        # at the symmetric nodes.
        return np.sin(np.pi * (fracs - 0.5))
    return 2.0 * fracs - 1.0


def clenshaw_curtis(level: int) -> np.ndarray:
    """Nested Clenshaw-Curtis points on [-1, 1], ascending.

    Level 1 is {0}; level i >= 2 has 2**(i-1) + 1 points
    -cos(pi (n-1) / (m-1)), n = 1..m.
    """
    return _coords_from_fracs(CLENSHAW_CURTIS, _level_fracs(level))


def nested_uniform(level: int) -> np.ndarray:
    """Nested equispaced points on [-1, 1] including endpoints; {0} at level 1."""
    return _coords_from_fracs(NESTED_UNIFORM, _level_fracs(level))


def _compositions(total: int, parts: int):
    """All multi-indices of positive integers with the given sum."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def smolyak_grid(spec: SparseGridSpec, domain) -> DesignSet:
    """Smolyak sparse grid: union of tensor grids over levels summing to q.

    Duplicates across tensor blocks are removed through the exact dyadic
    generating fractions of the nested families, not by comparing floating
    point coordinates.
    """
    box = _normalize_domain(domain)
    if len(box) != spec.dim:
        raise ValueError("domain dimension does not match sparse grid spec")
    frac_tuples: set[tuple[float, ...]] = set()
    level_fracs = {i: _level_fracs(i) for i in range(1, spec.level - spec.dim + 2)}
    for index in _compositions(spec.level, spec.dim):
        frac_tuples.update(itertools.product(*(level_fracs[i] for i in index)))
    ordered = sorted(frac_tuples)
    pts = np.empty((len(ordered), spec.dim))
    for j in range(spec.dim):
        fracs_j = np.array([t[j] for t in ordered])
        coord = _coords_from_fracs(spec.one_dim_family, fracs_j)
        a, b = box[j]
        pts[:, j] = a + (coord + 1.0) * 0.5 * (b - a)
    return DesignSet(pts, box)


# ---------------------------------------------------------------------------
# geometry diagnostics
# ---------------------------------------------------------------------------

_FILL_CANDIDATES_1D = 2**12
_FILL_CANDIDATES_PER_AXIS = 2**7


def _fill_distance_1d(points: np.ndarray, domain) -> float:
    (a, b) = domain[0]
    x = np.sort(points[:, 0])
    gaps = [x[0] - a, b - x[-1]]
    if x.size > 1:
        gaps.append(0.5 * np.max(np.diff(x)))
    return float(max(gaps))


def _tensor_candidates(box, n_per_axis: int) -> np.ndarray:
    axes = [np.linspace(a, b, n_per_axis) for a, b in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _fill_distance_search(points: np.ndarray, box) -> tuple[float, float]:
    """Candidate-grid fill distance for d >= 2, refined once near the argmax."""
    d = len(box)
    tree = cKDTree(points)
    if d <= 3:
        cand = _tensor_candidates(box, _FILL_CANDIDATES_PER_AXIS)
        spacing = np.array([(b - a) / (_FILL_CANDIDATES_PER_AXIS - 1) for a, b in box])
    else:
        unit = halton([(0.0, 1.0)] * d, 2**14).points
        lo = np.array([a for a, _ in box])
        hi = np.array([b for _, b in box])
        cand = lo + unit * (hi - lo)
        spacing = (hi - lo) * (2**14) ** (-1.0 / d)
    corners = np.array(list(itertools.product(*box)))
    cand = np.vstack([cand, corners])
    dist, _ = tree.query(cand)
    best = int(np.argmax(dist))
    h = float(dist[best])
    # One local refinement pass around the coarse argmax.
    center = cand[best]
    local_box = [
        (max(a, c - s), min(b, c + s)) for (a, b), c, s in zip(box, center, spacing)
    ]
    local = _tensor_candidates(local_box, _FILL_CANDIDATES_PER_AXIS)
    ldist, _ = tree.query(local)
    h = max(h, float(ldist.max()))
    resolution = float(
        np.linalg.norm(
            [(b - a) / (_FILL_CANDIDATES_PER_AXIS - 1) for a, b in local_box]
        )
    )
    return h, resolution


def geometry(design: DesignSet) -> GeometryDiagnostics:
    """Fill distance, separation radius and mesh ratio of a design.

    The separation radius is exact.  The fill distance is exact in one
    dimension (interval gap search); in higher dimensions it is the maximum
    over a dense candidate grid with one local refinement, an approximation
    whose resolution is reported in ``fill_resolution``.
    """
    if design.n_points < 2:
        raise ValueError("separation radius requires at least two points")
    q = 0.5 * float(pdist(design.points).min())
    if design.dim == 1:
        h, res = _fill_distance_1d(design.points, design.domain), 0.0
    else:
        h, res = _fill_distance_search(design.points, design.domain)
    return GeometryDiagnostics(h, q, h / q, res)


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------


def save_design_csv(design: DesignSet, path) -> None:
    """One point per row, columns u_1..u_d, shortest round-trip formatting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(f"u_{j + 1}" for j in range(design.dim)) + "\n")
        for row in design.points:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_design_csv(path, domain) -> DesignSet:
    pts = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return DesignSet(pts, tuple(domain))
