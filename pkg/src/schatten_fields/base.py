"""Discretized base space X and the abelian algebra C(X) of scalar fields on it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, NonMonotone

#: Default absolute tolerance used throughout the package.
DEFAULT_TOL = 1e-8
#: A field "vanishes at infinity" when its value at the point at infinity is below this.
INFINITY_TOL = 1e-9


def _euclidean_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True, eq=False)
class Grid:
    """A finite sample of a compact metric space.

    Parameters
    ----------
    points : array_like, shape (N, d)
        Ordered sample coordinates.
    adjacency : array_like, shape (E, 2)
        Index pairs declared neighboring; used by continuity-modulus estimates.
    distances : array_like, shape (N, N), optional
        Pairwise metric. Euclidean distance of ``points`` when omitted.
    compactified : bool
        True when the grid models the one-point compactification of a
        noncompact space; ``infinity_index`` then names the added point.
    """

    points: np.ndarray
    adjacency: np.ndarray
    distances: Optional[np.ndarray] = None
    compactified: bool = False
    infinity_index: Optional[int] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("grid needs a nonempty (N, d) array of points")
        adj = np.asarray(self.adjacency, dtype=np.int64).reshape(-1, 2)
        n = pts.shape[0]
        if adj.size and (adj.min() < 0 or adj.max() >= n):
            raise IndexOutOfRange("adjacency index out of range")
        if np.any(adj[:, 0] == adj[:, 1]):
            raise ValueError("adjacency pairs must join distinct points")
        if n > 1:
            covered = np.zeros(n, dtype=bool)
            covered[adj.ravel()] = True
            if not covered.all():
                missing = np.flatnonzero(~covered)
                raise ValueError(f"points {missing.tolist()} have no neighbor")
        dist = _euclidean_distances(pts) if self.distances is None else np.asarray(self.distances, dtype=float)
        if dist.shape != (n, n):
            raise DimensionMismatch("distance matrix must be (N, N)")
        if not np.allclose(dist, dist.T, rtol=0, atol=1e-12):
            raise ValueError("metric must be symmetric")
        off = dist[~np.eye(n, dtype=bool)]
        if np.any(np.diag(dist) != 0) or np.any(off <= 0):
            raise ValueError("metric must vanish exactly on the diagonal")
        if self.compactified and (self.infinity_index is None or not 0 <= self.infinity_index < n):
            raise ValueError("a compactified grid needs a valid infinity_index")
        for name, value in (("points", pts), ("adjacency", adj), ("distances", dist)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    # -- basic queries -------------------------------------------------
    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    def metric(self, i: int, j: int) -> float:
        return float(self.distances[i, j])

    @property
    def diameter(self) -> float:
        return float(self.distances.max())

    def check_index(self, i: int) -> int:
        if not -self.size <= i < self.size:
            raise IndexOutOfRange(f"grid index {i} out of range for {self.size} points")
        return i % self.size

    @property
    def finite_mask(self) -> np.ndarray:
        """Boolean mask of the points that are not the point at infinity."""
        mask = np.ones(self.size, dtype=bool)
        if self.compactified:
            mask[self.infinity_index] = False
        return mask

    # -- constructors --------------------------------------------------
    @classmethod
    def point(cls) -> "Grid":
        """The one-point space (base of a spectral triple)."""
        return cls(np.zeros((1, 1)), np.zeros((0, 2), dtype=int))

    @classmethod
    def interval(cls, a: float, b: float, n: int) -> "Grid":
        """``n`` equispaced points of ``[a, b]`` with chain adjacency."""
        if n < 1:
            raise ValueError("need at least one point")
        pts = np.linspace(a, b, n) if n > 1 else np.array([0.5 * (a + b)])
        adj = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1)
        return cls(pts[:, None], adj)

    @classmethod
    def circle(cls, n: int, radius: float = 1.0) -> "Grid":
        """``n`` points on a circle, cyclic adjacency, arc-length metric."""
        if n < 3:
            raise ValueError("a circle grid needs at least 3 points")
        theta = 2 * np.pi * np.arange(n) / n
        pts = radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
        dtheta = np.abs(theta[:, None] - theta[None, :])
        dist = radius * np.minimum(dtheta, 2 * np.pi - dtheta)
        adj = np.stack([np.arange(n), (np.arange(n) + 1) % n], axis=1)
        return cls(pts, adj, dist)

    @classmethod
    def sphere(cls, n: int, dim: int = 2, neighbors: int = 3) -> "Grid":
        """Quasi-uniform points on ``S^dim`` (Fibonacci lattice for dim 2).

        Adjacency joins each point to its ``neighbors`` nearest points; the
        metric is the great-circle distance.
        """
        if dim == 1:
            return cls.circle(n)
        if dim != 2:
            raise ValueError("only S^1 and S^2 grids are provided")
        i = np.arange(n) + 0.5
        phi = np.arccos(1 - 2 * i / n)
        theta = np.pi * (1 + 5 ** 0.5) * i
        pts = np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=1)
        cosang = np.clip(pts @ pts.T, -1.0, 1.0)
        dist = np.arccos(cosang)
        np.fill_diagonal(dist, 0.0)
        return cls(pts, _knn_adjacency(dist, neighbors), dist)

    @classmethod
    def from_points(cls, points, adjacency=None, distances=None, neighbors: int = 1) -> "Grid":
        """Build a grid, defaulting adjacency to ``neighbors``-nearest pairs."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if adjacency is None:
            dist = _euclidean_distances(pts) if distances is None else np.asarray(distances, dtype=float)
            adjacency = _knn_adjacency(dist, neighbors) if len(pts) > 1 else np.zeros((0, 2), dtype=int)
        return cls(pts, adjacency, distances)

    @classmethod
    def product(cls, first: "Grid", second: "Grid") -> "Grid":
        """Cartesian product with the l2 product metric (first index slowest)."""
        n1, n2 = first.size, second.size
        pts = np.concatenate(
            [np.repeat(first.points, n2, axis=0), np.tile(second.points, (n1, 1))], axis=1
        )
        dist = np.sqrt(
            np.repeat(np.repeat(first.distances, n2, axis=0), n2, axis=1) ** 2
            + np.tile(second.distances, (n1, n1)) ** 2
        )
        pairs = []
        for i, j in first.adjacency:
            pairs.extend((i * n2 + k, j * n2 + k) for k in range(n2))
        for i, j in second.adjacency:
            pairs.extend((k * n2 + i, k * n2 + j) for k in range(n1))
        adj = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        return cls(pts, adj, dist)

    def compactify(self, attach: Sequence[int], distance_to_infinity) -> "Grid":
        """Append a point at infinity adjacent to the points in ``attach``.

        ``distance_to_infinity`` gives, per existing point, its distance to
        the new point (positive).
        """
        d_inf = np.asarray(distance_to_infinity, dtype=float).reshape(self.size)
        n = self.size
        dist = np.zeros((n + 1, n + 1))
        dist[:n, :n] = self.distances
        dist[:n, n] = dist[n, :n] = d_inf
        pts = np.concatenate([self.points, np.zeros((1, self.points.shape[1]))], axis=0)
        extra = np.array([(int(i), n) for i in attach], dtype=np.int64).reshape(-1, 2)
        adj = np.concatenate([self.adjacency, extra], axis=0)
        return Grid(pts, adj, dist, compactified=True, infinity_index=n)


def _knn_adjacency(dist: np.ndarray, k: int) -> np.ndarray:
    n = dist.shape[0]
    order = np.argsort(dist, axis=1)[:, 1 : k + 1]
    pairs = {tuple(sorted((i, int(j)))) for i in range(n) for j in order[i]}
    return np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """An element of C(X): one complex (or real) number per grid point."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.dtype.kind not in "fc":
            vals = vals.astype(float)
        if vals.shape != (self.grid.size,):
            raise DimensionMismatch(f"expected {self.grid.size} values, got shape {vals.shape}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: Grid, c: complex) -> "ScalarField":
        dtype = complex if isinstance(c, complex) else float
        return cls(grid, np.full(grid.size, c, dtype=dtype))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "ScalarField":
        """Evaluate ``fn`` on the (N, d) coordinate array."""
        return cls(grid, np.asarray(fn(grid.points)).reshape(grid.size))

    def at(self, i: int):
        return self.values[self.grid.check_index(i)]

    def sup_norm(self) -> float:
        return sup_norm(self)

    def vanishes_at_infinity(self, tol: float = INFINITY_TOL) -> bool:
        """True on uncompactified grids; otherwise checks the value at infinity."""
        if not self.grid.compactified:
            return True
        return bool(abs(self.values[self.grid.infinity_index]) < tol)

    @property
    def real(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.real)

    @property
    def imag(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.imag)

    def conj(self) -> "ScalarField":
        return ScalarField(self.grid, np.conj(self.values))

    def __abs__(self) -> "ScalarField":
        return ScalarField(self.grid, np.abs(self.values))

    def _other(self, other):
        if isinstance(other, ScalarField):
            if other.grid is not self.grid and other.grid.size != self.grid.size:
                raise DimensionMismatch("scalar fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarField(self.grid, self.values / self._other(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __pow__(self, exponent):
        return ScalarField(self.grid, self.values ** exponent)

    def __len__(self) -> int:
        return self.grid.size


def sup_norm(a: ScalarField) -> float:
    """The C*-norm of C(X): ``max_x |a(x)|``."""
    return float(np.max(np.abs(a.values)))


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of :func:`dini_monitor`.

    ``uniformity_profile`` holds, per grid point, the tail estimate at the
    moment accumulation stopped and ``final_increment_sup`` its sup; both
    are zero when the supply was exhausted, since the remaining tail is then
    empty. ``partial_sum`` is the accumulated series.
    """

    converged: bool
    terms_used: int
    final_increment_sup: float
    uniformity_profile: np.ndarray
    partial_sum: Optional[np.ndarray] = None
    tolerance: float = DEFAULT_TOL
    tail_multiplier: float = 1.0


def dini_monitor(
    increments: Iterable,
    tol: float,
    max_terms: int = 10_000,
    *,
    tail_multiplier: float = 1.0,
    min_terms: int = 1,
    negativity_tol: float = 1e-12,
) -> ConvergenceReport:
    """Accumulate a series of pointwise nonnegative fields until it is uniformly small.

    Accumulation stops as soon as ``tail_multiplier * sup|last increment|``
    drops below ``tol`` (after at least ``min_terms`` terms), when the supply
    of increments runs out (the remaining tail is then exactly zero), or when
    ``max_terms`` terms have been used, in which case the report has
    ``converged=False``. Each increment may be a :class:`ScalarField` or an
    array of per-point values.

    Raises
    ------
    NonMonotone
        If an increment is below ``-negativity_tol`` anywhere.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    total = None
    last = None
    terms = 0
    for inc in increments:
        if isinstance(inc, ScalarField):
            vals = inc.values
        else:
            vals = np.asarray(inc)
        if np.iscomplexobj(vals):
            if np.max(np.abs(vals.imag), initial=0.0) > negativity_tol:
                raise NonMonotone(f"increment {terms} is not real-valued")
            vals = vals.real
        if np.min(vals, initial=0.0) < -negativity_tol:
            raise NonMonotone(f"increment {terms} has value {np.min(vals):.3e} < 0")
        total = vals.astype(float) if total is None else total + vals
        last = vals
        terms += 1
        if terms >= min_terms and tail_multiplier * np.max(np.abs(last)) < tol:
            return _report(True, terms, last, total, tol, tail_multiplier)
        if terms >= max_terms:
            return _report(False, terms, last, total, tol, tail_multiplier)
    # supply exhausted: the remaining tail is identically zero
    if last is None:
        return ConvergenceReport(True, 0, 0.0, np.zeros(0), None, tol, tail_multiplier)
    return ConvergenceReport(True, terms, 0.0, np.zeros_like(last, dtype=float), total, tol, tail_multiplier)


def _report(converged, terms, last, total, tol, mult):
    profile = mult * np.abs(last)
    return ConvergenceReport(converged, terms, float(profile.max()), profile, total, tol, mult)
