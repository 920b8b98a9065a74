"""Operator zeta functions ``zeta(z, T)(x) = sum_k lambda_k(x)^z``.

Eigenvalues are assembled into fields by rank (largest first), which is the
continuous choice even where analytic eigenvalue branches cross.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .base import Grid, ScalarField
from .errors import (
    BadAngle,
    InsufficientSamples,
    NotContraction,
    NotPositive,
    OutOfHalfPlane,
)
from .opfield import EIGENVALUE_FLOOR, POSITIVITY_TOL, OperatorField

CONTRACTION_TOL = 1e-10
GAUSS_NODES = 64
MORERA_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class EigenvalueFields:
    """Rank-ordered eigenvalue fields; ``values[x, k]`` is ``lambda_(k+1)(x)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != self.grid.size:
            raise ValueError("eigenvalue array must have shape (grid size, count)")
        vals = -np.sort(-vals, axis=1, kind="stable")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, grid: Grid, spectrum) -> "EigenvalueFields":
        spectrum = np.asarray(spectrum, dtype=float)
        return cls(grid, np.tile(spectrum, (grid.size, 1)))

    @property
    def count(self) -> int:
        return self.values.shape[1]

    @property
    def lambdas(self) -> Tuple[ScalarField, ...]:
        return tuple(ScalarField(self.grid, self.values[:, k]) for k in range(self.count))

    def continuity_moduli(self) -> np.ndarray:
        """Per-rank discrete Lipschitz modulus over the grid adjacency."""
        adj = self.grid.adjacency
        if adj.size == 0:
            return np.zeros(self.count)
        d = self.grid.distances[adj[:, 0], adj[:, 1]]
        return np.max(np.abs(self.values[adj[:, 0]] - self.values[adj[:, 1]]) / d[:, None], axis=0)


def eigenvalue_fields(T: OperatorField) -> EigenvalueFields:
    """Eigenvalues of a pointwise positive semidefinite field, sorted decreasingly.

    Raises
    ------
    NotPositive
        If ``T`` is not Hermitian or has an eigenvalue below ``-1e-10``.
    """
    if not T.is_hermitian(1e-10):
        raise NotPositive("eigenvalue fields need a Hermitian field")
    w = np.linalg.eigvalsh(T.hermitian_part().matrices)
    if w.size and w.min() < -POSITIVITY_TOL:
        raise NotPositive(f"field has eigenvalue {w.min():.3e} < 0")
    return EigenvalueFields(T.grid, np.clip(w, 0.0, None))


@dataclass(frozen=True)
class ZetaValue:
    z: complex
    value: ScalarField
    terms_used: int
    tail_bound: float


def _powers(vals: np.ndarray, z: complex, floor: float) -> np.ndarray:
    cut = floor * max(float(vals.max(initial=0.0)), 0.0)
    out = np.zeros(vals.shape, dtype=complex)
    keep = vals > cut
    out[keep] = np.exp(complex(z) * np.log(vals[keep]))
    return out


def zeta_from_eigenvalues(
    lambdas: EigenvalueFields,
    z: complex,
    p: float = 1.0,
    tail: Optional[Callable[[complex], float]] = None,
    floor: float = EIGENVALUE_FLOOR,
) -> ZetaValue:
    """Dirichlet series over given eigenvalue fields.

    ``tail`` optionally maps ``z`` to a bound on the omitted part of an
    infinite spectrum; without it the spectrum is taken as complete.
    """
    z = complex(z)
    if not z.real > p:
        raise OutOfHalfPlane(f"Re z = {z.real} must exceed p = {p}")
    if lambdas.values.size and lambdas.values.max() > 1.0 + CONTRACTION_TOL:
        raise NotContraction(f"largest eigenvalue {lambdas.values.max():.6g} exceeds 1")
    powers = _powers(lambdas.values, z, floor)
    tail_bound = 0.0 if tail is None else float(tail(z))
    return ZetaValue(z, ScalarField(lambdas.grid, powers.sum(axis=1)), lambdas.count, tail_bound)


def zeta(T: OperatorField, z: complex, p: float = 1.0, tol: float = 1e-8, tail=None) -> ZetaValue:
    """``zeta(z, T)(x) = sum_k lambda_k(x)^z`` for a positive contraction field.

    Zero modes (eigenvalues at or below ``1e-12`` times the largest) are
    omitted, i.e. ``0^z = 0``. ``tol`` is accepted for interface symmetry;
    the eigen-sum of a finite fiber is exact.

    Raises
    ------
    OutOfHalfPlane
        If ``Re z <= p``.
    NotContraction
        If an eigenvalue exceeds ``1 + 1e-10``.
    """
    z = complex(z)
    if not z.real > p:
        raise OutOfHalfPlane(f"Re z = {z.real} must exceed p = {p}")
    return zeta_from_eigenvalues(eigenvalue_fields(T), z, p, tail)


def tail_sum(lambdas: EigenvalueFields, z: complex, m: int, floor: float = EIGENVALUE_FLOOR) -> np.ndarray:
    """``sum_(k>=m) lambda_k(x)^z`` per point (``k`` counted from 1)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return _powers(lambdas.values, z, floor)[:, m - 1:].sum(axis=1)


def jensen_cahen_tail(lambdas: EigenvalueFields, p: float, alpha: float, m: int) -> float:
    """``sec(alpha) sup_x sum_(k>=m) lambda_k(x)^p``, a tail bound on the sector ``|Arg(z-p)| <= alpha``."""
    if not 0.0 < alpha < np.pi / 2:
        raise BadAngle(f"alpha must lie in (0, pi/2), got {alpha}")
    if m < 1:
        raise ValueError("m must be >= 1")
    vals = lambdas.values[:, m - 1:]
    if vals.size == 0:
        return 0.0
    return float(np.max(_powers(vals, p, 0.0).real.sum(axis=1)) / np.cos(alpha))


def sample_sector(p: float, alpha: float, count: int, rng: np.random.Generator, max_radius: float = 10.0) -> np.ndarray:
    """Random points ``z = p + r e^(i phi)`` with ``0 < r <= max_radius``, ``|phi| <= alpha``."""
    r = rng.uniform(0.0, max_radius, count) + 1e-6
    phi = rng.uniform(-alpha, alpha, count)
    return p + r * np.exp(1j * phi)


@dataclass(frozen=True)
class ContinuityProbe:
    radius: float
    witness: Optional[int]
    deviations: np.ndarray  # sup_z |zeta(z)(y) - zeta(z)(x)| for every y


def zeta_uniform_continuity_probe(
    T: OperatorField, K: Sequence[complex], x_index: int, eps: float, p: float = 1.0
) -> ContinuityProbe:
    """Largest radius ``r`` so that ``sup_(z in K) |zeta(z)(y) - zeta(z)(x)| < eps`` for ``d(x,y) <= r``.

    When no grid point violates the bound the radius is the grid diameter.
    ``witness`` is the nearest violating point, or None.
    """
    grid = T.grid
    x = grid.check_index(x_index)
    for z in K:
        if not complex(z).real > p:
            raise OutOfHalfPlane(f"Re z = {complex(z).real} must exceed p = {p}")
    lambdas = eigenvalue_fields(T)
    dev = np.zeros(grid.size)
    for z in K:
        vals = zeta_from_eigenvalues(lambdas, z, p).value.values
        dev = np.maximum(dev, np.abs(vals - vals[x]))
    dist = grid.distances[x]
    bad = dev >= eps
    if not bad.any():
        return ContinuityProbe(grid.diameter, None, dev)
    first_bad = float(dist[bad].min())
    inside = dist < first_bad
    radius = float(dist[inside].max())
    witness = int(np.flatnonzero(bad & (dist == first_bad))[0])
    return ContinuityProbe(radius, witness, dev)


def residue_estimate(zeta_samples: Sequence[Tuple[float, object]], s0: float = 1.0) -> ScalarField:
    """Extrapolate ``(z - s0) zeta(z)`` to ``z = s0`` from real samples ``z > s0``.

    Polynomial (Neville) extrapolation through all samples; with nodes
    ``s0 + h, s0 + h/2, s0 + h/4`` this is three-point Richardson.

    Raises
    ------
    InsufficientSamples
        If fewer than three samples are given.
    """
    if len(zeta_samples) < 3:
        raise InsufficientSamples("residue extrapolation needs at least 3 samples")
    nodes = np.array([float(z) for z, _ in zeta_samples])
    if np.any(nodes <= s0):
        raise ValueError("samples must lie to the right of s0")
    grid = None
    rows = []
    for z, field in zeta_samples:
        if isinstance(field, ScalarField):
            grid = field.grid
            rows.append((z - s0) * field.values)
        else:
            rows.append((z - s0) * np.asarray(field, dtype=complex))
    table = [np.asarray(r, dtype=complex) for r in rows]
    # Neville's scheme evaluated at s0
    k = len(nodes)
    for level in range(1, k):
        table = [
            ((s0 - nodes[i + level]) * table[i] - (s0 - nodes[i]) * table[i + 1]) / (nodes[i] - nodes[i + level])
            for i in range(k - level)
        ]
    result = table[0]
    if grid is None:
        grid = Grid.point() if np.ndim(result) == 0 or np.size(result) == 1 else Grid.interval(0.0, 1.0, np.size(result))
    return ScalarField(grid, np.atleast_1d(result))


def default_residue_nodes(s0: float = 1.0, h: float = 0.5) -> Tuple[float, float, float]:
    return (s0 + h, s0 + h / 2, s0 + h / 4)


@dataclass(frozen=True)
class MoreraReport:
    integral: np.ndarray  # per-point contour integral
    max_abs: float
    holds: bool


def morera_check(
    T: OperatorField, center: complex, half_width: float, p: float = 1.0, tol: float = MORERA_TOL
) -> MoreraReport:
    """Contour integral of ``zeta(., T)(x)`` around a square, per grid point.

    Each edge uses 64-point Gauss-Legendre quadrature; the square must lie in
    ``Re z > p``.
    """
    center = complex(center)
    if not center.real - half_width > p:
        raise OutOfHalfPlane("the contour leaves the half-plane Re z > p")
    lambdas = eigenvalue_fields(T)
    t, w = np.polynomial.legendre.leggauss(GAUSS_NODES)
    h = half_width
    corners = [center + h * c for c in (-1 - 1j, 1 - 1j, 1 + 1j, -1 + 1j)]
    total = np.zeros(T.grid.size, dtype=complex)
    for a, b in zip(corners, corners[1:] + corners[:1]):
        mid, half = (a + b) / 2, (b - a) / 2
        for ti, wi in zip(t, w):
            z = mid + half * ti
            total += wi * half * zeta_from_eigenvalues(lambdas, z, p).value.values
    m = float(np.max(np.abs(total), initial=0.0))
    return MoreraReport(total, m, bool(m <= tol))
