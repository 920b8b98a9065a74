"""Operator fields x -> T(x) in M_n(C) over a grid, and vector fields.

An :class:`OperatorField` is the truncation to ``C^n`` of an adjointable
operator on the standard module C(X, H); every algebraic operation acts
fiberwise. Fiberwise spectral work is batched through ``numpy.linalg``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .base import Grid, ScalarField
from .errors import BadExponent, DimensionMismatch, NotPositive

#: Relative cut-off below which eigenvalues count as zero modes in ``pos_power``.
EIGENVALUE_FLOOR = 1e-12
#: Absolute tolerance on negative eigenvalues of "positive" fields.
POSITIVITY_TOL = 1e-10


def _same_grid(a, b):
    if a.grid is not b.grid and a.grid.size != b.grid.size:
        raise DimensionMismatch("fields live on different grids")


@dataclass(frozen=True, eq=False)
class OperatorField:
    """One ``dim x dim`` complex matrix per grid point (array of shape (N, n, n))."""

    grid: Grid
    matrices: np.ndarray

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise DimensionMismatch(f"expected (N, n, n) matrices, got {mats.shape}")
        if mats.shape[0] != self.grid.size:
            raise DimensionMismatch(f"{mats.shape[0]} matrices for {self.grid.size} grid points")
        mats = mats.copy()
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    # -- constructors --------------------------------------------------
    @classmethod
    def constant(cls, grid: Grid, matrix) -> "OperatorField":
        m = np.asarray(matrix, dtype=complex)
        return cls(grid, np.broadcast_to(m, (grid.size,) + m.shape))

    @classmethod
    def identity(cls, grid: Grid, dim: int) -> "OperatorField":
        return cls.constant(grid, np.eye(dim))

    @classmethod
    def zeros(cls, grid: Grid, dim: int) -> "OperatorField":
        return cls.constant(grid, np.zeros((dim, dim)))

    @classmethod
    def diagonal(cls, grid: Grid, diag) -> "OperatorField":
        """Diagonal field; ``diag`` has shape (n,) (constant) or (N, n)."""
        d = np.asarray(diag, dtype=complex)
        if d.ndim == 1:
            d = np.broadcast_to(d, (grid.size, d.size))
        n = d.shape[1]
        mats = np.zeros((grid.size, n, n), dtype=complex)
        idx = np.arange(n)
        mats[:, idx, idx] = d
        return cls(grid, mats)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "OperatorField":
        """``fn`` maps one coordinate vector to a matrix."""
        return cls(grid, np.stack([np.asarray(fn(x), dtype=complex) for x in grid.points]))

    @classmethod
    def multiplication(cls, a: ScalarField, dim: int) -> "OperatorField":
        """The module action rho(a): v -> v.a, i.e. x -> a(x) Id."""
        return cls(a.grid, a.values[:, None, None] * np.eye(dim)[None])

    # -- algebra ---------------------------------------------------------
    def __matmul__(self, other: "OperatorField") -> "OperatorField":
        return compose(self, other)

    def __add__(self, other: "OperatorField") -> "OperatorField":
        _check_pair(self, other)
        return OperatorField(self.grid, self.matrices + other.matrices)

    def __sub__(self, other: "OperatorField") -> "OperatorField":
        _check_pair(self, other)
        return OperatorField(self.grid, self.matrices - other.matrices)

    def __neg__(self) -> "OperatorField":
        return OperatorField(self.grid, -self.matrices)

    def __mul__(self, c) -> "OperatorField":
        """Scalar multiple; a :class:`ScalarField` acts pointwise (right module action)."""
        if isinstance(c, ScalarField):
            _same_grid(self, c)
            return OperatorField(self.grid, self.matrices * c.values[:, None, None])
        return OperatorField(self.grid, self.matrices * c)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "OperatorField":
        return OperatorField(self.grid, self.matrices / c)

    @property
    def H(self) -> "OperatorField":
        return adjoint(self)

    def at(self, i: int) -> np.ndarray:
        return localize(self, i)

    def apply(self, v: "VectorField") -> "VectorField":
        if v.dim != self.dim:
            raise DimensionMismatch("vector field dimension differs from operator dimension")
        _same_grid(self, v)
        return VectorField(self.grid, np.einsum("xij,xj->xi", self.matrices, v.vectors))

    def hermitian_part(self) -> "OperatorField":
        return OperatorField(self.grid, 0.5 * (self.matrices + _ct(self.matrices)))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrices - _ct(self.matrices)), initial=0.0) <= tol)


def _check_pair(S: OperatorField, T: OperatorField):
    _same_grid(S, T)
    if S.dim != T.dim:
        raise DimensionMismatch(f"fiber dimensions {S.dim} and {T.dim} differ")


def _ct(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


@dataclass(frozen=True, eq=False)
class VectorField:
    """One ``dim``-vector per grid point (array of shape (N, n))."""

    grid: Grid
    vectors: np.ndarray

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=complex)
        if vecs.ndim != 2 or vecs.shape[0] != self.grid.size:
            raise DimensionMismatch(f"expected ({self.grid.size}, n) vectors, got {vecs.shape}")
        vecs = vecs.copy()
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @classmethod
    def constant(cls, grid: Grid, vector) -> "VectorField":
        v = np.asarray(vector, dtype=complex)
        return cls(grid, np.broadcast_to(v, (grid.size, v.size)))

    @classmethod
    def basis(cls, grid: Grid, dim: int, i: int) -> "VectorField":
        """The constant field ``e_i (x) 1``."""
        return cls.constant(grid, np.eye(dim)[i])

    def __add__(self, other):
        return VectorField(self.grid, self.vectors + other.vectors)

    def __sub__(self, other):
        return VectorField(self.grid, self.vectors - other.vectors)

    def __mul__(self, a):
        """Right action of C(X) (scalar field) or multiplication by a number."""
        if isinstance(a, ScalarField):
            return VectorField(self.grid, self.vectors * a.values[:, None])
        return VectorField(self.grid, self.vectors * a)

    __rmul__ = __mul__

    def norm_field(self) -> ScalarField:
        return ScalarField(self.grid, np.linalg.norm(self.vectors, axis=1))


def inner(v: VectorField, w: VectorField) -> ScalarField:
    """C(X)-valued inner product, conjugate-linear in the first slot."""
    _same_grid(v, w)
    if v.dim != w.dim:
        raise DimensionMismatch("vector fields of different dimension")
    return ScalarField(v.grid, np.einsum("xi,xi->x", np.conj(v.vectors), w.vectors))


def outer(v: VectorField, w: VectorField) -> OperatorField:
    """The rank-one field ``|v><w|``."""
    _same_grid(v, w)
    return OperatorField(v.grid, np.einsum("xi,xj->xij", v.vectors, np.conj(w.vectors)))


def kron(S: OperatorField, T: OperatorField) -> OperatorField:
    """Fiberwise tensor product ``S(x) (x) T(x)``."""
    _same_grid(S, T)
    n, m = S.dim, T.dim
    mats = np.einsum("xij,xkl->xikjl", S.matrices, T.matrices).reshape(S.grid.size, n * m, n * m)
    return OperatorField(S.grid, mats)


def compose(S: OperatorField, T: OperatorField) -> OperatorField:
    """Pointwise product ``(ST)(x) = S(x) T(x)``."""
    _check_pair(S, T)
    return OperatorField(S.grid, S.matrices @ T.matrices)


def adjoint(T: OperatorField) -> OperatorField:
    """Pointwise conjugate transpose."""
    return OperatorField(T.grid, _ct(T.matrices))


def localize(T: OperatorField, x_index: int) -> np.ndarray:
    """Evaluation at a point: the localization of ``T`` at a character of C(X)."""
    return np.array(T.matrices[T.grid.check_index(x_index)])


def singular_values(T: OperatorField) -> np.ndarray:
    """Fiberwise singular values, shape (N, n), decreasing."""
    return np.linalg.svd(T.matrices, compute_uv=False)


def sorted_eigh(T: OperatorField):
    """Eigen-decomposition of the Hermitian part, eigenvalues decreasing.

    Ties are broken by the index in the ascending ``eigh`` output, so the
    ordering is deterministic. Returns ``(values (N, n), vectors (N, n, n))``.
    """
    w, V = np.linalg.eigh(T.hermitian_part().matrices)
    order = np.argsort(-w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w, V


def abs_power(T: OperatorField, p: float) -> OperatorField:
    """``|T|^p = V diag(sigma^p) V*`` from the fiberwise SVD ``T = U Sigma V*``."""
    if p <= 0:
        raise BadExponent(f"abs_power needs p > 0, got {p}")
    _, s, Vh = np.linalg.svd(T.matrices)
    sp = np.where(s > 0, s, 0.0) ** p
    mats = np.einsum("xki,xk,xkj->xij", np.conj(Vh), sp, Vh)
    return OperatorField(T.grid, mats)


def pos_power(T: OperatorField, z: complex, floor: float = EIGENVALUE_FLOOR) -> OperatorField:
    """Complex power ``T^z`` of a pointwise positive field by functional calculus.

    Eigenvalues at or below ``floor * (largest eigenvalue in the field)`` are
    treated as zero modes and mapped to 0.

    Raises
    ------
    NotPositive
        If some eigenvalue is below ``-1e-10``.
    BadExponent
        If ``Re z <= 0``.
    """
    z = complex(z)
    if z.real <= 0:
        raise BadExponent(f"pos_power needs Re z > 0, got {z}")
    w, V = np.linalg.eigh(T.hermitian_part().matrices)
    if w.size and w.min() < -POSITIVITY_TOL:
        raise NotPositive(f"field has eigenvalue {w.min():.3e} < 0")
    cut = floor * max(float(w.max(initial=0.0)), 0.0)
    keep = w > cut
    powered = np.zeros(w.shape, dtype=complex)
    powered[keep] = np.exp(z * np.log(w[keep]))
    mats = np.einsum("xik,xk,xjk->xij", V, powered, np.conj(V))
    return OperatorField(T.grid, mats)


def functional_calculus(T: OperatorField, fn: Callable[[np.ndarray], np.ndarray]) -> OperatorField:
    """``fn(T)`` for a pointwise Hermitian field (``fn`` applied to eigenvalues)."""
    w, V = np.linalg.eigh(T.hermitian_part().matrices)
    mats = np.einsum("xik,xk,xjk->xij", V, np.asarray(fn(w), dtype=complex), np.conj(V))
    return OperatorField(T.grid, mats)


def fiber_norms(mats: np.ndarray, kind: str = "operator", p: Optional[float] = None) -> np.ndarray:
    """Norms of a stack of matrices: operator norm or Schatten-p norm."""
    s = np.linalg.svd(mats, compute_uv=False)
    if kind == "operator":
        return s.max(axis=-1, initial=0.0)
    if kind in ("schatten", "schatten_p"):
        if p is None or p < 1:
            raise BadExponent(f"Schatten norms need p >= 1, got {p}")
        if np.isinf(p):
            return s.max(axis=-1, initial=0.0)
        return np.sum(s ** p, axis=-1) ** (1.0 / p)
    raise ValueError(f"unknown norm kind {kind!r}")


def continuity_modulus(T: OperatorField, norm_kind: str = "operator", p: Optional[float] = None) -> float:
    """Largest ``||T(x_i) - T(x_j)|| / d(x_i, x_j)`` over adjacent pairs."""
    adj = T.grid.adjacency
    if adj.size == 0:
        return 0.0
    diffs = T.matrices[adj[:, 0]] - T.matrices[adj[:, 1]]
    d = T.grid.distances[adj[:, 0], adj[:, 1]]
    return float(np.max(fiber_norms(diffs, norm_kind, p) / d))


def operator_sup_norm(T: OperatorField) -> float:
    """``||T|| = sup_x ||T(x)||`` (operator norm on every fiber)."""
    return float(np.max(fiber_norms(T.matrices, "operator")))
