"""Frames of Hilbert C(X)-modules given by projection fields.

A module is ``E = Gamma(X, P)`` for a projection field ``P`` inside the
trivial bundle ``X x C^n``. A frame is a finite family of sections
``e_i`` with ``<v, w> = sum_i <v, e_i><e_i, w>`` on the module; frames need
be neither orthogonal nor normalized, and redundant (overcomplete) frames
are allowed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .base import ConvergenceReport, Grid, ScalarField, dini_monitor
from .errors import (
    DimensionMismatch,
    InvalidProjection,
    NotInModule,
    NotModuleOperator,
    NotPartitionOfUnity,
)
from .opfield import OperatorField, VectorField, abs_power, inner, kron

PROJECTION_TOL = 1e-10
HERMITIAN_TOL = 1e-12
MODULE_VECTOR_TOL = 1e-8
MODULE_OPERATOR_TOL = 1e-8
#: Number of seeded pseudo-random module vectors added to the default residual test set.
DEFAULT_RANDOM_TEST_VECTORS = 8


@dataclass(frozen=True, eq=False)
class ModuleSpec:
    """The module of sections of a projection field ``P`` (``P^2 = P* = P`` pointwise)."""

    projection: OperatorField
    label: str = "module"

    def __post_init__(self):
        P = self.projection.matrices
        herm = np.max(np.abs(P - np.conj(np.swapaxes(P, 1, 2))), initial=0.0)
        idem = np.max(np.abs(P @ P - P), initial=0.0)
        if herm >= HERMITIAN_TOL or idem >= PROJECTION_TOL:
            raise InvalidProjection(
                f"{self.label}: |P* - P| = {herm:.2e}, |P^2 - P| = {idem:.2e}"
            )

    @property
    def grid(self) -> Grid:
        return self.projection.grid

    @property
    def dim(self) -> int:
        return self.projection.dim

    def rank_field(self) -> ScalarField:
        return ScalarField(self.grid, np.trace(self.projection.matrices, axis1=1, axis2=2).real)

    def project(self, v: VectorField) -> VectorField:
        return self.projection.apply(v)

    def contains(self, v: VectorField, tol: float = MODULE_VECTOR_TOL) -> bool:
        return bool(np.max(np.abs(self.project(v).vectors - v.vectors), initial=0.0) <= tol)

    def check_operator(self, T: OperatorField, tol: float = MODULE_OPERATOR_TOL) -> None:
        """Raise :class:`NotModuleOperator` unless ``PT = TP = T`` within ``tol``."""
        if T.dim != self.dim:
            raise DimensionMismatch("operator and module have different fiber dimension")
        P, M = self.projection.matrices, T.matrices
        err = max(np.max(np.abs(P @ M - M), initial=0.0), np.max(np.abs(M @ P - M), initial=0.0))
        if err > tol:
            raise NotModuleOperator(f"{self.label}: |PT - T| or |TP - T| = {err:.2e} > {tol:g}")

    def compress(self, T: OperatorField) -> OperatorField:
        """``P T P``, the module operator obtained from an arbitrary field."""
        return self.projection @ T @ self.projection

    def random_vectors(self, count: int, seed: int = 0) -> List[VectorField]:
        rng = np.random.default_rng(seed)
        shape = (count, self.grid.size, self.dim)
        raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return [self.project(VectorField(self.grid, r)) for r in raw]


@dataclass(frozen=True, eq=False)
class Frame:
    """A finite ordered family of module elements (truncation of a countable frame)."""

    elements: Tuple[VectorField, ...]
    module: ModuleSpec

    def __post_init__(self):
        elems = tuple(self.elements)
        object.__setattr__(self, "elements", elems)
        for i, e in enumerate(elems):
            if e.dim != self.module.dim:
                raise DimensionMismatch(f"frame element {i} has the wrong dimension")
            if not self.module.contains(e, PROJECTION_TOL):
                raise NotInModule(f"frame element {i} is not a section of {self.module.label}")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @property
    def grid(self) -> Grid:
        return self.module.grid

    def synthesis_matrices(self) -> np.ndarray:
        """Array ``E`` of shape (N, n, k) whose columns are the frame elements."""
        if not self.elements:
            return np.zeros((self.grid.size, self.module.dim, 0), dtype=complex)
        return np.stack([e.vectors for e in self.elements], axis=2)

    def frame_operator(self) -> OperatorField:
        """``sum_i |e_i><e_i|``; equals ``P`` exactly for an exact frame."""
        E = self.synthesis_matrices()
        return OperatorField(self.grid, E @ np.conj(np.swapaxes(E, 1, 2)))

    def localize(self, x_index: int) -> np.ndarray:
        """Frame of the fiber at ``x``: the (n, k) matrix of localized elements."""
        return self.synthesis_matrices()[self.grid.check_index(x_index)]

    def to_json(self) -> dict:
        from .io import frame_to_json

        return frame_to_json(self)


def projected_frame(spec: ModuleSpec) -> Frame:
    """The frame ``{P e_i}`` obtained by projecting the standard basis."""
    P = spec.projection.matrices
    return Frame(tuple(VectorField(spec.grid, P[:, :, i]) for i in range(spec.dim)), spec)


def _region_mask(grid: Grid, region) -> np.ndarray:
    mask = np.zeros(grid.size, dtype=bool)
    region = np.asarray(list(region) if not isinstance(region, np.ndarray) else region)
    if region.dtype == bool:
        if region.shape != (grid.size,):
            raise DimensionMismatch("boolean region mask has the wrong length")
        return region.copy()
    if region.size:
        mask[region.astype(int)] = True
    return mask


def pou_frame(grid: Grid, region, v0, bump_profiles: Sequence[ScalarField], tol: float = PROJECTION_TOL) -> Frame:
    """Frame ``{eta_i v0}`` of the line-bundle module ``C(U, span v0)``.

    ``bump_profiles`` must satisfy ``sum_i |eta_i|^2 = 1_U`` on the grid.

    Raises
    ------
    NotPartitionOfUnity
        If the squared profiles do not sum to the indicator of ``region``.
    """
    mask = _region_mask(grid, region)
    v0 = np.asarray(v0, dtype=complex)
    if abs(np.linalg.norm(v0) - 1.0) > tol:
        raise ValueError("v0 must be a unit vector")
    total = np.zeros(grid.size)
    for eta in bump_profiles:
        total += np.abs(eta.values) ** 2
    err = np.max(np.abs(total - mask.astype(float)), initial=0.0)
    if err > tol:
        raise NotPartitionOfUnity(f"sum of squared profiles deviates from 1_U by {err:.2e}")
    P = mask[:, None, None] * np.outer(v0, np.conj(v0))[None]
    spec = ModuleSpec(OperatorField(grid, P), label="line bundle over region")
    return Frame(tuple(VectorField(grid, eta.values[:, None] * v0[None, :]) for eta in bump_profiles), spec)


def partition_of_unity(grid: Grid, centers: Sequence[int], width: float) -> List[ScalarField]:
    """Square-normalized bumps ``eta_i`` with ``sum_i eta_i^2 = 1`` on the whole grid.

    Each raw bump is ``cos^2(pi d / 2 width)`` for ``d = dist(x, center) < width``.
    """
    d = grid.distances[np.asarray(centers, dtype=int)]
    raw = np.where(d < width, np.cos(0.5 * np.pi * d / width) ** 2, 0.0)
    norm = np.sqrt(np.sum(raw ** 2, axis=0))
    if np.any(norm == 0):
        raise NotPartitionOfUnity("bumps do not cover the grid; increase width or add centers")
    return [ScalarField(grid, r / norm) for r in raw]


def refine_frame(frame: Frame, profiles: Sequence[ScalarField], tol: float = PROJECTION_TOL) -> Frame:
    """Redundant frame ``{eta_j e_i}`` built from a frame and a partition of unity."""
    total = sum(np.abs(eta.values) ** 2 for eta in profiles)
    err = np.max(np.abs(total - 1.0))
    if err > tol:
        raise NotPartitionOfUnity(f"profiles fail sum eta^2 = 1 by {err:.2e}")
    elems = tuple(e * eta for eta in profiles for e in frame.elements)
    return Frame(elems, frame.module)


def tensor_frame(first: Frame, second: Frame) -> Frame:
    """Exterior product ``{e_i (x) f_j}`` framing the tensor-product module."""
    spec = ModuleSpec(
        kron(first.module.projection, second.module.projection),
        label=f"{first.module.label} (x) {second.module.label}",
    )
    elems = tuple(
        VectorField(first.grid, np.einsum("xi,xj->xij", e.vectors, f.vectors).reshape(first.grid.size, -1))
        for e in first.elements
        for f in second.elements
    )
    return Frame(elems, spec)


def default_test_vectors(module: ModuleSpec, seed: int = 0) -> List[VectorField]:
    """Projected standard basis plus seeded pseudo-random module vectors."""
    basis = [VectorField(module.grid, module.projection.matrices[:, :, i]) for i in range(module.dim)]
    return basis + module.random_vectors(DEFAULT_RANDOM_TEST_VECTORS, seed)


def frame_residual_profile(frame: Frame, test_vectors=None) -> np.ndarray:
    """Per-point reconstruction residual over all test pairs."""
    if test_vectors is None:
        vecs = default_test_vectors(frame.module)
        pairs = [(v, w) for v in vecs for w in vecs]
    else:
        pairs = list(test_vectors)
    profile = np.zeros(frame.grid.size)
    for v, w in pairs:
        v, w = frame.module.project(v), frame.module.project(w)
        recon = np.zeros(frame.grid.size, dtype=complex)
        for e in frame.elements:
            recon += inner(v, e).values * inner(e, w).values
        profile = np.maximum(profile, np.abs(inner(v, w).values - recon))
    return profile


def frame_residual(frame: Frame, test_vectors=None) -> float:
    """``max |<v,w>(x) - sum_i <v,e_i>(x) <e_i,w>(x)|`` over test pairs and points.

    ``test_vectors`` is a sequence of ``(v, w)`` pairs; by default every pair
    drawn from the projected standard basis and 8 seeded module vectors.
    Vectors are projected into the module before use.
    """
    return float(frame_residual_profile(frame, test_vectors).max(initial=0.0))


def frame_transform(frame: Frame, v: VectorField) -> List[ScalarField]:
    """Coordinates ``theta(v) = (<e_i, v>)_i`` in the standard module.

    Raises
    ------
    NotInModule
        If ``sup |Pv - v| > 1e-8``.
    """
    if not frame.module.contains(v):
        raise NotInModule("vector is not a section of the framed module")
    return [inner(e, v) for e in frame.elements]


def frame_synthesis(frame: Frame, coords: Sequence[ScalarField]) -> VectorField:
    """Adjoint transform ``theta*(c) = sum_i e_i c_i``."""
    if len(coords) != len(frame):
        raise DimensionMismatch("one coordinate per frame element required")
    out = np.zeros((frame.grid.size, frame.module.dim), dtype=complex)
    for e, c in zip(frame.elements, coords):
        out += e.vectors * c.values[:, None]
    return VectorField(frame.grid, out)


def conjugate_by_transform(frame: Frame, T: OperatorField) -> OperatorField:
    """Matrix field ``G(x)_ij = <e_i, T e_j>(x)`` realizing ``theta T theta*``."""
    frame.module.check_operator(T)
    E = frame.synthesis_matrices()
    return OperatorField(frame.grid, np.conj(np.swapaxes(E, 1, 2)) @ T.matrices @ E)


@dataclass(frozen=True)
class FrameSeries:
    value: ScalarField
    report: ConvergenceReport


def _diagonal_terms(frame: Frame, T: OperatorField) -> Iterable[np.ndarray]:
    for e in frame.elements:
        yield inner(e, T.apply(e)).values


def frame_trace_series(T: OperatorField, frame: Frame, p: float, tol: float = 1e-12) -> FrameSeries:
    """``sum_i <e_i, |T|^p e_i>`` accumulated through :func:`dini_monitor`.

    The whole (finite) frame is always summed so that zero elements in the
    middle cannot end the series early; the report records the size of the
    last increment.
    """
    if p < 1:
        from .errors import BadExponent

        raise BadExponent(f"p must be >= 1, got {p}")
    frame.module.check_operator(T)
    Tp = abs_power(T, p)
    report = dini_monitor(
        _diagonal_terms(frame, Tp), tol, max_terms=len(frame) + 1, min_terms=len(frame) + 1
    )
    total = report.partial_sum if report.partial_sum is not None else np.zeros(frame.grid.size)
    return FrameSeries(ScalarField(frame.grid, total), report)


def trace_via_frame(T: OperatorField, frame: Frame) -> ScalarField:
    """``sum_i <e_i, T e_i>``; equals the trace of ``PTP``."""
    frame.module.check_operator(T)
    total = np.zeros(frame.grid.size, dtype=complex)
    for term in _diagonal_terms(frame, T):
        total += term
    return ScalarField(frame.grid, total)


def hs_via_frame(S: OperatorField, T: OperatorField, frame: Frame) -> ScalarField:
    """``sum_i <S e_i, T e_i>``, the frame series for the Hilbert-Schmidt pairing."""
    frame.module.check_operator(S)
    frame.module.check_operator(T)
    total = np.zeros(frame.grid.size, dtype=complex)
    for e in frame.elements:
        total += inner(S.apply(e), T.apply(e)).values
    return ScalarField(frame.grid, total)
