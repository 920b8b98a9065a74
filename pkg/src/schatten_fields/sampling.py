"""Seeded pseudo-random fields for property checks.

All generators draw from ``numpy.random.Generator(PCG64(seed))``; complex
entries are ``(N(0,1) + i N(0,1)) / sqrt(2)``. Fields vary smoothly over
the grid so that continuity statements are meaningful.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np
from scipy.linalg import expm

from .base import Grid
from .frames import ModuleSpec
from .opfield import OperatorField, fiber_norms


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for ``seed``; extra integers select an independent stream."""
    if stream:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *stream])))
    return np.random.Generator(np.random.PCG64(seed))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def grid_coordinate(grid: Grid) -> np.ndarray:
    """A scalar coordinate on the grid rescaled to ``[0, 1]``."""
    t = grid.points[:, 0].astype(float)
    span = t.max() - t.min()
    return (t - t.min()) / span if span > 0 else np.zeros_like(t)


def random_field(grid: Grid, dim: int, rng: np.random.Generator, modes: int = 3) -> OperatorField:
    """``T(x) = A_0 + sum_j cos(w_j t(x) + phi_j) A_j`` with Gaussian ``A_j``."""
    t = grid_coordinate(grid)
    A = complex_gaussian(rng, (modes + 1, dim, dim))
    w = rng.uniform(0.5, 3.0, modes)
    phi = rng.uniform(0.0, 2 * np.pi, modes)
    coeff = np.cos(np.outer(t, w) + phi)  # (N, modes)
    mats = A[0][None] + np.einsum("xj,jab->xab", coeff, A[1:])
    return OperatorField(grid, mats / np.sqrt(dim))


def random_hermitian(grid: Grid, dim: int, rng: np.random.Generator) -> OperatorField:
    return random_field(grid, dim, rng).hermitian_part()


def random_positive(grid: Grid, dim: int, rng: np.random.Generator) -> OperatorField:
    A = random_field(grid, dim, rng)
    return A @ A.H


def random_contraction(grid: Grid, dim: int, rng: np.random.Generator) -> OperatorField:
    """Positive field with ``0 <= T(x) <= 1`` (scaled by the sup operator norm)."""
    P = random_positive(grid, dim, rng)
    return P / float(fiber_norms(P.matrices, "operator").max())


def scale_to_trace_norm(T: OperatorField, target: float) -> OperatorField:
    """Rescale so that ``sup_x ||T(x)||_1 = target``."""
    return T * (target / float(fiber_norms(T.matrices, "schatten", 1).max()))


def normalize_operator_norm(T: OperatorField) -> OperatorField:
    norm = float(fiber_norms(T.matrices, "operator").max())
    return T if norm == 0 else T / norm


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(complex_gaussian(rng, (dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def random_projection_field(grid: Grid, dim: int, rank: int, rng: np.random.Generator) -> ModuleSpec:
    """``P(x) = W(x) P_0 W(x)*`` with ``W(x) = exp(i t(x) H) W_0``, rank constant."""
    t = grid_coordinate(grid)
    H = complex_gaussian(rng, (dim, dim))
    H = (H + H.conj().T) / 2
    W0 = random_unitary(dim, rng)
    P0 = np.diag(np.r_[np.ones(rank), np.zeros(dim - rank)]).astype(complex)
    mats = np.empty((grid.size, dim, dim), dtype=complex)
    for i, ti in enumerate(t):
        W = expm(1j * ti * H) @ W0
        P = W @ P0 @ W.conj().T
        mats[i] = (P + P.conj().T) / 2
    return ModuleSpec(OperatorField(grid, mats), label=f"rank-{rank} projection field")


def random_module_operator(spec: ModuleSpec, rng: np.random.Generator, positive: bool = False) -> OperatorField:
    """``P A P`` (or ``P A A* P``) normalized to sup operator norm 1."""
    A = random_field(spec.grid, spec.dim, rng)
    if positive:
        A = A @ A.H
    return normalize_operator_norm(spec.compress(A))


def random_commuting_positive_pair(
    grid: Grid, dim: int, rng: np.random.Generator, scale: float = 3.0
) -> Tuple[OperatorField, OperatorField]:
    """Positive ``a, b`` diagonal in one pointwise unitary frame."""
    t = grid_coordinate(grid)
    H = complex_gaussian(rng, (dim, dim))
    H = (H + H.conj().T) / 2
    W0 = random_unitary(dim, rng)
    da = scale * rng.uniform(0.0, 1.0, (dim,)) * (1 + 0.5 * np.cos(np.outer(t, np.arange(1, dim + 1))))
    db = scale * rng.uniform(0.0, 1.0, (dim,)) * (1 + 0.5 * np.sin(np.outer(t, np.arange(1, dim + 1))))
    A = np.empty((grid.size, dim, dim), dtype=complex)
    B = np.empty_like(A)
    for i, ti in enumerate(t):
        W = expm(1j * ti * H) @ W0
        A[i] = (W * da[i]) @ W.conj().T
        B[i] = (W * db[i]) @ W.conj().T
    herm = lambda M: (M + np.conj(np.swapaxes(M, 1, 2))) / 2
    return OperatorField(grid, herm(A)), OperatorField(grid, herm(B))


def near_singular_field(
    grid: Grid, dim: int, rng: np.random.Generator, x_index: int, delta: float, scale: float = 0.1
) -> OperatorField:
    """Small random field with one fiber having eigenvalue ``-1 + delta``.

    The special fiber is ``V diag(-1 + delta, mu_2, ...) V^(-1)`` with a
    random well-conditioned ``V``; ``delta = 0`` makes ``1 + T`` singular there.
    """
    T = random_field(grid, dim, rng) * scale
    mats = np.array(T.matrices)
    V = np.eye(dim) + 0.3 * complex_gaussian(rng, (dim, dim)) / np.sqrt(dim)
    mu = rng.uniform(-0.3, 0.3, dim).astype(complex)
    mu[0] = -1.0 + delta
    mats[x_index] = V @ np.diag(mu) @ np.linalg.inv(V)
    return OperatorField(grid, mats)
