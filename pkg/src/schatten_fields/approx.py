"""Finite-rank truncations ``P_n T P_n`` and their Schatten-norm error bounds."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, List, Tuple

import numpy as np

from .errors import BadExponent, BoundViolated, RankOutOfRange
from .opfield import OperatorField, abs_power, adjoint, fiber_norms

BOUND_SLACK = 1e-9


def _check_rank(T: OperatorField, *ranks: int) -> None:
    for r in ranks:
        if not 0 <= r <= T.dim:
            raise RankOutOfRange(f"rank {r} outside [0, {T.dim}]")


def coordinate_projection(dim: int, start: int, stop: int) -> np.ndarray:
    """Diagonal 0/1 vector selecting standard coordinates ``start..stop-1``."""
    mask = np.zeros(dim)
    mask[start:stop] = 1.0
    return mask


def truncate(T: OperatorField, n: int) -> OperatorField:
    """``P_n T P_n`` with ``P_n`` the projection onto the first ``n`` coordinates."""
    _check_rank(T, n)
    out = np.zeros_like(T.matrices)
    out[:, :n, :n] = T.matrices[:, :n, :n]
    return OperatorField(T.grid, out)


def polar_factor(T: OperatorField) -> Tuple[OperatorField, OperatorField]:
    """Weak polar decomposition ``T = S |T|^(1/2)`` with ``|S|^2 = |T|``.

    From the fiberwise SVD ``T = U Sigma V*``: ``S = U Sigma^(1/2) V*`` and
    ``|T|^(1/2) = V Sigma^(1/2) V*``.
    """
    U, s, Vh = np.linalg.svd(T.matrices)
    root = np.sqrt(s)
    S = np.einsum("xik,xk,xkj->xij", U, root, Vh)
    half = np.einsum("xki,xk,xkj->xij", np.conj(Vh), root, Vh)
    return OperatorField(T.grid, S), OperatorField(T.grid, half)


def truncate_factored(T: OperatorField, n: int) -> OperatorField:
    """Alternative truncation ``P_n S P_n |T|^(1/2) P_n`` through the polar factor."""
    _check_rank(T, n)
    S, half = polar_factor(T)
    mask = coordinate_projection(T.dim, 0, n)
    Sn = S.matrices * mask[None, :, None] * mask[None, None, :]
    Hn = half.matrices * mask[None, :, None] * mask[None, None, :]
    return OperatorField(T.grid, Sn @ Hn)


def factorization_gap(T: OperatorField, n: int, p: float) -> float:
    """``sup_x ||T(x)||_p^(1/2) - ||P_n S(x)||_(2p)``; nonnegative by Hoelder."""
    _check_rank(T, n)
    S, _ = polar_factor(T)
    PS = S.matrices * coordinate_projection(T.dim, 0, n)[None, :, None]
    gap = np.sqrt(fiber_norms(T.matrices, "schatten", p)) - fiber_norms(PS, "schatten", 2 * p)
    return float(gap.min())


def _corner_trace(A: OperatorField, start: int, stop: int) -> np.ndarray:
    """``tr e A e`` per point for the coordinate projection ``e``."""
    diag = np.einsum("xii->xi", A.matrices).real
    return diag[:, start:stop].sum(axis=1)


@dataclass(frozen=True)
class TruncationBound:
    p: float
    n: int
    m: int
    bound: float
    measured: float
    pointwise_bound: float
    aggregate_bound: float

    def as_row(self) -> dict:
        return {"n": self.n, "m": self.m, "p": self.p, "bound": self.bound, "measured": self.measured}


def _bound_from_powers(T, p, n, m, trace_p, Tp, Tsp, check=True) -> TruncationBound:
    diff = truncate(T, m).matrices - truncate(T, n).matrices
    measured = float(fiber_norms(diff, "schatten", p).max())
    corner = np.maximum(_corner_trace(Tp, n, m), 0.0)
    corner_adj = np.maximum(_corner_trace(Tsp, n, m), 0.0)
    pointwise = np.sqrt(trace_p ** (1.0 / p)) * (corner_adj ** (0.5 / p) + corner ** (0.5 / p))
    pointwise_bound = float(pointwise.max())
    aggregate = (2.0 ** (2 * p - 1) * float(np.max(trace_p * (corner + corner_adj)))) ** (0.5 / p)
    bound = min(pointwise_bound, aggregate)
    if check and measured > bound + BOUND_SLACK:
        raise BoundViolated(f"||T_{m} - T_{n}||_{p} = {measured:.6e} exceeds bound {bound:.6e}")
    return TruncationBound(p, n, m, bound, measured, pointwise_bound, aggregate)


def _powers(T: OperatorField, p: float):
    if p < 1:
        raise BadExponent(f"p must be >= 1, got {p}")
    trace_p = fiber_norms(T.matrices, "schatten", p) ** p
    return trace_p, abs_power(T, p), abs_power(adjoint(T), p)


def truncation_bound(T: OperatorField, p: float, n: int, m: int) -> TruncationBound:
    """Measure ``sup_x ||T_m - T_n||_p`` against two a priori bounds.

    With ``e`` the projection onto coordinates ``n..m-1``:

    * per point, ``||T||_p^(1/2) ((tr e|T*|^p e)^(1/2p) + (tr e|T|^p e)^(1/2p))``;
    * aggregated, ``(2^(2p-1) sup_x tr|T|^p sum_(i=n+1)^m <e_i, (|T|^p + |T*|^p) e_i>)^(1/2p)``.

    Raises
    ------
    BoundViolated
        If the measured difference exceeds the smaller bound by more than 1e-9.
    """
    _check_rank(T, n, m)
    if n > m:
        raise RankOutOfRange(f"need n <= m, got n={n}, m={m}")
    return _bound_from_powers(T, p, n, m, *_powers(T, p))


def truncation_bound_table(T: OperatorField, p: float, check: bool = True) -> List[TruncationBound]:
    """:func:`truncation_bound` for every pair ``0 <= n < m <= dim``, sharing ``|T|^p``.

    With ``check=False`` violations are returned instead of raised.
    """
    powers = _powers(T, p)
    return [
        _bound_from_powers(T, p, n, m, *powers, check=check)
        for m in range(1, T.dim + 1)
        for n in range(m)
    ]


def bounds_to_csv(rows: Iterable[TruncationBound], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "m", "p", "bound", "measured"])
        for r in rows:
            writer.writerow([r.n, r.m, repr(float(r.p)), repr(r.bound), repr(r.measured)])


@dataclass(frozen=True)
class CornerBound:
    lhs: float
    rhs: float
    holds: bool


def truncated_corner_bound(T: OperatorField, e_rank_range: Tuple[int, int], p: float) -> CornerBound:
    """``sup_x ||T(x) e||_p^p`` against ``sup_x tr e|T(x)|^p e`` for ``p >= 2``.

    ``e`` projects onto the coordinates ``a..b-1`` of ``e_rank_range = (a, b)``.
    """
    if p < 2:
        raise BadExponent(f"the corner bound needs p >= 2, got {p}")
    a, b = e_rank_range
    _check_rank(T, a, b)
    if not a < b:
        raise RankOutOfRange(f"need a < b, got ({a}, {b})")
    mask = coordinate_projection(T.dim, a, b)
    lhs = float((fiber_norms(T.matrices * mask[None, None, :], "schatten", p) ** p).max())
    rhs = float(_corner_trace(abs_power(T, p), a, b).max())
    return CornerBound(lhs, rhs, bool(lhs <= rhs + BOUND_SLACK))


@dataclass(frozen=True)
class CompactnessCertificate:
    rank_needed: int
    saturated: bool
    tail_profile: np.ndarray  # sup_x ||T - T_n|| for n = 0..dim


def compactness_certificate(T: OperatorField, tol: float) -> CompactnessCertificate:
    """Smallest ``n`` with ``sup_x ||T(x) - (P_n T P_n)(x)|| < tol``.

    ``saturated`` is set when only the full dimension works (and the field is
    nonzero), the finite-dimensional stand-in for "not compact".
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    tails = np.array(
        [fiber_norms(T.matrices - truncate(T, n).matrices, "operator").max() for n in range(T.dim + 1)]
    )
    rank = int(np.argmax(tails < tol)) if np.any(tails < tol) else T.dim
    saturated = rank == T.dim and T.dim > 0 and tails[0] >= tol
    return CompactnessCertificate(rank, bool(saturated), tails)
