"""The C(X)-valued Fredholm determinant ``x -> det(1 + T(x))``.

Three routes are provided and cross-checked: the spectral product, the
exterior-power series (via Newton's identities) and the logarithmic
power-sum series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import ScalarField
from .errors import OutsideConvergenceRadius, TruncationTooDeep
from .opfield import OperatorField, _check_pair, fiber_norms

#: Relative threshold for calling a fiber of ``1 + T`` singular.
SINGULAR_TOL = 1e-12
RADIUS_MARGIN = 1e-9
LIPSCHITZ_SLACK = 1e-9


@dataclass(frozen=True)
class DetReport:
    value: ScalarField
    method: str
    series_terms: int = 0
    tail_estimate: float = 0.0
    coefficients: Optional[np.ndarray] = None  # (N, K+1) values of tr Lambda^k T


def det_field(T: OperatorField) -> ScalarField:
    """``prod_i (1 + lambda_i(T(x)))`` multiplied in ascending ``|lambda|``."""
    lam = np.linalg.eigvals(T.matrices)
    order = np.argsort(np.abs(lam), axis=1, kind="stable")
    factors = 1.0 + np.take_along_axis(lam, order, axis=1)
    out = np.ones(T.grid.size, dtype=complex)
    for k in range(factors.shape[1]):
        out = out * factors[:, k]
    return ScalarField(T.grid, out)


def power_sums(T: OperatorField, K: int) -> np.ndarray:
    """``tr T(x)^k`` for ``k = 1..K`` from repeated matrix products, shape (N, K)."""
    out = np.zeros((T.grid.size, K), dtype=complex)
    M = np.array(T.matrices)
    for k in range(K):
        out[:, k] = np.trace(M, axis1=1, axis2=2)
        if k + 1 < K:
            M = M @ T.matrices
    return out


def elementary_symmetric(p: np.ndarray) -> np.ndarray:
    """Newton's identities ``k e_k = sum_(i=1)^k (-1)^(i-1) e_(k-i) p_i``.

    ``p`` has shape (N, K) holding power sums ``p_1..p_K``; returns ``e_0..e_K``.
    """
    N, K = p.shape
    e = np.zeros((N, K + 1), dtype=complex)
    e[:, 0] = 1.0
    for k in range(1, K + 1):
        acc = np.zeros(N, dtype=complex)
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[:, k - i] * p[:, i - 1]
        e[:, k] = acc / k
    return e


def trace_norm_sup(T: OperatorField) -> float:
    return float(fiber_norms(T.matrices, "schatten", 1).max())


def det_exterior_series(T: OperatorField, K: int) -> DetReport:
    """``sum_(k<=K) tr Lambda^k T`` with tail estimate ``||T||_1^(K+1) / (K+1)!``.

    Raises
    ------
    TruncationTooDeep
        If ``K`` exceeds the fiber dimension (the series terminates there).
    """
    if K > T.dim:
        raise TruncationTooDeep(f"K = {K} exceeds fiber dimension {T.dim}")
    if K < 0:
        raise ValueError("K must be nonnegative")
    coeffs = elementary_symmetric(power_sums(T, K)) if K else np.ones((T.grid.size, 1), dtype=complex)
    value = ScalarField(T.grid, coeffs.sum(axis=1))
    norm1 = trace_norm_sup(T)
    tail = norm1 ** (K + 1) / math.factorial(K + 1)
    return DetReport(value, "exterior_series", K, tail, coeffs)


def log_series_tail(T: OperatorField, z: complex, N: int) -> float:
    """``r^(N+1) / ((N+1)(1-r))`` with ``r = |z| sup_x ||T(x)||_1``."""
    r = abs(z) * trace_norm_sup(T)
    return r ** (N + 1) / ((N + 1) * (1.0 - r))


def det_log_series(T: OperatorField, z: complex = 1.0, N: int = 40) -> ScalarField:
    """``exp(sum_(n=1)^N (-1)^(n+1) z^n tr T^n / n)``, valid for ``|z| ||T||_1 < 1``.

    Raises
    ------
    OutsideConvergenceRadius
        If ``|z| sup_x ||T(x)||_1 >= 1 - 1e-9``; ``radius_product`` carries the value.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    z = complex(z)
    r = abs(z) * trace_norm_sup(T)
    if r >= 1.0 - RADIUS_MARGIN:
        raise OutsideConvergenceRadius(
            f"|z| * sup ||T||_1 = {r!r} is not below 1", radius_product=r
        )
    p = power_sums(T, N)
    n = np.arange(1, N + 1)
    weights = (-1.0) ** (n + 1) * z ** n / n
    return ScalarField(T.grid, np.exp(p @ weights))


def det_report(T: OperatorField, method: str = "product", z: complex = 1.0, terms: Optional[int] = None) -> DetReport:
    """Evaluate ``det(1 + zT)`` by the named method."""
    zT = T * complex(z)
    if method in ("product", "eigen_product"):
        return DetReport(det_field(zT), "eigen_product")
    if method in ("exterior", "exterior_series"):
        return det_exterior_series(zT, T.dim if terms is None else terms)
    if method in ("log", "log_series"):
        N = 40 if terms is None else terms
        value = det_log_series(T, z, N)
        return DetReport(value, "log_series", N, log_series_tail(T, z, N))
    raise ValueError(f"unknown determinant method {method!r}")


def check_det_multiplicative(S: OperatorField, T: OperatorField) -> float:
    """``sup_x |det((1+T)(1+S) - 1) - det(1+T) det(1+S)|``."""
    _check_pair(S, T)
    joint = T + S + (T @ S)
    return (det_field(joint) - det_field(T) * det_field(S)).sup_norm()


@dataclass(frozen=True)
class LipschitzReport:
    lhs: float
    rhs: float
    holds: bool


def det_lipschitz_check(T1: OperatorField, T2: OperatorField) -> LipschitzReport:
    """``sup|det(1+T1) - det(1+T2)|`` against ``||T1-T2||_1 exp(||T1||_1 + ||T2||_1 + 1)``."""
    _check_pair(T1, T2)
    lhs = (det_field(T1) - det_field(T2)).sup_norm()
    rhs = trace_norm_sup(T1 - T2) * math.exp(trace_norm_sup(T1) + trace_norm_sup(T2) + 1.0)
    return LipschitzReport(lhs, rhs, bool(lhs <= rhs + LIPSCHITZ_SLACK))


@dataclass(frozen=True)
class InvertibilityReport:
    det_min: float
    resolvent_sup: float
    consistent: bool
    det_singular: np.ndarray
    resolvent_singular: np.ndarray


def check_det_invertibility(T: OperatorField) -> InvertibilityReport:
    """Compare the determinant test with a direct inverse test, fiber by fiber.

    A fiber is determinant-singular when ``|det(1+T(x))| < 1e-12 (1+||T(x)||)^n``
    and resolvent-singular when ``sigma_min(1+T(x)) < 1e-12 (1+||T(x)||)``.
    ``consistent`` means both tests flag exactly the same fibers.
    ``resolvent_sup`` is infinite as soon as one fiber is resolvent-singular.
    """
    det = np.abs(det_field(T).values)
    scale = 1.0 + fiber_norms(T.matrices, "operator")
    shifted = T.matrices + np.eye(T.dim)[None]
    smin = np.linalg.svd(shifted, compute_uv=False)[:, -1]
    det_sing = det < SINGULAR_TOL * scale ** T.dim
    res_sing = smin < SINGULAR_TOL * scale
    if res_sing.any():
        resolvent_sup = math.inf
    else:
        resolvent_sup = float(np.max(1.0 / smin))
    return InvertibilityReport(
        float(det.min()), resolvent_sup, bool(np.array_equal(det_sing, res_sing)), det_sing, res_sing
    )
