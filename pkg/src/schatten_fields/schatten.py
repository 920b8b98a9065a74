"""Fiberwise Schatten norms, the C(X)-valued trace and Hilbert-Schmidt pairing.

Pointwise Schatten data always comes from fiberwise singular values here;
the frame-series route lives in :mod:`schatten_fields.frames` so the two can
be cross-checked.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .base import ScalarField
from .errors import BadExponent, PreconditionFailed
from .opfield import (
    OperatorField,
    POSITIVITY_TOL,
    _check_pair,
    abs_power,
    adjoint,
    compose,
    continuity_modulus,
    operator_sup_norm,
    singular_values,
)

#: Absolute slack allowed in inequality checks on unit-scale inputs.
INEQUALITY_SLACK = 1e-9


def _check_p(p):
    if not p >= 1:
        raise BadExponent(f"Schatten exponent must be >= 1, got {p}")


@dataclass(frozen=True)
class SchattenReport:
    p: float
    norm_field: ScalarField
    sup_norm: float
    modulus: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# p={self.p!r}\n# sup_norm={self.sup_norm!r}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x_index", "pointwise_norm"])
            for i, v in enumerate(self.norm_field.values):
                writer.writerow([i, repr(float(v))])


def schatten_norm_field(T: OperatorField, p: float) -> ScalarField:
    """``x -> ||T(x)||_p = (sum_i sigma_i(T(x))^p)^(1/p)``; ``p = inf`` gives the operator norm."""
    _check_p(p)
    s = singular_values(T)
    if np.isinf(p):
        vals = s.max(axis=1, initial=0.0)
    else:
        vals = np.sum(s ** p, axis=1) ** (1.0 / p)
    return ScalarField(T.grid, vals)


def schatten_norm(T: OperatorField, p: float) -> float:
    """``||T||_p = sup_x ||T(x)||_p``."""
    return float(schatten_norm_field(T, p).values.max())


def schatten_report(T: OperatorField, p: float) -> SchattenReport:
    field = schatten_norm_field(T, p)
    return SchattenReport(p, field, float(field.values.max()), continuity_modulus(T, "schatten", p))


def trace_field(T: OperatorField) -> ScalarField:
    """The C(X)-valued trace ``x -> sum_i T(x)_ii``."""
    return ScalarField(T.grid, np.trace(T.matrices, axis1=1, axis2=2))


def hs_inner(S: OperatorField, T: OperatorField) -> ScalarField:
    """Hilbert-Schmidt pairing by polarization, ``1/4 sum_k i^k tr|T + i^k S|^2``.

    Conjugate-linear in ``S``; pointwise equal to ``tr(S(x)* T(x))``.
    """
    _check_pair(S, T)
    total = np.zeros(T.grid.size, dtype=complex)
    for k in range(4):
        phase = 1j ** k
        total += phase * schatten_norm_field(T + S * phase, 2).values ** 2
    return ScalarField(T.grid, total / 4)


@dataclass(frozen=True)
class HoelderReport:
    r: float
    lhs: float
    rhs: float
    holds: bool


def check_hoelder(S: OperatorField, T: OperatorField, p: float, q: float) -> HoelderReport:
    """Compare ``||ST||_r`` with ``||S||_p ||T||_q`` where ``1/r = 1/p + 1/q``.

    The slack is scaled by ``max(1, ||S|| ||T||)`` so that inputs of any size
    are compared as if normalized to unit operator norm.
    """
    _check_p(p)
    _check_p(q)
    inv_r = 1.0 / p + 1.0 / q
    if inv_r > 1.0 + 1e-15:
        raise BadExponent(f"1/p + 1/q = {inv_r} exceeds 1; r would be < 1")
    r = 1.0 / inv_r
    lhs = schatten_norm(compose(S, T), r)
    rhs = schatten_norm(S, p) * schatten_norm(T, q)
    scale = max(1.0, operator_sup_norm(S) * operator_sup_norm(T))
    return HoelderReport(r, lhs, rhs, bool(lhs <= rhs + INEQUALITY_SLACK * scale))


def check_trace_cyclic(S: OperatorField, T: OperatorField) -> float:
    """``sup_x |tr(ST)(x) - tr(TS)(x)|``."""
    _check_pair(S, T)
    return (trace_field(compose(S, T)) - trace_field(compose(T, S))).sup_norm()


@dataclass(frozen=True)
class OrderIdealReport:
    holds: bool
    margin: float  # min_x (tr|T|^p - tr|S|^p)(x)


def check_order_ideal(S: OperatorField, T: OperatorField, p: float) -> OrderIdealReport:
    """Given ``|S|^p <= |T|^p`` pointwise, verify ``tr|S|^p <= tr|T|^p`` pointwise.

    Raises
    ------
    PreconditionFailed
        If ``|T|^p - |S|^p`` has an eigenvalue below ``-1e-10`` somewhere.
    """
    _check_p(p)
    _check_pair(S, T)
    Sp, Tp = abs_power(S, p), abs_power(T, p)
    gap = Tp - Sp
    min_eig = np.linalg.eigvalsh(gap.hermitian_part().matrices).min()
    if min_eig < -POSITIVITY_TOL:
        raise PreconditionFailed(f"|S|^p <= |T|^p fails: eigenvalue {min_eig:.3e}")
    diff = (trace_field(Tp) - trace_field(Sp)).values.real
    margin = float(diff.min())
    return OrderIdealReport(bool(margin >= -INEQUALITY_SLACK), margin)


def adjoint_norm_gap(T: OperatorField, p: float) -> float:
    """``sup_x | ||T*(x)||_p - ||T(x)||_p |`` (zero in exact arithmetic)."""
    return (schatten_norm_field(adjoint(T), p) - schatten_norm_field(T, p)).sup_norm()
