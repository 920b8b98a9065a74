"""Desk-scale unbounded cycles and their summability data.

Four models are built here:

* the circle crossed product: Fourier modes ``k = -n..n`` over a base grid,
  ``D = diag(k)``, the shift ``U: k -> k+1`` and ``rho(f u_k) = f U^k``;
* the sphere embedding: one-dimensional fibers over ``S^n x (-eps, eps)``
  with ``S`` = multiplication by ``f(s) = a tan(a s)``, ``a = pi / (2 eps)``;
* the index cycle: a finite-difference model of the Dirac-type operator
  ``[[0, B], [B*, 0]]`` with ``B = -i(d/ds + f)`` on ``(-eps, eps)``;
* a product fibration: the circle operator on every fiber, optionally
  perturbed by an ``x``-dependent bounded potential.

A cycle exposes the singular values of its operator at a requested
truncation depth and, where known, a closed form for the omitted tail of
``sum (1 + sigma^2)^(-p/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import mpmath
import numpy as np
from scipy import integrate, special

from .base import Grid, ScalarField
from .errors import BadDomain, BadExponent, GridTooCoarse, NotCommuting, NotPositive
from .opfield import POSITIVITY_TOL, OperatorField, fiber_norms, functional_calculus, pos_power
from .schatten import trace_field
from .zeta import residue_estimate

CAUCHY_TOL = 1e-6
COMMUTING_TOL = 1e-10
MIN_INDEX_POINTS = 16
EULER_MACLAURIN_CUTOFF = 1000


# --------------------------------------------------------------------------
# generic cycle container


@dataclass(frozen=True, eq=False)
class KKCycle:
    """An operator ``S`` over a base grid, described through its singular values.

    Parameters
    ----------
    singular_values : callable
        ``depth -> array (grid size, count)`` of singular values of ``S``
        restricted to the first ``depth`` modes; ``np.inf`` marks a fiber
        where ``S`` is infinite (the resolvent vanishes there).
    tail : callable, optional
        ``(p, depth) -> sum of (1 + sigma^2)^(-p/2)`` over the omitted modes,
        a bound uniform in ``x``; ``math.inf`` for a divergent tail.
    """

    label: str
    grid: Grid
    claimed_summability: float
    singular_values: Callable[[int], np.ndarray]
    default_depth: int
    tail: Optional[Callable[[float, int], float]] = None
    operator: Optional[OperatorField] = None
    data: Mapping = field(default_factory=dict)

    def resolvent_values(self, depth: Optional[int] = None) -> np.ndarray:
        """Singular values ``(1 + sigma^2)^(-1/2)`` of the bounded transform."""
        s = np.asarray(self.singular_values(self.default_depth if depth is None else depth), dtype=float)
        with np.errstate(over="ignore"):
            return 1.0 / np.sqrt(1.0 + s * s)

    def resolvent_power_sum(self, p: float, depth: Optional[int] = None) -> np.ndarray:
        """``x -> sum_k (1 + sigma_k(x)^2)^(-p/2)`` over the retained modes."""
        return np.sum(self.resolvent_values(depth) ** p, axis=1)

    def resolvent_norm_field(self, p: float, depth: Optional[int] = None) -> ScalarField:
        return ScalarField(self.grid, self.resolvent_power_sum(p, depth) ** (1.0 / p))

    def localize(self, x_index: int) -> "KKCycle":
        """The cycle restricted to one point of the base (a spectral triple)."""
        x = self.grid.check_index(x_index)
        op = None
        if self.operator is not None:
            op = OperatorField(Grid.point(), self.operator.matrices[x:x + 1])
        return KKCycle(
            f"{self.label}@{x}",
            Grid.point(),
            self.claimed_summability,
            lambda depth: np.asarray(self.singular_values(depth))[x:x + 1],
            self.default_depth,
            self.tail,
            op,
            dict(self.data),
        )


def spot_check_tail(cycle: KKCycle, p: float, depths: Sequence[int], horizon: int = 4) -> bool:
    """Check that ``tail(p, d)`` dominates the generated terms between ``d`` and ``horizon * d``."""
    if cycle.tail is None:
        return False
    for d in depths:
        generated = np.max(cycle.resolvent_power_sum(p, horizon * d) - cycle.resolvent_power_sum(p, d))
        if cycle.tail(p, d) + 1e-12 < generated:
            return False
    return True


# --------------------------------------------------------------------------
# summability


@dataclass(frozen=True)
class SummabilityReport:
    p: float
    resolvent_norm_field: ScalarField
    tail_model: float
    verdict: str  # "summable" | "not_summable" | "inconclusive"
    depths: tuple
    partial_sums: np.ndarray  # sup_x truncated power sums per depth
    completed_sums: np.ndarray  # partial + tail per depth
    decay_exponent: float

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "p": self.p,
            "verdict": self.verdict,
            "tail_model": None if math.isinf(self.tail_model) else self.tail_model,
            "tail_finite": not math.isinf(self.tail_model),
            "decay_exponent": None if math.isnan(self.decay_exponent) else self.decay_exponent,
            "depths": list(self.depths),
            "partial_sums": [float(v) for v in self.partial_sums],
            "completed_sums": [None if math.isinf(v) else float(v) for v in self.completed_sums],
            "resolvent_norm_sup": float(np.max(self.resolvent_norm_field.values.real)),
        }

    def partial_sum_rows(self) -> List[tuple]:
        return [(d, s, c) for d, s, c in zip(self.depths, self.partial_sums, self.completed_sums)]


def _decay_exponent(depths: np.ndarray, edges: np.ndarray) -> float:
    ok = edges > 0
    if ok.sum() < 2:
        return math.nan
    slope = np.polyfit(np.log(depths[ok]), np.log(edges[ok]), 1)[0]
    return float(-slope)


def summability_report(
    cycle: KKCycle, p: float, truncation_depths: Optional[Sequence[int]] = None, tol: float = CAUCHY_TOL
) -> SummabilityReport:
    """p-summability diagnostics of ``(1 + S^2)^(-1/2)`` across truncation depths.

    The verdict is ``summable`` when the closed-form tail is finite and the
    completed sums (truncated sum plus tail) at the last two depths agree to
    ``tol`` uniformly in ``x``. Otherwise the decay exponent ``beta`` of the
    edge term (the smallest retained ``(1+sigma^2)^(-p/2)``) is fitted
    against depth; ``beta <= 1`` gives ``not_summable``, anything else
    ``inconclusive``.
    """
    if not p > 0:
        raise BadExponent(f"summability exponent must be positive, got {p}")
    depths = list(truncation_depths) if truncation_depths else [cycle.default_depth]
    if len(depths) == 1:
        depths.append(2 * depths[0])
    depths = sorted(set(int(d) for d in depths))
    partial, completed, edges = [], [], []
    tails = []
    last_field = None
    for d in depths:
        vals = cycle.resolvent_values(d) ** p
        sums = vals.sum(axis=1)
        tail = math.inf if cycle.tail is None else float(cycle.tail(p, d))
        tails.append(tail)
        partial.append(sums)
        completed.append(sums + tail)
        finite = np.where(vals > 0, vals, np.inf).min(axis=1)
        edges.append(float(np.max(np.where(np.isinf(finite), 0.0, finite))))
        last_field = sums
    tail_model = tails[-1]
    gap = float(np.max(np.abs(completed[-1] - completed[-2]))) if not math.isinf(tail_model) else math.inf
    beta = _decay_exponent(np.array(depths, dtype=float), np.array(edges))
    if not math.isinf(tail_model) and gap < tol:
        verdict = "summable"
    elif not math.isnan(beta) and beta <= 1.0:
        verdict = "not_summable"
    else:
        verdict = "inconclusive"
    norm_field = ScalarField(cycle.grid, last_field ** (1.0 / p))
    return SummabilityReport(
        float(p),
        norm_field,
        tail_model,
        verdict,
        tuple(depths),
        np.array([np.max(s) for s in partial]),
        np.array([np.max(c) for c in completed]),
        beta,
    )


# --------------------------------------------------------------------------
# circle crossed product


def resolvent_tail(p: float, depth: int) -> float:
    """``2 sum_(k > depth) (1 + k^2)^(-p/2)``; infinite for ``p <= 1``.

    The sum is explicit up to a cutoff and Euler-Maclaurin beyond it
    (integral, half-endpoint and first-derivative corrections).
    """
    if p <= 1:
        return math.inf
    cutoff = max(depth, EULER_MACLAURIN_CUTOFF)
    k = np.arange(depth + 1, cutoff + 1, dtype=float)
    explicit = np.sum((1.0 + k * k) ** (-p / 2))
    g = lambda x: (1.0 + x * x) ** (-p / 2)
    dg = -p * cutoff * (1.0 + cutoff * cutoff) ** (-p / 2 - 1)
    integral, _ = integrate.quad(g, cutoff, np.inf, epsabs=1e-15, epsrel=1e-13, limit=200)
    return float(2.0 * (explicit + integral - g(cutoff) / 2 - dg / 12))


def hurwitz_tail(z: complex, depth: int) -> complex:
    """``2 sum_(k > depth) k^(-z) = 2 zeta_H(z, depth + 1)`` for ``Re z > 1``."""
    z = complex(z)
    if z.real <= 1:
        return complex(math.inf)
    if z.imag == 0:
        return complex(2.0 * special.zeta(z.real, depth + 1.0))
    return complex(2 * mpmath.zeta(z, depth + 1))


def circle_crossed_product_cycle(X_grid: Grid, n_modes: int) -> KKCycle:
    """The circle Dirac operator ``D = diag(k)``, ``k = -n..n``, constant over ``X``."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")

    def sv(depth: int) -> np.ndarray:
        k = np.abs(np.arange(-depth, depth + 1, dtype=float))
        return np.tile(k, (X_grid.size, 1))

    return KKCycle(
        "circle", X_grid, 1.0, sv, n_modes, resolvent_tail, None, {"n_modes": n_modes}
    )


def circle_modes(depth: int) -> np.ndarray:
    return np.arange(-depth, depth + 1)


def circle_dirac(depth: int) -> np.ndarray:
    """``D`` on the modes ``-depth..depth`` as a dense diagonal matrix."""
    return np.diag(circle_modes(depth).astype(complex))


def circle_shift(depth: int, power: int = 1) -> np.ndarray:
    """Truncated ``U^power``: ``u_k -> u_(k+power)``, dropped outside the window."""
    n = 2 * depth + 1
    return np.eye(n, k=-power, dtype=complex)


def circle_representation(cycle: KKCycle, f: ScalarField, power: int, depth: Optional[int] = None) -> OperatorField:
    """``rho(f u_power) = f U^power`` as an operator field on the truncated modes."""
    depth = cycle.data["n_modes"] if depth is None else depth
    U = circle_shift(depth, power)
    return OperatorField(cycle.grid, f.values[:, None, None] * U[None])


def circle_abs_power(depth: int, z: complex) -> np.ndarray:
    """``|D|^(-z)`` with the zero mode removed."""
    k = np.abs(circle_modes(depth)).astype(float)
    d = np.zeros(k.size, dtype=complex)
    nz = k > 0
    d[nz] = np.exp(-complex(z) * np.log(k[nz]))
    return np.diag(d)


def circle_zeta(cycle: KKCycle, z: complex, depth: Optional[int] = None, with_tail: bool = True) -> ScalarField:
    """``tr |D|^(-z)`` over the nonzero modes (constant in ``x``).

    With ``with_tail`` the omitted modes contribute ``2 zeta_H(z, depth+1)``.
    """
    depth = cycle.data["n_modes"] if depth is None else depth
    k = np.arange(1, depth + 1, dtype=float)
    z = complex(z)
    value = 2.0 * np.sum(np.exp(-z * np.log(k)))
    if with_tail:
        value = value + hurwitz_tail(z, depth)
    return ScalarField.constant(cycle.grid, value)


def localized_zeta_trace(cycle: KKCycle, f: ScalarField, power: int, z: complex, depth: int = 32) -> ScalarField:
    """``tr(f U^power |D|^(-z))`` by explicit matrices at a modest depth."""
    A = circle_representation(cycle, f, power, depth)
    Dz = circle_abs_power(depth, z)
    return trace_field(OperatorField(cycle.grid, A.matrices @ Dz[None]))


def localized_zeta(cycle: KKCycle, f: ScalarField, power: int, z: complex, depth: Optional[int] = None) -> ScalarField:
    """``zeta_D(f u_power, z)``: ``f`` times ``tr |D|^(-z)`` for ``power = 0``, else zero."""
    if power != 0:
        return ScalarField.constant(cycle.grid, 0.0)
    return f * circle_zeta(cycle, z, depth, with_tail=True)


def circle_residue(cycle: KKCycle, f: ScalarField, nodes: Sequence[float] = (1.5, 1.25, 1.125)) -> ScalarField:
    """Residue at ``z = 1`` of ``zeta_D(f u_0, z)``; equals ``2 f`` in closed form."""
    samples = [(z, localized_zeta(cycle, f, 0, z)) for z in nodes]
    return residue_estimate(samples, 1.0)


def commutator_norms(cycle: KKCycle, f: ScalarField, power: int, depth: Optional[int] = None) -> Dict[str, float]:
    """``sup_x ||[D, f U^power](x)||`` against ``|power| sup|f|``."""
    depth = cycle.data["n_modes"] if depth is None else depth
    D = circle_dirac(depth)
    A = circle_representation(cycle, f, power, depth).matrices
    comm = D[None] @ A - A @ D[None]
    measured = float(fiber_norms(comm, "operator").max())
    exact_gap = float(np.max(np.abs(comm - power * A)))
    return {"measured": measured, "expected": abs(power) * f.sup_norm(), "gap_to_kUk": exact_gap}


@dataclass(frozen=True)
class ResidueProportionality:
    constants: np.ndarray  # least-squares residue / f ratio per test function
    spread: float  # (max - min) / |mean| of the constants
    pointwise_error: float  # sup |res - c f| / sup |f|, worst over functions


def residue_proportionality(cycle: KKCycle, test_functions: Sequence[ScalarField]) -> ResidueProportionality:
    """Check that the residue field is one global constant times ``f``."""
    consts, errs = [], []
    for f in test_functions:
        res = circle_residue(cycle, f).values
        fv = f.values
        c = np.vdot(fv, res) / np.vdot(fv, fv)
        consts.append(c)
        errs.append(np.max(np.abs(res - c * fv)) / np.max(np.abs(fv)))
    consts = np.array(consts)
    mean = np.mean(consts)
    spread = float((np.max(consts.real) - np.min(consts.real)) / abs(mean)) if abs(mean) > 0 else math.inf
    return ResidueProportionality(consts, spread, float(max(errs)))


# --------------------------------------------------------------------------
# sphere embedding


def tan_profile(s: np.ndarray, eps: float) -> np.ndarray:
    """``f(s) = a tan(a s)`` with ``a = pi / (2 eps)``."""
    a = np.pi / (2 * eps)
    return a * np.tan(a * np.asarray(s, dtype=float))


def sphere_embedding_cycle(eps: float, s_grid_size: int, sphere_grid: Grid, s_values=None) -> KKCycle:
    """Multiplication by ``f(s)`` on one-dimensional fibers over ``S^n x (-eps, eps)``.

    The base is compactified by a point at infinity joined to the outermost
    ``s`` samples, with distance ``eps - |s|``; ``S`` is infinite there and
    the bounded transform vanishes.

    Raises
    ------
    BadDomain
        If some ``|s| >= eps``.
    """
    if eps <= 0:
        raise BadDomain("eps must be positive")
    if s_values is None:
        if s_grid_size < 2:
            raise ValueError("need at least two s samples")
        s_values = -eps + 2 * eps * np.arange(1, s_grid_size + 1) / (s_grid_size + 1)
    s_values = np.asarray(s_values, dtype=float)
    if np.any(np.abs(s_values) >= eps):
        raise BadDomain(f"s samples must satisfy |s| < eps = {eps}")
    s_grid = Grid.from_points(s_values[:, None], neighbors=1)
    base = Grid.product(sphere_grid, s_grid)
    s_all = np.tile(s_values, sphere_grid.size)
    edge = np.flatnonzero(np.isin(s_all, [s_values.min(), s_values.max()]))
    grid = base.compactify(edge, eps - np.abs(s_all))
    f = np.concatenate([tan_profile(s_all, eps), [np.inf]])
    sv_all = np.abs(f)[:, None]
    finite = np.isfinite(f)
    op = OperatorField(grid, np.where(finite, f, 0.0)[:, None, None].astype(complex))
    return KKCycle(
        "sphere",
        grid,
        0.0,
        lambda depth: sv_all,
        1,
        lambda p, depth: 0.0,
        op,
        {"eps": eps, "s": np.concatenate([s_all, [np.nan]]), "f": f},
    )


def sphere_resolvent(cycle: KKCycle) -> OperatorField:
    """``(1 + S^2)^(-1)`` as a 1x1 field; zero at the point at infinity."""
    f = cycle.data["f"]
    with np.errstate(over="ignore"):
        r = np.where(np.isfinite(f), 1.0 / (1.0 + np.where(np.isfinite(f), f, 0.0) ** 2), 0.0)
    return OperatorField(cycle.grid, r[:, None, None].astype(complex))


def sphere_trace_field(cycle: KKCycle, p: float) -> ScalarField:
    """``tr (1 + S^2)^(-p/2)`` by functional calculus on the resolvent field."""
    if not p > 0:
        raise BadExponent(f"p must be positive, got {p}")
    return trace_field(pos_power(sphere_resolvent(cycle), p / 2)).real


def sphere_closed_form(cycle: KKCycle, p: float) -> ScalarField:
    """``(1 + f^2)^(-p/2)``, zero at infinity."""
    f = cycle.data["f"]
    fin = np.isfinite(f)
    vals = np.zeros(f.size)
    vals[fin] = (1.0 + f[fin] ** 2) ** (-p / 2)
    return ScalarField(cycle.grid, vals)


# --------------------------------------------------------------------------
# index cycle


def index_cycle(eps: float = 1.0, N: int = 256) -> KKCycle:
    """Finite-difference model of ``T = [[0, B], [B*, 0]]``, ``B = -i(d/ds + f)``.

    The derivative is the forward difference on ``N`` interior points of
    ``(-eps, eps)`` with Dirichlet ends, i.e. a central difference about the
    half-grid points; ``f`` is sampled at the grid points. ``T`` is a
    single ``2N x 2N`` Hermitian fiber over a one-point base.

    Raises
    ------
    GridTooCoarse
        If ``N < 16``.
    """
    if N < MIN_INDEX_POINTS:
        raise GridTooCoarse(f"need N >= {MIN_INDEX_POINTS} interior points, got {N}")
    if eps <= 0:
        raise BadDomain("eps must be positive")
    h = 2 * eps / (N + 1)
    s = -eps + h * np.arange(1, N + 1)
    f = tan_profile(s, eps)
    D = (np.eye(N, k=1) - np.eye(N)) / h
    B = -1j * (D + np.diag(f))
    T = np.zeros((2 * N, 2 * N), dtype=complex)
    T[:N, N:] = B
    T[N:, :N] = B.conj().T
    grid = Grid.point()
    op = OperatorField(grid, T[None])
    sigma = np.sort(np.abs(np.linalg.eigvalsh(T)))

    def sv(depth: int) -> np.ndarray:
        return sigma[None, : min(depth, sigma.size)]

    return KKCycle("index", grid, 1.0, sv, sigma.size, None, op, {"eps": eps, "N": N, "h": h, "s": s, "f": f, "sigma": sigma})


def dirichlet_laplacian(n: int, h: float) -> np.ndarray:
    """Three-point Dirichlet Laplacian ``-d^2/ds^2`` on ``n`` points of spacing ``h``."""
    return (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h ** 2


@dataclass(frozen=True)
class IndexCycleReport:
    hermitian_gap: float
    symmetry_gap: float  # spectrum vs its negative
    minmax_holds: bool
    minmax_margin: float
    comparison_constant: float
    p2_last_increment: float
    p2_cauchy: bool
    p1_slope: float
    p1_reference_slope: float
    p1_relative_error: float

    @property
    def p1_slope_ok(self) -> bool:
        return self.p1_relative_error < 0.2

    @property
    def passed(self) -> bool:
        return (
            self.hermitian_gap < 1e-12
            and self.symmetry_gap < 1e-8
            and self.minmax_holds
            and self.p2_cauchy
            and self.p1_slope_ok
        )


def index_cycle_checks(cycle: KKCycle, window: float = 0.25, cauchy_tol: float = 1e-4) -> IndexCycleReport:
    """Spectral comparisons for the index cycle in the faithful low window.

    * min-max: ``lambda_n(T^2) <= lambda_n(Delta_(eps/2) (+) Delta_(eps/2)) + c``
      on the lowest ``window`` fraction of modes, ``c = f(eps/2)^2 + |f'(eps/2)|``;
    * p = 2: the last increment of ``sum (1 + sigma_n^2)^(-1)`` is below ``cauchy_tol``;
    * p = 1: partial sums of ``(1 + sigma_n^2)^(-1/2)`` grow like ``(2/a) log n``
      (each continuum singular value ``a sqrt(n^2-1)`` is doubly degenerate).
    """
    T = cycle.operator.matrices[0]
    eps, h, s = cycle.data["eps"], cycle.data["h"], cycle.data["s"]
    a = np.pi / (2 * eps)
    herm = float(np.max(np.abs(T - T.conj().T)))
    w = np.linalg.eigvalsh(T)
    sym = float(np.max(np.abs(np.sort(w) - np.sort(-w))))
    ev = np.sort(np.linalg.eigvalsh(T @ T))
    inner = np.abs(s) < eps / 2
    lap = np.linalg.eigvalsh(dirichlet_laplacian(int(inner.sum()), h))
    lap2 = np.sort(np.concatenate([lap, lap]))
    c = float(tan_profile(eps / 2, eps) ** 2 + abs(a * a / np.cos(a * eps / 2) ** 2))
    M = ev.size
    k = min(int(window * M), lap2.size)
    margin = float(np.min(lap2[:k] + c - ev[:k]))
    sigma = np.sort(np.abs(w))
    inc2 = 1.0 / (1.0 + sigma ** 2)
    last2 = float(inc2[-1])
    partial1 = np.cumsum(1.0 / np.sqrt(1.0 + sigma ** 2))
    m = np.arange(1, M + 1)
    sel = slice(8, M // 4)
    slope = float(np.polyfit(np.log(m[sel]), partial1[sel], 1)[0])
    ref = 2.0 / a
    return IndexCycleReport(
        herm, sym, margin >= 0.0, margin, c, last2, last2 < cauchy_tol, slope, ref, abs(slope - ref) / ref
    )


# --------------------------------------------------------------------------
# product fibration


def trivial_fibration_cycle(X_grid: Grid, n_modes: int, potential: Optional[OperatorField] = None) -> KKCycle:
    """The circle operator on every fiber, ``D_x = D + B(x)``.

    Without ``potential`` the family is constant in ``x`` and shares the
    circle cycle's closed-form tail.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    D = circle_dirac(n_modes)
    mats = np.tile(D, (X_grid.size, 1, 1))
    if potential is not None:
        if potential.dim != D.shape[0] or potential.grid.size != X_grid.size:
            raise ValueError("potential must be a field of (2 n_modes + 1)-square matrices on X")
        if not potential.is_hermitian(1e-12):
            raise ValueError("potential must be Hermitian")
        mats = mats + potential.matrices
    op = OperatorField(X_grid, mats)
    center = n_modes

    def sv(depth: int) -> np.ndarray:
        depth = min(depth, n_modes)
        window = op.matrices[:, center - depth:center + depth + 1, center - depth:center + depth + 1]
        return np.sort(np.abs(np.linalg.eigvalsh(window)), axis=1)

    tail = resolvent_tail if potential is None else None
    return KKCycle("fibration", X_grid, 1.0, sv, n_modes, tail, op, {"n_modes": n_modes})


def fiber_resolvents(cycle: KKCycle) -> np.ndarray:
    """``(D_x + i)^(-1)`` for every fiber."""
    mats = cycle.operator.matrices
    return np.linalg.inv(mats + 1j * np.eye(mats.shape[1])[None])


@dataclass(frozen=True)
class FibrationContinuity:
    norm_field: ScalarField  # x -> ||(D_x + i)^(-1)||_p
    modulus: float  # discrete Lipschitz modulus of norm_field
    increments: np.ndarray  # ||R_x - R_x'||_p per adjacent pair
    bounds: np.ndarray  # ||R_x||_p ||B(x) - B(x')|| per adjacent pair
    holds: bool


def fibration_continuity(cycle: KKCycle, p: float) -> FibrationContinuity:
    """Resolvent-identity check ``||R_x - R_x'||_p <= ||R_x||_p ||D_x - D_x'||`` on adjacent pairs."""
    R = fiber_resolvents(cycle)
    norms = fiber_norms(R, "schatten", p)
    adj = cycle.grid.adjacency
    mats = cycle.operator.matrices
    if adj.size == 0:
        return FibrationContinuity(ScalarField(cycle.grid, norms), 0.0, np.zeros(0), np.zeros(0), True)
    i, j = adj[:, 0], adj[:, 1]
    inc = fiber_norms(R[i] - R[j], "schatten", p)
    bnd = norms[i] * fiber_norms(mats[i] - mats[j], "operator")
    d = cycle.grid.distances[i, j]
    modulus = float(np.max(np.abs(norms[i] - norms[j]) / d))
    return FibrationContinuity(ScalarField(cycle.grid, norms), modulus, inc, bnd, bool(np.all(inc <= bnd + 1e-12)))


# --------------------------------------------------------------------------
# external product


@dataclass(frozen=True)
class ExternalProductReport:
    holds: bool
    margin: float


def _commutator_gap(a: OperatorField, b: OperatorField) -> float:
    A, B = a.matrices, b.matrices
    return float(np.max(fiber_norms(A @ B - B @ A, "operator"), initial=0.0))


def external_product_check(a: OperatorField, b: OperatorField, p: float, q: float) -> ExternalProductReport:
    """``(1+a+b)^(-p-q) <= (1+a)^(-p/2) (1+b)^(-q) (1+a)^(-p/2)`` for commuting ``a, b >= 0``.

    ``margin`` is the smallest eigenvalue of right minus left side over the grid.

    Raises
    ------
    NotCommuting
        If ``||[a(x), b(x)]|| >= 1e-10`` somewhere.
    NotPositive
        If ``a`` or ``b`` has an eigenvalue below ``-1e-10``.
    """
    if not (p > 0 and q > 0):
        raise BadExponent("p and q must be positive")
    for name, c in (("a", a), ("b", b)):
        w = np.linalg.eigvalsh(c.hermitian_part().matrices)
        if w.min() < -POSITIVITY_TOL or not c.is_hermitian(1e-10):
            raise NotPositive(f"{name} is not positive semidefinite")
    if _commutator_gap(a, b) >= COMMUTING_TOL:
        raise NotCommuting("a and b do not commute pointwise")
    one = OperatorField.identity(a.grid, a.dim)
    lhs = functional_calculus(one + a + b, lambda w: np.maximum(w, 1.0) ** (-(p + q)))
    half = functional_calculus(one + a, lambda w: np.maximum(w, 1.0) ** (-p / 2))
    mid = functional_calculus(one + b, lambda w: np.maximum(w, 1.0) ** (-q))
    rhs = half @ mid @ half
    gap = (rhs - lhs).hermitian_part().matrices
    margin = float(np.linalg.eigvalsh(gap).min())
    return ExternalProductReport(bool(margin >= -1e-9), margin)
