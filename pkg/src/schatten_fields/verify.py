"""Seeded property suites shared by ``verify-all`` and the acceptance tests.

Every suite returns a :class:`SuiteResult`; a failing case is recorded with
the name of the result it contradicts so that reports are self-describing.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import approx, cycles, fredholm, frames, schatten, zeta
from .base import Grid, ScalarField
from .opfield import fiber_norms, pos_power
from .sampling import (
    make_rng,
    near_singular_field,
    normalize_operator_norm,
    random_commuting_positive_pair,
    random_contraction,
    random_field,
    random_module_operator,
    random_projection_field,
    scale_to_trace_norm,
)

THREADS_ENV = "SCHATTEN_FIELDS_THREADS"


@dataclass
class SuiteResult:
    name: str
    anchor: str
    cases: int = 0
    failures: List[dict] = field(default_factory=list)
    metrics: Dict[str, float] = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, case, **detail) -> None:
        self.failures.append({"suite": self.name, "anchor": self.anchor, "case": case, **detail})

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extras = ", ".join(f"{k}={v:.3g}" for k, v in sorted(self.metrics.items()))
        return f"[{status}] {self.name} ({self.cases} cases, {self.seconds:.2f}s) {extras}"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "passed": self.passed,
            "cases": self.cases,
            "metrics": {k: (None if not math.isfinite(v) else float(v)) for k, v in self.metrics.items()},
            "failures": self.failures,
        }


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        return result

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _grid(grid_size: int) -> Grid:
    return Grid.interval(0.0, 1.0, grid_size)


def _rank(rng, dim):
    return int(rng.integers(max(1, dim // 2), dim)) if dim > 1 else 1


# ---------------------------------------------------------------------------
# Schatten classes and frames


@_timed
def frame_trace_suite(seed=0, dim=8, grid_size=16, trials=100, ps=(1, 2, 3), tol=1e-9) -> SuiteResult:
    """Frame series ``sum <e_i, |T|^p e_i>`` against the SVD trace of ``|T|^p``."""
    res = SuiteResult("frame-trace-identity", "frame-series-equals-svd-trace")
    grid = _grid(grid_size)
    worst = 0.0
    for t in range(trials):
        rng = make_rng(seed, 1, t)
        spec = random_projection_field(grid, dim, _rank(rng, dim), rng)
        T = random_module_operator(spec, rng)
        frame = frames.projected_frame(spec)
        for p in ps:
            series = frames.frame_trace_series(T, frame, p).value.values
            svd = schatten.schatten_norm_field(T, p).values ** p
            err = float(np.max(np.abs(series - svd)))
            worst = max(worst, err)
            res.cases += 1
            if not err < tol:
                res.fail(t, p=p, error=err)
    res.metrics["max_error"] = worst
    return res


def pou_refinement(frame: frames.Frame, grid: Grid, centers: int = 4) -> frames.Frame:
    idx = np.linspace(0, grid.size - 1, centers).round().astype(int)
    width = 1.6 * grid.diameter / max(centers - 1, 1)
    return frames.refine_frame(frame, frames.partition_of_unity(grid, idx, width))


@_timed
def frame_independence_suite(seed=0, dim=8, grid_size=16, trials=20, p=1, tol=1e-8) -> SuiteResult:
    """Projected-basis frame against a partition-of-unity refinement."""
    res = SuiteResult("frame-independence", "frame-trace-independent-of-frame")
    grid = _grid(grid_size)
    worst = 0.0
    for t in range(trials):
        rng = make_rng(seed, 2, t)
        spec = random_projection_field(grid, dim, _rank(rng, dim), rng)
        T = random_module_operator(spec, rng)
        base = frames.projected_frame(spec)
        refined = pou_refinement(base, grid)
        for q in (p, 2):
            a = frames.frame_trace_series(T, base, q).value.values
            b = frames.frame_trace_series(T, refined, q).value.values
            err = float(np.max(np.abs(a - b)))
            worst = max(worst, err)
            res.cases += 1
            if not err < tol:
                res.fail(t, p=q, error=err)
        hs = schatten.hs_inner(T, T).values
        hs_frame = frames.hs_via_frame(T, T, refined).values
        if not np.max(np.abs(hs - hs_frame)) < 1e-9:
            res.fail(t, check="hilbert-schmidt-via-frame", error=float(np.max(np.abs(hs - hs_frame))))
    res.metrics["max_error"] = worst
    return res


@_timed
def hoelder_suite(seed=0, dim=8, grid_size=16, trials=100, pairs=((2, 2), (3, 1.5), (4, 4 / 3))) -> SuiteResult:
    """``||ST||_r <= ||S||_p ||T||_q`` with ``1/r = 1/p + 1/q``."""
    res = SuiteResult("hoelder-von-neumann", "pointwise-hoelder-inequality")
    grid = _grid(grid_size)
    worst = -math.inf
    for pi, (p, q) in enumerate(pairs):
        for t in range(trials):
            rng = make_rng(seed, 3, pi, t)
            S, T = random_field(grid, dim, rng), random_field(grid, dim, rng)
            rep = schatten.check_hoelder(S, T, p, q)
            worst = max(worst, rep.lhs - rep.rhs)
            res.cases += 1
            if not rep.holds:
                res.fail(t, p=p, q=q, lhs=rep.lhs, rhs=rep.rhs)
    res.metrics["max_lhs_minus_rhs"] = worst
    return res


@_timed
def truncation_suite(seed=0, dim=8, grid_size=16, trials=100, ps=(1, 2, 4)) -> SuiteResult:
    """``||T_m - T_n||_p`` against the a priori truncation bounds, all ``n < m <= dim``."""
    res = SuiteResult("truncation-bound", "uniform-completion-of-matrix-fields")
    grid = _grid(grid_size)
    worst = -math.inf
    for t in range(trials):
        rng = make_rng(seed, 4, t)
        T = random_field(grid, dim, rng)
        for p in ps:
            for b in approx.truncation_bound_table(T, p, check=False):
                res.cases += 1
                worst = max(worst, b.measured - b.bound)
                if b.measured > b.bound + approx.BOUND_SLACK:
                    res.fail(t, p=p, n=b.n, m=b.m, measured=b.measured, bound=b.bound)
    res.metrics["max_measured_minus_bound"] = worst
    return res


@_timed
def corner_suite(seed=0, dim=8, grid_size=16, trials=100, ps=(2, 3, 4)) -> SuiteResult:
    """``||Te||_p^p <= tr e|T|^p e`` for every coordinate block ``e``."""
    res = SuiteResult("corner-bound", "schatten-norm-of-truncated-operator")
    grid = _grid(grid_size)
    worst = -math.inf
    for t in range(trials):
        rng = make_rng(seed, 5, t)
        T = random_field(grid, dim, rng)
        a = int(rng.integers(0, dim - 1)) if dim > 1 else 0
        b = int(rng.integers(a + 1, dim + 1))
        for p in ps:
            for rng_ in ((0, min(2, dim)), (a, b)):
                rep = approx.truncated_corner_bound(T, rng_, p)
                worst = max(worst, rep.lhs - rep.rhs)
                res.cases += 1
                if not rep.holds:
                    res.fail(t, p=p, block=list(rng_), lhs=rep.lhs, rhs=rep.rhs)
    res.metrics["max_lhs_minus_rhs"] = worst
    return res


@_timed
def cyclicity_suite(seed=0, dim=8, grid_size=16, trials=100, tol=1e-9) -> SuiteResult:
    """``tr(ST) = tr(TS)`` pointwise on noncommuting pairs."""
    res = SuiteResult("trace-cyclicity", "trace-of-product-is-symmetric")
    grid = _grid(grid_size)
    worst = 0.0
    for t in range(trials):
        rng = make_rng(seed, 6, t)
        S = normalize_operator_norm(random_field(grid, dim, rng))
        T = normalize_operator_norm(random_field(grid, dim, rng))
        gap = schatten.check_trace_cyclic(S, T)
        worst = max(worst, gap)
        res.cases += 1
        if not gap < tol:
            res.fail(t, residual=gap)
    res.metrics["max_residual"] = worst
    return res


# ---------------------------------------------------------------------------
# Fredholm determinant


@_timed
def det_triple_suite(seed=0, dim=8, grid_size=16, trials=50, trace_norm=0.4, terms=40, tol=1e-8) -> SuiteResult:
    """Spectral product, exterior series and log series pairwise."""
    res = SuiteResult("determinant-triple-agreement", "fredholm-determinant-series")
    grid = _grid(grid_size)
    worst = 0.0
    for t in range(trials):
        rng = make_rng(seed, 7, t)
        T = scale_to_trace_norm(random_field(grid, dim, rng), trace_norm)
        a = fredholm.det_field(T).values
        b = fredholm.det_exterior_series(T, dim).value.values
        c = fredholm.det_log_series(T, 1.0, terms).values
        err = float(max(np.max(np.abs(a - b)), np.max(np.abs(a - c)), np.max(np.abs(b - c))))
        worst = max(worst, err)
        res.cases += 1
        if not err < tol:
            res.fail(t, error=err)
    res.metrics["max_error"] = worst
    return res


@_timed
def det_multiplicative_suite(seed=0, dim=8, grid_size=16, trials=50, tol=1e-8) -> SuiteResult:
    """Multiplicativity and the Lipschitz estimate on seeded pairs."""
    res = SuiteResult("determinant-multiplicative-lipschitz", "determinant-multiplicativity")
    grid = _grid(grid_size)
    worst_mult, worst_lip = 0.0, -math.inf
    for t in range(trials):
        rng = make_rng(seed, 8, t)
        S = normalize_operator_norm(random_field(grid, dim, rng))
        T = normalize_operator_norm(random_field(grid, dim, rng))
        r = fredholm.check_det_multiplicative(S, T)
        worst_mult = max(worst_mult, r)
        res.cases += 1
        if not r < tol:
            res.fail(t, check="multiplicative", residual=r)
        lip = fredholm.det_lipschitz_check(S, T)
        worst_lip = max(worst_lip, lip.lhs - lip.rhs)
        res.cases += 1
        if not lip.holds:
            res.failures.append(
                {"suite": res.name, "anchor": "determinant-lipschitz-bound", "case": t, "lhs": lip.lhs, "rhs": lip.rhs}
            )
    res.metrics["max_multiplicative_residual"] = worst_mult
    res.metrics["max_lipschitz_lhs_minus_rhs"] = worst_lip
    return res


@_timed
def invertibility_suite(seed=0, dim=8, grid_size=16, singular=10, near=10) -> SuiteResult:
    """Determinant test against direct inversion on families with one special fiber."""
    res = SuiteResult("determinant-invertibility", "invertible-iff-determinant-invertible")
    grid = _grid(grid_size)
    for t in range(singular + near):
        rng = make_rng(seed, 9, t)
        x = int(rng.integers(grid.size))
        delta = 0.0 if t < singular else float(10 ** rng.uniform(-4, -1))
        T = near_singular_field(grid, dim, rng, x, delta)
        rep = fredholm.check_det_invertibility(T)
        res.cases += 1
        flagged = bool(rep.det_singular[x] and rep.resolvent_singular[x])
        expected = delta == 0.0
        others = np.delete(rep.det_singular | rep.resolvent_singular, x)
        if not rep.consistent or flagged != expected or others.any():
            res.fail(t, delta=delta, det_min=rep.det_min, resolvent_sup=rep.resolvent_sup, consistent=rep.consistent)
    return res


# ---------------------------------------------------------------------------
# zeta functions


@_timed
def circle_anchor_suite(n_modes=10_000, tol=2e-4) -> SuiteResult:
    """Truncated ``tr |D|^(-2)`` on the circle against ``pi^2 / 3``."""
    res = SuiteResult("circle-zeta-anchor", "crossed-product-zeta")
    cycle = cycles.circle_crossed_product_cycle(Grid.point(), n_modes)
    truncated = float(cycles.circle_zeta(cycle, 2.0, with_tail=False).values[0].real)
    completed = float(cycles.circle_zeta(cycle, 2.0, with_tail=True).values[0].real)
    exact = math.pi ** 2 / 3
    res.cases = 2
    res.metrics["truncated_error"] = abs(truncated - exact)
    res.metrics["completed_error"] = abs(completed - exact)
    if not abs(truncated - exact) < tol:
        res.fail("truncated", value=truncated, error=abs(truncated - exact))
    if not abs(completed - exact) < 1e-12:
        res.fail("with-tail", value=completed, error=abs(completed - exact))
    return res


def geometric_spectrum(grid: Grid, count: int, ratio) -> zeta.EigenvalueFields:
    ratio = np.broadcast_to(np.asarray(ratio, dtype=float), (grid.size,))
    k = np.arange(1, count + 1)
    return zeta.EigenvalueFields(grid, ratio[:, None] ** k[None, :])


@_timed
def jensen_cahen_suite(seed=0, grid_size=16, samples=20, alpha=math.pi / 4, p=1.0) -> SuiteResult:
    """Tails ``sum_(k>=m) lambda_k^z`` in the sector against the angular bound."""
    res = SuiteResult("jensen-cahen-tail", "sector-tail-bound")
    grid = _grid(grid_size)
    rng = make_rng(seed, 11)
    t = np.linspace(0, 1, grid.size)
    spectra = [geometric_spectrum(grid, 60, 0.5), geometric_spectrum(grid, 60, 0.3 + 0.5 * t)]
    worst = -math.inf
    for si, lam in enumerate(spectra):
        zs = zeta.sample_sector(p, alpha, samples, rng)
        for m in (1, 3, 5, 10):
            bound = zeta.jensen_cahen_tail(lam, p, alpha, m)
            for z in zs:
                tail = np.abs(zeta.tail_sum(lam, z, m))
                worst = max(worst, float(tail.max() - bound))
                res.cases += 1
                if not np.all(tail <= bound + 1e-9):
                    res.fail(f"spectrum{si}", m=m, z=[z.real, z.imag], tail=float(tail.max()), bound=bound)
    res.metrics["max_tail_minus_bound"] = worst
    return res


def residue_test_functions(grid: Grid) -> List[ScalarField]:
    t = np.linspace(0.0, 1.0, grid.size)
    return [
        ScalarField(grid, 1.0 + 0.5 * np.cos(2 * np.pi * t)),
        ScalarField(grid, np.exp(t)),
        ScalarField(grid, 2.0 + t ** 2),
    ]


@_timed
def residue_suite(grid_size=16, n_modes=64, spread_tol=0.02, offdiag_tol=1e-12) -> SuiteResult:
    """Residue of ``zeta_D(f u_0, .)`` proportional to ``f``; off-diagonal traces vanish."""
    res = SuiteResult("crossed-product-residue", "crossed-product-residue-proportional-to-f0")
    grid = _grid(grid_size)
    cycle = cycles.circle_crossed_product_cycle(grid, n_modes)
    fs = residue_test_functions(grid)
    prop = cycles.residue_proportionality(cycle, fs)
    res.cases += 1
    res.metrics["ratio_spread"] = prop.spread
    res.metrics["residue_constant"] = float(np.mean(prop.constants).real)
    if not prop.spread < spread_tol:
        res.fail("ratio", spread=prop.spread)
    worst = 0.0
    for f in fs:
        for k in (-2, -1, 1, 3):
            for z in (2.0, 1.5 + 0.7j):
                tr = cycles.localized_zeta_trace(cycle, f, k, z, depth=n_modes).sup_norm()
                worst = max(worst, tr)
                res.cases += 1
                if not tr < offdiag_tol:
                    res.fail("offdiagonal", k=k, value=tr)
    res.metrics["max_offdiagonal_trace"] = worst
    return res


@_timed
def zeta_consistency_suite(seed=0, dim=6, grid_size=16, trials=10) -> SuiteResult:
    """Eigen-sum against functional calculus, monotonicity in real ``z`` and a Morera check."""
    res = SuiteResult("zeta-dirichlet-consistency", "zeta-holomorphic-on-half-plane")
    grid = _grid(grid_size)
    worst = 0.0
    for t in range(trials):
        rng = make_rng(seed, 12, t)
        T = random_contraction(grid, dim, rng)
        for z in (2.0, 2.5 + 1.0j, 4.0 - 3.0j):
            a = zeta.zeta(T, z).value.values
            b = schatten.trace_field(pos_power(T, z)).values
            worst = max(worst, float(np.max(np.abs(a - b))))
            res.cases += 1
            if not np.max(np.abs(a - b)) < 1e-9:
                res.fail(t, z=[z.real if isinstance(z, complex) else z, complex(z).imag], error=float(np.max(np.abs(a - b))))
        lo, hi = zeta.zeta(T, 2.0).value.values.real, zeta.zeta(T, 3.0).value.values.real
        res.cases += 1
        if np.any(hi > lo + 1e-12):
            res.fail(t, check="monotone-in-z")
        mor = zeta.morera_check(T, 3.0 + 0.5j, 0.8)
        res.cases += 1
        if not mor.holds:
            res.fail(t, check="morera", integral=mor.max_abs)
    res.metrics["max_error"] = worst
    return res


# ---------------------------------------------------------------------------
# cycles


@_timed
def sphere_suite(grid_size=16, s_grid_size=16, eps=1.0, ps=(0.5, 1.0, 2.0), tol=1e-12) -> SuiteResult:
    """Trace field of the sphere cycle against ``(1 + f^2)^(-p/2)``."""
    res = SuiteResult("sphere-cycle", "sphere-embedding-summable-for-all-p")
    cycle = cycles.sphere_embedding_cycle(eps, s_grid_size, Grid.sphere(grid_size))
    for p in ps:
        computed = cycles.sphere_trace_field(cycle, p)
        closed = cycles.sphere_closed_form(cycle, p)
        err = float(np.max(np.abs(computed.values - closed.values)))
        res.metrics[f"error_p{p:g}"] = err
        res.cases += 1
        if not err < tol:
            res.fail(p, error=err)
        res.cases += 1
        if not computed.vanishes_at_infinity():
            res.fail(p, check="vanishes-at-infinity")
        rep = cycles.summability_report(cycle, p)
        res.cases += 1
        if rep.verdict != "summable":
            res.fail(p, check="verdict", verdict=rep.verdict)
    return res


@_timed
def index_suite(eps=1.0, N=256) -> SuiteResult:
    """Min-max comparison and partial-sum growth for the index cycle."""
    res = SuiteResult("index-cycle", "index-cycle-summable-for-p-above-1")
    rep = cycles.index_cycle_checks(cycles.index_cycle(eps, N))
    res.cases = 5
    res.metrics.update(
        hermitian_gap=rep.hermitian_gap,
        minmax_margin=rep.minmax_margin,
        p2_last_increment=rep.p2_last_increment,
        p1_slope=rep.p1_slope,
        p1_reference_slope=rep.p1_reference_slope,
    )
    if not rep.hermitian_gap < 1e-12 or not rep.symmetry_gap < 1e-8:
        res.fail("symmetry", hermitian_gap=rep.hermitian_gap, symmetry_gap=rep.symmetry_gap)
    if not rep.minmax_holds:
        res.fail("minmax", margin=rep.minmax_margin)
    if not rep.p2_cauchy:
        res.fail("p2-cauchy", last_increment=rep.p2_last_increment)
    if not rep.p1_slope_ok:
        res.fail("p1-log-slope", slope=rep.p1_slope, reference=rep.p1_reference_slope)
    return res


@_timed
def circle_summability_suite(grid_size=16, n_modes=256) -> SuiteResult:
    """Verdicts for the circle and fibration cycles; commutator identity."""
    res = SuiteResult("circle-summability", "crossed-product-summable-for-p-above-1")
    grid = _grid(grid_size)
    cycle = cycles.circle_crossed_product_cycle(grid, n_modes)
    for p, expected in ((2.0, "summable"), (1.0, "not_summable")):
        rep = cycles.summability_report(cycle, p, [64, 128, 256])
        res.cases += 1
        if rep.verdict != expected:
            res.fail(p, verdict=rep.verdict, expected=expected)
    f = residue_test_functions(grid)[0]
    for k in (1, 2, -3):
        c = cycles.commutator_norms(cycle, f, k, depth=32)
        res.cases += 1
        if not (abs(c["measured"] - c["expected"]) < 1e-10 and c["gap_to_kUk"] < 1e-12):
            res.fail(k, **c)
    fib = cycles.trivial_fibration_cycle(grid, 32)
    cont = cycles.fibration_continuity(fib, 2.0)
    res.cases += 1
    if cont.modulus > 1e-12:
        res.fail("fibration", modulus=cont.modulus)
    return res


@_timed
def external_product_suite(seed=0, dim=8, grid_size=16, trials=100, pairs=((1, 1), (2, 0.5))) -> SuiteResult:
    """``(1+a+b)^(-p-q) <= (1+a)^(-p/2) (1+b)^(-q) (1+a)^(-p/2)`` for commuting positive pairs."""
    res = SuiteResult("external-product-inequality", "bound-on-powers-of-commuting-resolvents")
    grid = _grid(grid_size)
    worst = math.inf
    for t in range(trials):
        rng = make_rng(seed, 15, t)
        a, b = random_commuting_positive_pair(grid, dim, rng)
        for p, q in pairs:
            rep = cycles.external_product_check(a, b, p, q)
            worst = min(worst, rep.margin)
            res.cases += 1
            if not rep.holds:
                res.fail(t, p=p, q=q, margin=rep.margin)
    res.metrics["min_margin"] = worst
    return res


# ---------------------------------------------------------------------------
# driver


def default_suites(seed: int, dim: int, grid_size: int) -> List[Callable[[], SuiteResult]]:
    """The verify-all battery with moderate case counts."""
    kw = dict(seed=seed, dim=dim, grid_size=grid_size)
    return [
        lambda: frame_trace_suite(trials=30, **kw),
        lambda: frame_independence_suite(trials=10, **kw),
        lambda: hoelder_suite(trials=40, **kw),
        lambda: truncation_suite(trials=20, **kw),
        lambda: corner_suite(trials=40, **kw),
        lambda: cyclicity_suite(trials=40, **kw),
        lambda: det_triple_suite(trials=30, **kw),
        lambda: det_multiplicative_suite(trials=30, **kw),
        lambda: invertibility_suite(**kw),
        lambda: circle_anchor_suite(),
        lambda: jensen_cahen_suite(seed=seed, grid_size=grid_size),
        lambda: residue_suite(grid_size=grid_size),
        lambda: zeta_consistency_suite(trials=5, **kw),
        lambda: sphere_suite(grid_size=grid_size),
        lambda: index_suite(),
        lambda: circle_summability_suite(grid_size=grid_size),
        lambda: external_product_suite(trials=40, **kw),
    ]


def thread_count(env: Optional[dict] = None) -> int:
    env = os.environ if env is None else env
    raw = env.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_suites(suites: List[Callable[[], SuiteResult]], threads: Optional[int] = None) -> List[SuiteResult]:
    """Run suites, in parallel when ``threads > 1``; results keep the input order."""
    threads = thread_count() if threads is None else threads
    if threads <= 1:
        return [s() for s in suites]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda s: s(), suites))
