"""Acceptance battery: sixteen quantitative checks at full case counts.

Each test records one ``criterion NN PASS/FAIL`` line (printed live and
repeated in the terminal summary) and then asserts the same condition.
Oracles are computed here independently of the package routes under test
wherever a direct route exists (dense SVD, dense determinants, closed forms).
"""

import math
import subprocess
import sys
import time

import mpmath
import numpy as np
import pytest

from schatten_fields import approx, cycles, fredholm, frames, schatten, zeta
from schatten_fields.base import Grid
from schatten_fields.errors import BoundViolated
from schatten_fields.sampling import (
    make_rng,
    near_singular_field,
    random_commuting_positive_pair,
    random_field,
    random_module_operator,
    random_projection_field,
    scale_to_trace_norm,
)

DIM, GRID = 8, 16


@pytest.fixture(scope="module")
def grid():
    return Grid.interval(0.0, 1.0, GRID)


def _svd_trace(T, p):
    return np.sum(np.linalg.svd(T.matrices, compute_uv=False) ** p, axis=1)


def _schatten(M, p):
    s = np.linalg.svd(M, compute_uv=False)
    return np.sum(s ** p, axis=-1) ** (1.0 / p)


def _module(grid, seed, trial, positive=False):
    rng = make_rng(seed, trial)
    spec = random_projection_field(grid, DIM, int(rng.integers(2, DIM)), rng)
    return spec, random_module_operator(spec, rng, positive=positive)


def test_01_frame_trace_identity(grid, criterion):
    start = time.perf_counter()
    worst = 0.0
    for t in range(100):
        spec, T = _module(grid, 101, t)
        frame = frames.projected_frame(spec)
        for p in (1, 2, 3):
            series = frames.frame_trace_series(T, frame, p).value.values
            worst = max(worst, float(np.max(np.abs(series - _svd_trace(T, p)))))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and elapsed < 10
    criterion(1, "frame series equals SVD trace, 100 operators, p in {1,2,3}", ok, f"max err {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_02_frame_independence(grid, criterion):
    worst = 0.0
    for t in range(20):
        spec, T = _module(grid, 102, t)
        base = frames.projected_frame(spec)
        idx = [0, 5, 10, 15]
        refined = frames.refine_frame(base, frames.partition_of_unity(grid, idx, 0.55))
        assert len(refined) > len(base)
        for p in (1, 2):
            a = frames.frame_trace_series(T, base, p).value.values
            b = frames.frame_trace_series(T, refined, p).value.values
            worst = max(worst, float(np.max(np.abs(a - b))))
    ok = worst < 1e-8
    criterion(2, "projected and partition-of-unity frames agree, 20 operators", ok, f"max diff {worst:.2e}")
    assert ok


def test_03_hoelder(grid, criterion):
    violations, cases, worst = 0, 0, -math.inf
    for (p, q) in ((2, 2), (3, 1.5), (4, 4 / 3)):
        r = 1 / (1 / p + 1 / q)
        for t in range(100):
            rng = make_rng(103, int(p * 10), t)
            S, T = random_field(grid, DIM, rng), random_field(grid, DIM, rng)
            lhs = float(np.max(_schatten(S.matrices @ T.matrices, r)))
            rhs = float(np.max(_schatten(S.matrices, p)) * np.max(_schatten(T.matrices, q)))
            rep = schatten.check_hoelder(S, T, p, q)
            pointwise = _schatten(S.matrices @ T.matrices, r) - _schatten(S.matrices, p) * _schatten(T.matrices, q)
            worst = max(worst, lhs - rhs, float(pointwise.max()))
            cases += 1
            if lhs > rhs + 1e-9 or pointwise.max() > 1e-9 or not rep.holds:
                violations += 1
    ok = violations == 0 and cases == 300
    criterion(3, "Hoelder inequality, 300 pairs", ok, f"{violations} violations, max lhs-rhs {worst:.3g}")
    assert ok


def test_04_truncation_bound(grid, criterion):
    violations, cases = 0, 0
    for t in range(100):
        T = random_field(grid, DIM, make_rng(104, t))
        for p in (1, 2, 4):
            try:
                table = approx.truncation_bound_table(T, p)
            except BoundViolated:
                violations += 1
                continue
            for b in table:
                cases += 1
                direct = float(np.max(_schatten(approx.truncate(T, b.m).matrices - approx.truncate(T, b.n).matrices, p)))
                if abs(direct - b.measured) > 1e-12 * (1 + direct) or direct > b.bound + 1e-9:
                    violations += 1
    ok = violations == 0 and cases == 100 * 3 * DIM * (DIM + 1) // 2
    criterion(4, "truncation bound, 100 fields, p in {1,2,4}, all n<m<=dim", ok, f"{cases} cases, {violations} violations")
    assert ok


def test_05_corner_bound(grid, criterion):
    violations, cases, worst = 0, 0, -math.inf
    for t in range(100):
        T = random_field(grid, DIM, make_rng(105, t))
        U, s, Vh = np.linalg.svd(T.matrices)
        for p in (2, 3, 4):
            absTp = np.einsum("xki,xk,xkj->xij", np.conj(Vh), s ** p, Vh)
            for a in range(DIM):
                for b in range(a + 1, DIM + 1):
                    rep = approx.truncated_corner_bound(T, (a, b), p)
                    lhs = float(np.max(_schatten(T.matrices[:, :, a:b], p) ** p))
                    rhs = float(np.max(np.einsum("xii->x", absTp[:, a:b, a:b]).real))
                    worst = max(worst, lhs - rhs)
                    cases += 1
                    if lhs > rhs + 1e-9 or not rep.holds:
                        violations += 1
    ok = violations == 0
    criterion(5, "corner bound ||Te||_p^p <= tr e|T|^p e, 100 fields, p in {2,3,4}", ok, f"{cases} cases, max lhs-rhs {worst:.2e}")
    assert ok


def test_06_trace_cyclicity(grid, criterion):
    worst = 0.0
    for t in range(100):
        rng = make_rng(106, t)
        S, T = random_field(grid, DIM, rng), random_field(grid, DIM, rng)
        assert np.max(np.abs(S.matrices @ T.matrices - T.matrices @ S.matrices)) > 1e-3
        worst = max(worst, schatten.check_trace_cyclic(S, T))
    ok = worst < 1e-9
    criterion(6, "tr(ST) = tr(TS), 100 noncommuting pairs", ok, f"max residual {worst:.2e}")
    assert ok


def test_07_determinant_triple(grid, criterion):
    worst = 0.0
    for t in range(50):
        T = scale_to_trace_norm(random_field(grid, DIM, make_rng(107, t)), 0.4)
        dense = np.linalg.det(np.eye(DIM)[None] + T.matrices)
        prod = fredholm.det_field(T).values
        ext = fredholm.det_exterior_series(T, DIM).value.values
        log = fredholm.det_log_series(T, 1.0, 40).values
        worst = max(worst, *(float(np.max(np.abs(u - v))) for u, v in ((prod, ext), (prod, log), (ext, log), (prod, dense))))
    ok = worst < 1e-8
    criterion(7, "eigen product, exterior series and log series agree, 50 fields", ok, f"max diff {worst:.2e}")
    assert ok


def test_08_determinant_multiplicative_and_lipschitz(grid, criterion):
    violations, worst = 0, 0.0
    for t in range(50):
        rng = make_rng(108, t)
        S = scale_to_trace_norm(random_field(grid, DIM, rng), 1.0)
        T = scale_to_trace_norm(random_field(grid, DIM, rng), 1.0)
        res = fredholm.check_det_multiplicative(S, T)
        I = np.eye(DIM)[None]
        direct = np.linalg.det((I + T.matrices) @ (I + S.matrices)) - np.linalg.det(I + T.matrices) * np.linalg.det(I + S.matrices)
        lip = fredholm.det_lipschitz_check(S, T)
        worst = max(worst, res, float(np.max(np.abs(direct))))
        if res >= 1e-8 or np.max(np.abs(direct)) >= 1e-8 or not lip.holds:
            violations += 1
    ok = violations == 0
    criterion(8, "determinant multiplicativity and Lipschitz bound, 50 pairs", ok, f"{violations} violations, max residual {worst:.2e}")
    assert ok


def test_09_invertibility(grid, criterion):
    good = 0
    for t in range(20):
        rng = make_rng(109, t)
        x = int(rng.integers(GRID))
        delta = 0.0 if t < 10 else float(10 ** rng.uniform(-4, -1))
        T = near_singular_field(grid, DIM, rng, x, delta)
        rep = fredholm.check_det_invertibility(T)
        # independent oracle: smallest singular value of 1 + T(x)
        smin = np.linalg.svd(np.eye(DIM)[None] + T.matrices, compute_uv=False)[:, -1]
        singular_expected = delta == 0.0
        flags_ok = bool(rep.det_singular[x]) == singular_expected == bool(rep.resolvent_singular[x])
        others_ok = not np.delete(rep.det_singular | rep.resolvent_singular, x).any()
        sup_ok = math.isinf(rep.resolvent_sup) if singular_expected else rep.resolvent_sup == pytest.approx(1 / smin.min())
        good += bool(rep.consistent and flags_ok and others_ok and sup_ok)
    ok = good == 20
    criterion(9, "determinant and resolvent flags consistent, 20 near-singular families", ok, f"{good}/20 consistent")
    assert ok


def test_10_circle_anchor(criterion):
    start = time.perf_counter()
    cycle = cycles.circle_crossed_product_cycle(Grid.point(), 10_000)
    value = float(cycles.circle_zeta(cycle, 2.0, with_tail=False).values[0].real)
    elapsed = time.perf_counter() - start
    err = abs(value - math.pi ** 2 / 3)
    # oracle for the truncation error: 2 sum_(k > n) k^-2 in high precision
    tail = float(2 * mpmath.zeta(2, 10_001))
    ok = err < 2e-4 and elapsed < 1.0 and abs(err - tail) < 1e-12
    criterion(10, "truncated tr|D|^-2 at 10^4 modes equals pi^2/3", ok, f"value {value:.9f}, err {err:.3e}, {elapsed:.3f}s")
    assert ok


def test_11_jensen_cahen(grid, criterion):
    rng = make_rng(111)
    ratios = np.linspace(0.3, 0.8, GRID)
    k = np.arange(1, 80)
    lam = zeta.EigenvalueFields(grid, ratios[:, None] ** k[None, :])
    alpha, p, m = math.pi / 4, 1.0, 5
    bound = zeta.jensen_cahen_tail(lam, p, alpha, m)
    # closed-form sup of the finite geometric tail sum_(k=m)^K r^k
    K = k[-1]
    closed = float(np.max(ratios ** m * (1 - ratios ** (K - m + 1)) / (1 - ratios))) / math.cos(alpha)
    zs = zeta.sample_sector(p, alpha, 20, rng)
    worst = max(float(np.max(np.abs(zeta.tail_sum(lam, z, m)))) - bound for z in zs)
    ok = worst <= 1e-9 and bound == pytest.approx(closed, rel=1e-10) and len(zs) == 20
    criterion(11, "Jensen-Cahen tail dominates 20 sampled z in the sector", ok, f"bound {bound:.4g}, max tail-bound {worst:.3g}")
    assert ok


def test_12_crossed_product_residue(grid, criterion):
    cycle = cycles.circle_crossed_product_cycle(grid, 64)
    t = np.linspace(0.0, 1.0, GRID)
    from schatten_fields.base import ScalarField

    fs = [ScalarField(grid, 1 + 0.5 * np.cos(2 * np.pi * t)), ScalarField(grid, np.exp(t)), ScalarField(grid, 2 + t ** 2)]
    prop = cycles.residue_proportionality(cycle, fs)
    offdiag = max(
        cycles.localized_zeta_trace(cycle, f, k, z, depth=64).sup_norm()
        for f in fs for k in (-3, -1, 1, 2) for z in (2.0, 1.5 + 0.5j)
    )
    ok = prop.spread < 0.02 and offdiag < 1e-12
    criterion(12, "residue proportional to f0 across 3 functions; off-diagonal traces vanish", ok,
              f"spread {prop.spread:.2e}, constant {np.mean(prop.constants).real:.6f}, offdiag {offdiag:.1e}")
    assert ok


def test_13_sphere_cycle(criterion):
    eps = 1.0
    cycle = cycles.sphere_embedding_cycle(eps, 16, Grid.sphere(GRID))
    s = cycle.data["s"]
    fin = np.isfinite(s)
    worst = 0.0
    for p in (0.5, 1.0, 2.0):
        computed = cycles.sphere_trace_field(cycle, p).values
        a = math.pi / (2 * eps)
        closed = (1 + (a * np.tan(a * s[fin])) ** 2) ** (-p / 2)
        worst = max(worst, float(np.max(np.abs(computed[fin] - closed))), float(abs(computed[~fin]).max()))
    ok = worst < 1e-12
    criterion(13, "sphere trace field equals (1+f^2)^(-p/2), p in {0.5,1,2}", ok, f"max err {worst:.2e}")
    assert ok


def test_14_index_cycle(criterion):
    start = time.perf_counter()
    rep = cycles.index_cycle_checks(cycles.index_cycle(1.0, 256))
    elapsed = time.perf_counter() - start
    ok = rep.minmax_holds and rep.p2_cauchy and rep.p1_relative_error < 0.2 and rep.hermitian_gap < 1e-12 and elapsed < 30
    criterion(14, "index cycle at N=256: min-max comparison, p=2 Cauchy, p=1 log growth", ok,
              f"margin {rep.minmax_margin:.3g}, p2 inc {rep.p2_last_increment:.2e}, slope {rep.p1_slope:.3f} vs {rep.p1_reference_slope:.3f}, {elapsed:.2f}s")
    assert ok


def test_15_external_product(grid, criterion):
    worst = math.inf
    cases = 0
    for t in range(100):
        a, b = random_commuting_positive_pair(grid, DIM, make_rng(115, t))
        wa, wb = np.linalg.eigvalsh(a.matrices), np.linalg.eigvalsh(b.matrices)
        for (p, q) in ((1, 1), (2, 0.5)):
            rep = cycles.external_product_check(a, b, p, q)
            worst = min(worst, rep.margin)
            cases += 1
            # commuting case: the inequality reduces to scalar ones on joint eigenvalues
            assert wa.min() >= -1e-10 and wb.min() >= -1e-10
    ok = worst >= -1e-9 and cases == 200
    criterion(15, "external-product resolvent inequality, 100 commuting pairs", ok, f"min margin {worst:.3g}")
    assert ok


@pytest.mark.parametrize("dim", [6, 8])
def test_16_verify_all(tmp_path, criterion, dim):
    start = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "schatten_fields.cli", "verify-all", "--seed", "42", "--dim", str(dim), "--grid-size", "16", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    elapsed = time.perf_counter() - start
    ok = proc.returncode == 0 and elapsed < 120
    criterion(16, f"verify-all --dim {dim} exits 0 within 2 minutes", ok, f"exit {proc.returncode}, {elapsed:.1f}s")
    assert ok, proc.stdout + proc.stderr
