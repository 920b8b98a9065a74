"""Command-line driver.

Exit codes: 0 when every enabled check passes, 1 when a check fails
(``failures.json`` is written to the output directory), 2 for invalid
configuration or input.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import cycles, fredholm, frames, io, schatten, verify, zeta
from .base import Grid
from .errors import CheckFailed, ConfigError, SchattenFieldsError
from .opfield import OperatorField
from .sampling import make_rng, random_contraction, random_field, random_projection_field, scale_to_trace_norm

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2

COMMON_DEFAULTS = {"out": ".", "seed": 0, "dim": 6, "grid_size": 16, "input": None}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _complex(text: str) -> complex:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}") from exc
    if len(parts) == 1:
        return complex(parts[0], 0.0)
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")
    return complex(parts[0], parts[1])


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _exponent(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--seed", type=int, help="seed for pseudo-random inputs (default 0)")
    p.add_argument("--dim", type=int, help="fiber dimension of random inputs (default 6)")
    p.add_argument("--grid-size", dest="grid_size", type=int, help="grid points of random inputs (default 16)")
    p.add_argument("--input", help="input JSON document (operator field or frame)")
    p.add_argument("--config", help="JSON file supplying defaults for any option")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="schatten-fields", description="Schatten-class computations on operator fields.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("schatten", help="pointwise Schatten p-norms")
    _add_common(p)
    p.add_argument("--p", type=_exponent, help="exponent p >= 1 or 'inf' (default 2)")

    p = sub.add_parser("trace", help="C(X)-valued trace")
    _add_common(p)

    for name in ("frames", "frames-check"):
        p = sub.add_parser(name, help="frame reconstruction residuals")
        if name == "frames":
            p.add_argument("action", choices=["check"])
        _add_common(p)
        p.add_argument("--rank", type=int, help="module rank for a random projection field")

    p = sub.add_parser("det", help="Fredholm determinant det(1 + zT)")
    _add_common(p)
    p.add_argument("--method", choices=["product", "exterior", "log"], help="default product")
    p.add_argument("--z", type=_complex, help="complex scale 're,im' (default 1,0)")
    p.add_argument("--terms", type=int, help="series terms (default: dim for exterior, 40 for log)")
    p.add_argument("--trace-norm", dest="trace_norm", type=float, help="rescale the input to this sup trace norm")

    p = sub.add_parser("zeta", help="zeta function of a positive contraction field")
    _add_common(p)
    p.add_argument("--z", type=_complex, action="append", help="evaluation point 're,im' (repeatable)")
    p.add_argument("--p", type=float, help="half-plane abscissa (default 1)")
    p.add_argument("--alpha", type=float, help="sector half-angle for the tail bound (default pi/4)")
    p.add_argument("--tail", type=int, help="index m where the reported tail starts (default 1)")

    p = sub.add_parser("cycle", help="summability report for an example cycle")
    _add_common(p)
    p.add_argument("--example", choices=["circle", "sphere", "index", "fibration"])
    p.add_argument("--p", type=float, help="summability exponent (default 2)")
    p.add_argument("--depths", type=_int_list, help="truncation depths, e.g. 64,128,256")

    p = sub.add_parser("verify-all", help="run every property suite")
    _add_common(p)
    return parser


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Merge command-line values over config-file values over defaults."""
    config = {}
    if getattr(args, "config", None):
        config = io.read_json(args.config)
        if not isinstance(config, dict):
            raise ConfigError("config file must hold a JSON object")
        config = {k.replace("-", "_"): v for k, v in config.items()}
    for key, value in vars(args).items():
        if value is None and key in config:
            setattr(args, key, config[key])
    z = getattr(args, "z", None)
    if isinstance(z, (list, tuple)) and z and not isinstance(z[0], complex):
        try:
            if args.command == "det":
                args.z = complex(*z)
            else:
                args.z = [v if isinstance(v, complex) else complex(*v) for v in z]
        except TypeError as exc:
            raise ConfigError(f"bad z value in config: {z!r}") from exc
    for key, default in COMMON_DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, default)
    if args.dim < 1 or args.grid_size < 2:
        raise ConfigError("dim must be >= 1 and grid-size >= 2")
    return args


def _operator_input(args) -> OperatorField:
    if args.input:
        return io.operator_field_from_json(io.read_json(args.input))
    grid = Grid.interval(0.0, 1.0, args.grid_size)
    return random_field(grid, args.dim, make_rng(args.seed))


def _write_failures(out: Path, command: str, failures: List[dict]) -> None:
    io.write_json(out / "failures.json", {"schema_version": io.SCHEMA_VERSION, "command": command, "failures": failures})


def cmd_schatten(args, out: Path) -> int:
    T = _operator_input(args)
    p = 2.0 if args.p is None else float(args.p)
    rep = schatten.schatten_report(T, p)
    rows = [(i, float(v)) for i, v in enumerate(rep.norm_field.values.real)]
    io.write_csv(out / "schatten.csv", ["x_index", "pointwise_norm"], rows)
    io.write_json(out / "schatten.json", {
        "schema_version": io.SCHEMA_VERSION,
        "p": None if math.isinf(p) else p,
        "p_is_infinite": math.isinf(p),
        "sup_norm": rep.sup_norm,
        "continuity_modulus": rep.modulus,
    })
    print(f"sup ||T||_{p:g} = {rep.sup_norm!r}")
    return EXIT_OK


def cmd_trace(args, out: Path) -> int:
    T = _operator_input(args)
    tr = schatten.trace_field(T)
    io.atomic_write_text(out / "trace.csv", io.scalar_field_csv(tr))
    print(f"sup |tr T| = {tr.sup_norm()!r}")
    return EXIT_OK


def cmd_frames_check(args, out: Path) -> int:
    if args.input:
        frame = io.frame_from_json(io.read_json(args.input))
    else:
        grid = Grid.interval(0.0, 1.0, args.grid_size)
        rng = make_rng(args.seed)
        rank = args.rank or max(1, args.dim // 2)
        if not 1 <= rank <= args.dim:
            raise ConfigError("rank must lie in [1, dim]")
        frame = frames.projected_frame(random_projection_field(grid, args.dim, rank, rng))
    profile = frames.frame_residual_profile(frame)
    residual = float(profile.max(initial=0.0))
    io.write_csv(out / "frame_residuals.csv", ["x_index", "residual"], [(i, float(v)) for i, v in enumerate(profile)])
    report = {
        "schema_version": io.SCHEMA_VERSION,
        "label": frame.module.label,
        "elements": len(frame),
        "residual": residual,
        "tolerance": frames.PROJECTION_TOL,
    }
    io.write_json(out / "frames.json", report)
    print(f"frame {frame.module.label!r}: {len(frame)} elements, residual {residual:.3e}")
    if residual >= frames.PROJECTION_TOL:
        _write_failures(out, "frames-check", [{"anchor": "frame-reconstruction-identity", "residual": residual}])
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_det(args, out: Path) -> int:
    T = _operator_input(args)
    if args.trace_norm is not None:
        T = scale_to_trace_norm(T, args.trace_norm)
    method = args.method or "product"
    z = complex(1.0) if args.z is None else complex(args.z)
    rep = fredholm.det_report(T, method, z, args.terms)
    io.atomic_write_text(out / "det.csv", io.scalar_field_csv(rep.value))
    io.write_json(out / "det.json", {
        "schema_version": io.SCHEMA_VERSION,
        "method": rep.method,
        "z": [z.real, z.imag],
        "series_terms": rep.series_terms,
        "tail_estimate": rep.tail_estimate,
    })
    print(f"det(1 + zT) via {rep.method}: min |det| = {float(np.min(np.abs(rep.value.values)))!r}")
    return EXIT_OK


def cmd_zeta(args, out: Path) -> int:
    if args.input:
        T = io.operator_field_from_json(io.read_json(args.input))
    else:
        T = random_contraction(Grid.interval(0.0, 1.0, args.grid_size), args.dim, make_rng(args.seed))
    zs = args.z or [complex(2.0)]
    p = 1.0 if args.p is None else float(args.p)
    alpha = math.pi / 4 if args.alpha is None else float(args.alpha)
    m = 1 if args.tail is None else int(args.tail)
    lambdas = zeta.eigenvalue_fields(T)
    rows, diag = [], []
    for z in zs:
        val = zeta.zeta_from_eigenvalues(lambdas, z, p)
        for i, v in enumerate(val.value.values):
            rows.append((z.real, z.imag, i, v.real, v.imag))
    bound = zeta.jensen_cahen_tail(lambdas, p, alpha, m)
    for z in zs:
        tail = np.abs(zeta.tail_sum(lambdas, z, m))
        in_sector = abs(np.angle(z - p)) <= alpha
        diag.append({"z": [z.real, z.imag], "in_sector": bool(in_sector), "tail_sup": float(tail.max())})
    io.write_csv(out / "zeta.csv", ["z_re", "z_im", "x_index", "re", "im"], rows)
    doc = {
        "schema_version": io.SCHEMA_VERSION,
        "p": p,
        "alpha": alpha,
        "tail_start": m,
        "jensen_cahen_bound": bound,
        "points": diag,
    }
    io.write_json(out / "zeta.json", doc)
    bad = [d for d in diag if d["in_sector"] and d["tail_sup"] > bound + 1e-9]
    print(f"zeta at {len(zs)} points; tail bound {bound!r}")
    if bad:
        _write_failures(out, "zeta", [{"anchor": "sector-tail-bound", **d, "bound": bound} for d in bad])
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _example_cycle(name: str, args) -> cycles.KKCycle:
    grid = Grid.interval(0.0, 1.0, args.grid_size)
    if name == "circle":
        return cycles.circle_crossed_product_cycle(grid, 256)
    if name == "sphere":
        return cycles.sphere_embedding_cycle(1.0, args.grid_size, Grid.sphere(args.grid_size))
    if name == "index":
        return cycles.index_cycle(1.0, 256)
    return cycles.trivial_fibration_cycle(grid, 64)


def cmd_cycle(args, out: Path) -> int:
    name = args.example or "circle"
    p = 2.0 if args.p is None else float(args.p)
    cycle = _example_cycle(name, args)
    depths = args.depths or ([64, 128, 256] if name != "fibration" else [16, 32, 64])
    rep = cycles.summability_report(cycle, p, depths)
    doc = {"example": name, **rep.to_json()}
    failures = []
    if name == "index":
        ic = cycles.index_cycle_checks(cycle)
        doc["index_checks"] = {
            "hermitian_gap": ic.hermitian_gap,
            "minmax_margin": ic.minmax_margin,
            "p2_last_increment": ic.p2_last_increment,
            "p1_slope": ic.p1_slope,
            "p1_reference_slope": ic.p1_reference_slope,
            "passed": ic.passed,
        }
        if not ic.passed:
            failures.append({"anchor": "index-cycle-summable-for-p-above-1", **doc["index_checks"]})
    io.write_json(out / "summability.json", doc)
    io.write_csv(out / "partial_sums.csv", ["depth", "partial_sum", "completed_sum"], [
        (d, s, "inf" if math.isinf(c) else c) for d, s, c in rep.partial_sum_rows()
    ])
    print(f"{name} cycle, p = {p:g}: {rep.verdict}")
    if failures:
        _write_failures(out, "cycle", failures)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_verify_all(args, out: Path) -> int:
    results = verify.run_suites(verify.default_suites(args.seed, args.dim, args.grid_size))
    for r in results:
        print(r.summary_line())
    failures = [f for r in results for f in r.failures]
    io.write_json(out / "verify_report.json", {
        "schema_version": io.SCHEMA_VERSION,
        "seed": args.seed,
        "dim": args.dim,
        "grid_size": args.grid_size,
        "passed": not failures,
        "suites": [r.to_json() for r in results],
    })
    if failures:
        _write_failures(out, "verify-all", failures)
        return EXIT_CHECK_FAILED
    return EXIT_OK


COMMANDS = {
    "schatten": cmd_schatten,
    "trace": cmd_trace,
    "frames": cmd_frames_check,
    "frames-check": cmd_frames_check,
    "det": cmd_det,
    "zeta": cmd_zeta,
    "cycle": cmd_cycle,
    "verify-all": cmd_verify_all,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv`` and execute; returns the process exit status."""
    out = None
    command = "unknown"
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        args = _resolve(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[command](args, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        if out is not None:
            _write_failures(out, command, exc.failures)
        return EXIT_CHECK_FAILED
    except SchattenFieldsError as exc:
        detail = {"anchor": type(exc).__name__, "error": str(exc)}
        radius = getattr(exc, "radius_product", None)
        if radius is not None:
            detail["radius_product"] = radius
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        if out is not None:
            _write_failures(out, command, [detail])
        return EXIT_CHECK_FAILED


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
