import json

import numpy as np
import pytest

from schatten_fields import io
from schatten_fields.base import Grid
from schatten_fields.cli import EXIT_CHECK_FAILED, EXIT_CONFIG_ERROR, EXIT_OK, run
from schatten_fields.sampling import make_rng, random_field, scale_to_trace_norm


def _field_file(path, trace_norm=None, dim=3):
    T = random_field(Grid.interval(0, 1, 6), dim, make_rng(7))
    if trace_norm is not None:
        T = scale_to_trace_norm(T, trace_norm)
    io.write_json(path, io.operator_field_to_json(T))
    return T


def test_schatten(tmp_path):
    assert run(["schatten", "--out", str(tmp_path), "--p", "inf", "--seed", "1"]) == EXIT_OK
    doc = json.loads((tmp_path / "schatten.json").read_text())
    assert doc["p_is_infinite"] and doc["sup_norm"] > 0
    assert (tmp_path / "schatten.csv").read_text().startswith("x_index,pointwise_norm\n")


def test_trace_from_input(tmp_path):
    T = _field_file(tmp_path / "T.json")
    assert run(["trace", "--input", str(tmp_path / "T.json"), "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert float(lines[1].split(",")[1]) == np.trace(T.matrices[0]).real


@pytest.mark.parametrize("argv", [["frames", "check"], ["frames-check", "--rank", "2"]])
def test_frames_check(tmp_path, argv):
    assert run(argv + ["--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "frames.json").read_text())["residual"] < 1e-10


@pytest.mark.parametrize("method", ["product", "exterior", "log"])
def test_det_methods(tmp_path, method):
    assert run(["det", "--method", method, "--trace-norm", "0.4", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "det.csv").exists()


def test_det_outside_radius(tmp_path):
    _field_file(tmp_path / "T.json", trace_norm=0.5)
    out = tmp_path / "out"
    code = run(["det", "--method", "log", "--z", "3,0", "--input", str(tmp_path / "T.json"), "--out", str(out)])
    assert code == EXIT_CHECK_FAILED
    failure = json.loads((out / "failures.json").read_text())["failures"][0]
    assert failure["anchor"] == "OutsideConvergenceRadius"
    assert failure["radius_product"] == pytest.approx(1.5)
    assert not (out / "det.csv").exists()


def test_zeta(tmp_path):
    assert run(["zeta", "--z", "2,0", "--z", "3,1", "--tail", "2", "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "zeta.csv").read_text().splitlines()
    assert lines[0] == "z_re,z_im,x_index,re,im" and len(lines) == 1 + 2 * 16
    assert json.loads((tmp_path / "zeta.json").read_text())["jensen_cahen_bound"] >= 0


def test_zeta_out_of_half_plane(tmp_path):
    assert run(["zeta", "--z", "0.5,0", "--out", str(tmp_path)]) == EXIT_CHECK_FAILED


@pytest.mark.parametrize(
    "example,p,verdict",
    [("circle", "2", "summable"), ("circle", "1", "not_summable"), ("sphere", "0.5", "summable"), ("fibration", "2", "summable")],
)
def test_cycle(tmp_path, example, p, verdict):
    assert run(["cycle", "--example", example, "--p", p, "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "summability.json").read_text())["verdict"] == verdict
    assert (tmp_path / "partial_sums.csv").read_text().startswith("depth,partial_sum,completed_sum\n")


def test_cycle_index(tmp_path):
    assert run(["cycle", "--example", "index", "--depths", "128,256,512", "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "summability.json").read_text())["index_checks"]["passed"]


def test_malformed_input_is_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"schema_version\": 1,")
    out = tmp_path / "out"
    assert run(["det", "--input", str(bad), "--out", str(out)]) == EXIT_CONFIG_ERROR
    assert not out.exists() or not any(out.iterdir())


def test_schema_violation_is_config_error(tmp_path):
    (tmp_path / "bad.json").write_text(json.dumps({"schema_version": 1, "points": [[0.0]]}))
    assert run(["trace", "--input", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG_ERROR


def test_bad_arguments(tmp_path):
    assert run(["det", "--method", "nope"]) == EXIT_CONFIG_ERROR
    assert run(["det", "--z", "1,2,3"]) == EXIT_CONFIG_ERROR
    assert run([]) == EXIT_CONFIG_ERROR


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 3, "grid-size": 5, "z": [[2.0, 0.0]], "out": str(tmp_path / "a")}))
    assert run(["zeta", "--config", str(cfg)]) == EXIT_OK
    assert len((tmp_path / "a" / "zeta.csv").read_text().splitlines()) == 6
    assert run(["zeta", "--config", str(cfg), "--grid-size", "7"]) == EXIT_OK
    assert len((tmp_path / "a" / "zeta.csv").read_text().splitlines()) == 8


def test_determinism(tmp_path):
    for name in ("a", "b"):
        for argv in (["schatten"], ["det", "--method", "exterior"], ["zeta", "--z", "2.5,1"], ["cycle"]):
            assert run(argv + ["--seed", "11", "--out", str(tmp_path / name)]) == EXIT_OK
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_verify_all(tmp_path):
    assert run(["verify-all", "--seed", "42", "--dim", "6", "--grid-size", "16", "--out", str(tmp_path)]) == EXIT_OK
    doc = json.loads((tmp_path / "verify_report.json").read_text())
    assert doc["passed"] and all(s["passed"] for s in doc["suites"])
    assert not (tmp_path / "failures.json").exists()
