import json

import numpy as np
import pytest

from schatten_fields import io
from schatten_fields.base import Grid, ScalarField
from schatten_fields.errors import ConfigError
from schatten_fields.frames import projected_frame
from schatten_fields.sampling import random_field, random_projection_field


def test_grid_round_trip():
    g = Grid.interval(0, 1, 5).compactify([0, 4], np.full(5, 0.5))
    back = io.grid_from_json(json.loads(io.dumps(io.grid_to_json(g))))
    np.testing.assert_array_equal(back.distances, g.distances)
    assert back.compactified and back.infinity_index == 5


def test_scalar_field_round_trip(grid16):
    a = ScalarField.from_function(grid16, lambda x: np.exp(1j * x[:, 0]))
    back = io.scalar_field_from_json(json.loads(io.dumps(io.scalar_field_to_json(a))))
    np.testing.assert_array_equal(back.values, a.values)


def test_operator_field_round_trip_is_exact(grid16, rng):
    T = random_field(grid16, 3, rng)
    back = io.operator_field_from_json(json.loads(io.dumps(io.operator_field_to_json(T))))
    np.testing.assert_array_equal(back.matrices, T.matrices)


def test_frame_round_trip(grid16, rng):
    frame = projected_frame(random_projection_field(grid16, 4, 2, rng))
    back = io.frame_from_json(json.loads(io.dumps(frame.to_json())))
    assert len(back) == 4 and back.module.label == frame.module.label


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("matrices"),
        lambda d: d.update(schema_version=2),
        lambda d: d.update(dim=4),
        lambda d: d.update(adjacency=[[0, 99]]),
        lambda d: d["matrices"][0][0].__setitem__(0, [1.0]),
    ],
)
def test_invalid_operator_documents(grid16, rng, mutate):
    doc = json.loads(io.dumps(io.operator_field_to_json(random_field(grid16, 3, rng))))
    mutate(doc)
    with pytest.raises(ConfigError):
        io.operator_field_from_json(doc)


def test_read_json_malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        io.read_json(path)


def test_dumps_rejects_nan():
    with pytest.raises(ValueError):
        io.dumps({"x": float("nan")})


def test_atomic_write_leaves_no_temp_files(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    io.atomic_write_text(target, "a\n")
    io.atomic_write_text(target, "b\n")
    assert target.read_text() == "b\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


def test_csv_formatting():
    text = io.csv_text(["i", "v"], [(0, 0.1), (1, 1e-300), (2, 1 / 3)])
    assert text == "i,v\n0,0.1\n1,1e-300\n2,0.3333333333333333\n"
    for line in text.splitlines()[1:]:
        value = line.split(",")[1]
        assert repr(float(value)) == value


def test_scalar_field_csv(grid3):
    text = io.scalar_field_csv(ScalarField(grid3, [1.0, 2j, -0.5]))
    assert text.splitlines() == ["x_index,re,im", "0,1.0,0.0", "1,0.0,2.0", "2,-0.5,0.0"]
