import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pytest

from dimbound.dimension import mane_bound
from dimbound.exception import InvalidInputError
from dimbound.utils.runtime import run_concurrently
from dimbound.utils.sampling import halton, sign_vertices, sphere_directions
from dimbound.utils.serializer import dumps, encode, write_csv


class Color(str, Enum):
    RED = "red"


@dataclass
class Sample:
    name: str
    values: np.ndarray
    cache: dict = field(default_factory=dict, metadata={"serialize": False})


def test_encode_dataclass_skips_unserialized_fields():
    assert encode(Sample("a", np.arange(2))) == {"name": "a", "values": [0, 1]}


def test_encode_enum_and_pydantic_model():
    assert encode(Color.RED) == "red"
    data = encode(mane_bound(1, 1.0, 0.1))
    assert data["formula"] == "mane"
    assert data["lambda"] == 0.1
    assert "M" not in data


def test_dumps_is_deterministic():
    text = dumps({"b": np.float64(0.1), "a": [np.int64(1), None]})
    assert text == dumps({"a": [1, None], "b": 0.1})
    assert json.loads(text) == {"a": [1, None], "b": 0.1}


def test_write_csv_leaves_missing_values_empty(tmp_path):
    path = write_csv(tmp_path / "rows.csv", ["a", "b"], [(1.5, None), (np.float64(2.0), 3)])
    assert path.read_text(encoding="utf-8") == "a,b\n1.5,\n2.0,3\n"


def test_run_concurrently_keeps_order():
    jobs = [lambda value=value: value**2 for value in range(10)]
    assert run_concurrently(jobs) == [value**2 for value in range(10)]
    assert run_concurrently(jobs, limit=1) == [value**2 for value in range(10)]
    assert run_concurrently([]) == []


def test_run_concurrently_raises_first_failure():
    def fail():
        raise InvalidInputError(text="broken job")

    with pytest.raises(InvalidInputError, match="broken job"):
        run_concurrently([lambda: 1, fail])


def test_sampling_is_deterministic():
    assert np.array_equal(halton(16, 2, seed=3), halton(16, 2, seed=3))
    assert not np.array_equal(halton(16, 2, seed=3), halton(16, 2, seed=4))
    assert np.allclose(np.linalg.norm(sphere_directions(64, 3), axis=1), 1.0)
    assert sign_vertices(3).shape == (8, 3)
