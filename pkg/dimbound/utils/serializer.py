"""Encoding of reports, covers and descriptors to plain JSON types and CSV files

Outputs are deterministic: keys are sorted, floats keep their repr and nothing time dependent is written.
"""

import csv
import dataclasses
import json
from enum import Enum
from functools import singledispatch
from pathlib import Path

import numpy as np
import pydantic

JsonType = float | int | bool | str | list | dict | None


@singledispatch
def encode(obj) -> JsonType:
    """Encodes an object to plain JSON types

    Dataclass fields whose metadata sets ``serialize`` to False are skipped.

    Args:
        obj: the object to encode

    Returns:
        Nested dicts, lists and scalars

    Examples:
    >>> encode(np.array([[1.0, 2.0]]))
    [[1.0, 2.0]]
    >>> encode({"n": np.int64(3), "path": Path("out")})
    {'n': 3, 'path': 'out'}
    >>> encode((np.float64(0.5), None))
    [0.5, None]
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: encode(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.metadata.get("serialize", True)
        }
    raise NotImplementedError(type(obj))


@encode.register(int)
@encode.register(float)
@encode.register(str)
@encode.register(bool)
@encode.register(type(None))
def _(obj):
    if isinstance(obj, Enum):
        return encode(obj.value)
    return obj


@encode.register
def _(obj: Enum):
    return encode(obj.value)


@encode.register
def _(obj: Path):
    return obj.as_posix()


@encode.register
def _(obj: np.ndarray):
    return obj.tolist()


@encode.register
def _(obj: np.generic):
    return obj.item()


@encode.register(list)
@encode.register(tuple)
def _(obj):
    return [encode(item) for item in obj]


@encode.register
def _(obj: dict):
    return {str(key): encode(value) for key, value in obj.items()}


@encode.register
def _(obj: pydantic.BaseModel):
    return encode(obj.model_dump(by_alias=True, exclude_none=True))


def dumps(obj) -> str:
    """Deterministic JSON text of an object

    Example:
    >>> print(dumps({"b": 1, "a": [np.float64(0.25)]}))
    {
      "a": [
        0.25
      ],
      "b": 1
    }
    """
    return json.dumps(encode(obj), sort_keys=True, indent=2, ensure_ascii=False)


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n", encoding="utf-8")
    return path


def write_csv(path: Path, header: list[str], rows) -> Path:
    """Writes rows to a CSV file; None becomes an empty cell"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if value is None else encode(value) for value in row])
    return path
