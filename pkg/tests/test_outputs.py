import json
import os

import numpy as np
import pytest

from oubridge.outputs import atomic_write, csv_with_header, dumps_json


def test_dumps_json_sorted_and_numpy_safe():
    text = dumps_json({"b": np.float64(1.5), "a": np.arange(2), "c": float("nan")})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0, 1], "b": 1.5, "c": None}


def test_csv_header_echo():
    text = csv_with_header({"seed": 3}, "x\n1\n")
    assert text.splitlines()[0] == '# config: {"seed": 3}'


def test_atomic_write_leaves_no_partial(tmp_path):
    target = tmp_path / "out.txt"
    atomic_write(target, "one")
    class Boom:
        def __str__(self):
            raise RuntimeError
    with pytest.raises(TypeError):
        atomic_write(target, Boom())
    assert target.read_text() == "one"
    assert os.listdir(tmp_path) == ["out.txt"]
