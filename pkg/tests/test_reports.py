import math

import numpy as np

from morsekit.reports import canonical, config_hash, jsonable, write_csv, write_report


def test_jsonable_tags_infinity_and_unwraps_numpy():
    out = jsonable({"a": np.float64(math.inf), "b": -math.inf, "c": np.int64(3), "d": np.arange(2),
                    "e": (1.5, None), "f": math.nan, "g": np.bool_(True)})
    assert out == {"a": "INF", "b": "-INF", "c": 3, "d": [0, 1], "e": [1.5, None], "f": "NaN", "g": True}


def test_canonical_sorts_keys():
    assert canonical({"b": 1, "a": 2}) == canonical({"a": 2, "b": 1})


def test_config_hash_ignores_key_order():
    assert config_hash({"x": 1, "y": [1, 2]}) == config_hash({"y": [1, 2], "x": 1})
    assert config_hash({"x": 1}) != config_hash({"x": 2})


def test_write_report_and_csv(tmp_path):
    p = write_report(tmp_path, "r", "demo", {"seed": 1}, {"v": math.inf})
    assert '"v": "INF"' in p.read_text()
    c = write_csv(tmp_path / "t.csv", ["a", "b"], [(1, math.inf)])
    assert c.read_text() == "a,b\n1,INF\n"
