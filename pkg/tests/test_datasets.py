"""Dataset loading, validation aggregation, and the round-trip property."""

from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from execgym.data.loader import instances_from, load, write
from execgym.errors import DatasetFormatError, DatasetValidationError


def test_json_array(tmp_path):
    path = tmp_path / "d.json"
    path.write_text(json.dumps([
        {"query": "q0", "gold": "g0"},
        {"query": "q1", "gold": "g1", "hardness": "easy"},
        {"id": "custom", "query": "q2", "gold": "g2"},
    ]))
    manifest, instances = load(path)
    assert manifest.format == "json-array"
    assert manifest.count == 3
    assert manifest.extras_keys == {"hardness"}
    assert [i.id for i in instances] == ["0", "1", "custom"]
    assert instances[1].extras == {"hardness": "easy"}


def test_json_lines(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text('{"query": "q", "gold": "g", "extras": {"fs": 2}}\n\n{"query": "r", "gold": "s"}\n')
    manifest, instances = load(path)
    assert manifest.format == "json-lines"
    assert manifest.count == 2
    assert instances[0].extras == {"fs": 2}


def test_missing_gold_named_by_record(tmp_path):
    path = tmp_path / "d.json"
    path.write_text(json.dumps([
        {"query": "fine", "gold": "ok"},
        {"query": "broken"},
    ]))
    with pytest.raises(DatasetValidationError) as err:
        load(path)
    assert err.value.problems[0][0] == 1
    assert "gold" in err.value.problems[0][1]


def test_duplicate_ids_rejected(tmp_path):
    path = tmp_path / "d.json"
    path.write_text(json.dumps([
        {"id": "x", "query": "a", "gold": "b"},
        {"id": "x", "query": "c", "gold": "d"},
    ]))
    with pytest.raises(DatasetValidationError) as err:
        load(path)
    assert "duplicate" in str(err.value)


def test_unknown_format(tmp_path):
    path = tmp_path / "d.txt"
    path.write_text("query,gold\nq,g\n")
    with pytest.raises(DatasetFormatError):
        load(path)


def test_missing_file():
    with pytest.raises(DatasetFormatError):
        load("/no/such/dataset.json")


def test_empty_file(tmp_path):
    path = tmp_path / "d.json"
    path.write_text("")
    with pytest.raises(DatasetFormatError):
        load(path)


_record = st.fixed_dictionaries(
    {"query": st.text(min_size=1).filter(str.strip), "gold": st.text(min_size=1).filter(str.strip)},
    optional={
        "hardness": st.sampled_from(["easy", "medium", "hard", "extra"]),
        "fs": st.integers(1, 3),
    },
)


@given(st.lists(_record, min_size=1, max_size=8), st.sampled_from(["json-array", "json-lines"]))
def test_round_trip_identity(records, fmt):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / ("d.json" if fmt == "json-array" else "d.jsonl")
        if fmt == "json-array":
            path.write_text(json.dumps(records))
        else:
            path.write_text("\n".join(json.dumps(r) for r in records))
        _, first = load(path)
        again = write(first, Path(tmp) / "again.json", format=fmt)
        _, second = load(again)
        assert [(i.id, i.query, i.gold, i.extras) for i in first] == [
            (i.id, i.query, i.gold, i.extras) for i in second
        ]


def test_instances_from_variants(tmp_path):
    path = tmp_path / "d.json"
    path.write_text(json.dumps([{"query": "q", "gold": "g"}]))
    from_path = instances_from(str(path))
    from_pair = instances_from(load(path))
    from_list = instances_from(from_path)
    assert from_path[0].query == from_pair[0].query == from_list[0].query
    with pytest.raises(TypeError):
        instances_from(42)
