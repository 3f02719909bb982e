import os

import pytest

from wageimpute.domain import MODEL_IMPUTED
from wageimpute.errors import ConfigError
from wageimpute.io import atomic_write, read_dataset, read_json, write_dataset, write_json


def test_dataset_round_trip(tmp_path, partial_population):
    ds, _ = partial_population
    write_dataset(ds, tmp_path)
    assert sorted(os.listdir(tmp_path)) == ["establishments.csv", "grid.csv", "panels.csv"]
    back = read_dataset(tmp_path)
    assert back == ds


def test_absent_counts_are_empty_cells(tmp_path, partial_population):
    ds, _ = partial_population
    write_dataset(ds, tmp_path)
    lines = (tmp_path / "panels.csv").read_text().splitlines()
    assert lines[0].startswith("estab_id,soc,total,c1,")
    absent = next(p for p in ds.panels if p.absent)
    row = next(l for l in lines if l.startswith(absent.estab_id + ","))
    assert row.endswith("," * 12)


def test_provenance_column_round_trip(tmp_path, partial_population):
    ds, _ = partial_population
    p0 = ds.panels[0].with_counts([1] + [0] * 11, MODEL_IMPUTED)
    p0 = type(p0)(p0.estab_id, p0.soc, 1, p0.counts, MODEL_IMPUTED)
    ds = ds.replace_panels((p0,) + ds.panels[1:])
    write_dataset(ds, tmp_path, provenance=True)
    assert read_dataset(tmp_path).panels[0].provenance == MODEL_IMPUTED


def test_bad_inputs_raise_config_error(tmp_path):
    with pytest.raises(ConfigError):
        read_dataset(tmp_path)
    (tmp_path / "grid.csv").write_text("a1,a2\n1,2\n")
    with pytest.raises(ConfigError):
        read_dataset(tmp_path)


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    target = tmp_path / "out.txt"
    atomic_write(target, "one")
    atomic_write(target, "two")
    assert target.read_text() == "two"
    assert os.listdir(tmp_path) == ["out.txt"]


def test_json_is_sorted_and_stable(tmp_path):
    write_json(tmp_path / "a.json", {"b": 1, "a": [1.5, 2]})
    text = (tmp_path / "a.json").read_text()
    assert text.index('"a"') < text.index('"b"')
    assert read_json(tmp_path / "a.json") == {"a": [1.5, 2], "b": 1}
