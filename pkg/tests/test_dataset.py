from __future__ import annotations

import json
import math

import pytest

from qramsim.dataset import DataRecord, Dataset, dataset_to_json, load_dataset
from qramsim.errors import DatasetError, NormalizationError


def test_from_pairs_and_properties():
    d = Dataset.from_pairs([(math.sqrt(0.3), "000"), (math.sqrt(0.7), "001")])
    assert d.n == 3 and d.M == 2
    assert d.normalized and d.is_real
    assert d.patterns == ["000", "001"]
    assert [r.index for r in d.records] == [0, 1]


def test_unnormalized_is_detected():
    d = Dataset.from_pairs([(0.5, "0"), (0.5, "1")])
    assert not d.normalized
    with pytest.raises(NormalizationError):
        Dataset.from_pairs([(0.5, "0"), (0.5, "1")], normalized=True)
    with pytest.raises(NormalizationError):
        d.require_normalized()


@pytest.mark.parametrize(
    "pairs, n, match",
    [
        ([(1.0, "01")], 3, "record 0"),
        ([(1.0, "0a")], 2, "record 0"),
        ([(0.6, "01"), (0.8, "01")], 2, "record 1.*duplicates record 0"),
        ([], 2, "no records"),
    ],
)
def test_validation_names_the_record(pairs, n, match):
    with pytest.raises(DatasetError, match=match):
        Dataset.from_pairs(pairs, n)


def test_too_many_records():
    recs = tuple(DataRecord(0.5, p) for p in ["0", "1"])
    Dataset(recs, 1)
    with pytest.raises(DatasetError):
        Dataset(recs + (DataRecord(0.5, "0"),), 1)


def test_non_finite_amplitude():
    with pytest.raises(DatasetError):
        DataRecord(float("nan"), "0")


def test_from_patterns_is_uniform():
    d = Dataset.from_patterns(["00", "01", "11"])
    assert all(abs(r.amplitude - 1 / math.sqrt(3)) <= 1e-15 for r in d.records)
    assert d.normalized


def test_json_round_trip(tmp_path):
    d = Dataset.from_pairs([(math.sqrt(0.1) - 1j * math.sqrt(0.2), "00"), (math.sqrt(0.7), "11")])
    path = tmp_path / "d.json"
    path.write_text(dataset_to_json(d))
    back = load_dataset(path)
    assert back == d


def test_csv_loader(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("pattern,re,im\n000,0.6,0\n101,0,0.8\n")
    d = load_dataset(path)
    assert d.n == 3 and d.amplitudes.tolist() == [0.6, 0.8j]


def test_csv_without_im_column(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("pattern,re\n0,0.6\n1,0.8\n")
    assert load_dataset(path).is_real


def test_malformed_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(DatasetError):
        load_dataset(bad)
    bad.write_text(json.dumps({"n": 2, "records": [{"re": 1.0}]}))
    with pytest.raises(DatasetError, match="record 0"):
        load_dataset(bad)
    bad.write_text(json.dumps([1, 2]))
    with pytest.raises(DatasetError):
        load_dataset(bad)
    with pytest.raises(OSError):
        load_dataset(tmp_path / "missing.json")


def test_width_from_json_is_enforced(tmp_path):
    path = tmp_path / "d.json"
    path.write_text(json.dumps({"n": 3, "records": [{"pattern": "01", "re": 1.0, "im": 0.0}]}))
    with pytest.raises(DatasetError):
        load_dataset(path)
