import json

import numpy as np
import pytest

from relubasin.datasets import ClusteredSpec, gen_clustered
from relubasin.init import InitDistribution, sample_deep, sample_two_layer
from relubasin.io import (DataFormatError, dataset_from_csv, dataset_to_csv, params_from_dict,
                          params_to_dict, read_dataset, read_params, write_dataset, write_params,
                          write_records_csv)
from relubasin.nets import Dataset, prediction_matrix


def test_dataset_csv_roundtrip_exact(rng):
    data = Dataset(rng.standard_normal((5, 3)), rng.standard_normal((5, 2)), k=2)
    back = dataset_from_csv(dataset_to_csv(data))
    assert np.array_equal(back.X, data.X) and np.array_equal(back.y, data.y)
    assert (back.k, back.loss) == (2, "squared")


def test_cross_entropy_labels_roundtrip(rng):
    data = Dataset(rng.standard_normal((4, 2)), [0, 2, 1, 2], loss="cross_entropy", k=3)
    text = dataset_to_csv(data)
    assert text.splitlines()[1].endswith(",0")
    back = dataset_from_csv(text)
    assert back.y.tolist() == [0, 2, 1, 2]


def test_name_row_accepted():
    text = "d,m,k,loss\n1,2,1,squared\n1.0,2.0\n-1.0,0.5\n"
    data = dataset_from_csv(text)
    assert data.X[:, 0].tolist() == [1.0, -1.0]


@pytest.mark.parametrize("text,where,what", [
    ("", ":1", "empty"),
    ("1,2,1\n", ":1", "header"),
    ("1,1,1,squared\n1.0,abc\n", ":2", "field 2 is not a number"),
    ("1,2,1,squared\n1.0,2.0\n", ":2", "m=2"),
    ("2,1,1,squared\n1.0,2.0\n", ":2", "expected 3 fields"),
    ("1,1,1,squared\n1.0,nan\n", ":2", "not finite"),
])
def test_parse_errors_carry_location(text, where, what):
    with pytest.raises(DataFormatError) as exc:
        dataset_from_csv(text, "f.csv")
    assert exc.value.location.startswith("f.csv" + where)
    assert what in str(exc.value)


def test_sidecar_restores_provenance(tmp_path):
    data = gen_clustered(ClusteredSpec(d=4, k=2, counts=3), seed=5)
    write_dataset(data, tmp_path / "dataset.csv")
    back = read_dataset(tmp_path / "dataset.csv")
    assert back.provenance == "clustered"
    assert back.cluster_ids.tolist() == data.cluster_ids.tolist()
    assert back.meta["delta"] == data.meta["delta"]
    assert np.array_equal(back.X, data.X)


def test_params_roundtrip(tmp_path, rng):
    data = Dataset(rng.standard_normal((4, 3)), rng.standard_normal(4))
    p = sample_two_layer(InitDistribution(), 5, 3, 1)
    write_params(p, tmp_path / "p.json")
    q = read_params(tmp_path / "p.json")
    assert np.array_equal(q.W, p.W) and np.array_equal(q.v, p.v)
    deep = sample_deep(InitDistribution(), [3, 4, 2, 1], 2)
    back = params_from_dict(json.loads(json.dumps(params_to_dict(deep))))
    assert np.array_equal(prediction_matrix(back, data), prediction_matrix(deep, data))


def test_params_errors(tmp_path):
    with pytest.raises(DataFormatError, match="missing field 'v'"):
        params_from_dict({"n": 1, "d": 1, "W": [1.0]})
    with pytest.raises(DataFormatError, match="expected n\\*d = 4"):
        params_from_dict({"n": 2, "d": 2, "W": [1.0], "v": [1.0, 1.0]})
    with pytest.raises(DataFormatError, match="unknown params type"):
        params_from_dict({"type": "conv"})
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"n\": 1,\n  oops\n}")
    with pytest.raises(DataFormatError) as exc:
        read_params(bad)
    assert exc.value.location == f"{bad}:3"


def test_records_csv_column_order(tmp_path):
    write_records_csv([{"event": True, "trial": 0, "v": 0.1}, {"trial": 1, "extra": [1, 2]}],
                      tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "trial,event,v,extra"
    assert lines[1] == "0,True,0.1,"
    assert lines[2] == '1,,,"[1, 2]"'
