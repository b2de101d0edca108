import json

import numpy as np
import pytest

from defectlab.balancer import DistributionBalancer
from defectlab.config import ConfigError, load_config, parse_config
from defectlab.data import DataError, parse_csv
from defectlab.pipeline import DefectPipeline
from defectlab.rbf import RBFNetworkClassifier

from conftest import two_blob


def test_pipeline_round_trip(mixed_dataset):
    pipe = DefectPipeline(RBFNetworkClassifier(n_centers=2), DistributionBalancer(b=10)).fit(mixed_dataset)
    clone = DefectPipeline.from_json(pipe.to_json())
    assert np.array_equal(clone.decision_function(mixed_dataset), pipe.decision_function(mixed_dataset))
    assert np.array_equal(clone.predict(mixed_dataset), pipe.predict(mixed_dataset))


def test_pipeline_learns_blobs():
    d = two_blob(50, 50)
    pipe = DefectPipeline(RBFNetworkClassifier(n_centers=2), None).fit(d)
    assert (pipe.predict(d) == d.labels).mean() == 1.0


def test_pipeline_rejects_other_features(mixed_dataset):
    pipe = DefectPipeline().fit(mixed_dataset)
    with pytest.raises(DataError):
        pipe.predict(parse_csv("a,cls\n1,clean\n2,buggy\n"))


def test_pipeline_rejects_foreign_json():
    with pytest.raises(ValueError):
        DefectPipeline.from_json(json.dumps({"format": "other", "version": 1}))


def test_config_defaults(tmp_path):
    cfg = parse_config({"datasets": [{"path": "x.csv"}], "cv": {"seed": 3}}, tmp_path)
    assert cfg.datasets[0].name == "x"
    assert cfg.datasets[0].path == tmp_path / "x.csv"
    assert cfg.balance == {"b": 30}
    assert (cfg.folds, cfg.mode, cfg.seed) == (10, "leakfree", 3)
    assert cfg.make_balancer().b == 30
    assert cfg.make_classifier().n_centers == 1
    json.dumps(cfg.echo())


@pytest.mark.parametrize(
    "doc",
    [
        {"extra": 1},
        {"datasets": [{"path": "a", "colour": 1}]},
        {"datasets": [{"name": "a"}]},
        {"cv": {"folds": 1}},
        {"cv": {"mode": "both"}},
        {"cv": {"seed": -1}},
        {"classifier": {"n_centre": 2}},
        {"classifier": {"ridge": -1}},
        {"balance": {"b": 0}},
        {"output": {"formats": ["pdf"]}},
        {"datasets": [{"path": "a.csv"}, {"path": "b/a.csv"}]},
    ],
)
def test_config_errors(doc):
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "none.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_balance_can_be_disabled():
    assert parse_config({"balance": None}).make_balancer() is None
