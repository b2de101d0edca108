"""End-to-end model over raw :class:`~defectlab.data.Dataset` objects."""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from .balancer import DistributionBalancer
from .data import DataError, Dataset, Feature, FeatureSchema, GlobalImputer, NominalEncoder
from .rbf import RbfNetwork, RBFNetworkClassifier

__all__ = ["DefectPipeline", "schema_to_dict", "schema_from_dict"]

PIPELINE_FORMAT = "defectlab.pipeline"
PIPELINE_VERSION = 1


def schema_to_dict(schema: FeatureSchema) -> dict:
    def feat(f: Feature):
        return {"name": f.name, "categories": list(f.categories) if f.is_nominal else None}

    return {
        "relation": schema.relation,
        "features": [feat(f) for f in schema.features],
        "class": feat(schema.class_feature),
    }


def schema_from_dict(doc: dict) -> FeatureSchema:
    def feat(d):
        cats = d.get("categories")
        return Feature(d["name"], tuple(cats) if cats is not None else None)

    return FeatureSchema(tuple(feat(f) for f in doc["features"]), feat(doc["class"]), doc.get("relation", "dataset"))


class DefectPipeline(BaseEstimator):
    """Impute, encode, optionally balance, then fit the RBF classifier."""

    def __init__(self, classifier=None, balancer=None, random_state=0):
        self.classifier = classifier
        self.balancer = balancer
        self.random_state = random_state

    def fit(self, d: Dataset, y=None):
        seeds = np.random.SeedSequence(self.random_state).generate_state(2, dtype=np.uint64)
        self.imputer_ = GlobalImputer().fit(d)
        self.encoder_ = NominalEncoder().fit(d)
        enc = self.encoder_.transform(self.imputer_.transform(d))
        X, y = enc.matrix, enc.labels
        if self.balancer is not None:
            b = clone(self.balancer).set_params(
                onehot_groups=enc.onehot_groups, binary_columns=enc.binary_columns, random_state=int(seeds[0])
            )
            X, y = b.fit_resample(X, y)
        clf = clone(self.classifier) if self.classifier is not None else RBFNetworkClassifier()
        self.classifier_ = clf.set_params(random_state=int(seeds[1])).fit(X, y)
        self.schema_ = d.schema
        return self

    def _encode(self, d: Dataset):
        check_is_fitted(self, "classifier_")
        if d.schema.features != self.schema_.features:
            raise DataError("dataset features differ from the training schema")
        if d.schema.classes != self.schema_.classes:
            d = Dataset(self.schema_, d.values, d.missing, d.labels)
        return self.encoder_.transform(self.imputer_.transform(d))

    def decision_function(self, d: Dataset) -> np.ndarray:
        """Scores over every schema class; classes unseen in training score -inf."""
        enc = self._encode(d)
        raw = self.classifier_.decision_function(enc.matrix)
        out = np.full((enc.n_rows, len(self.schema_.classes)), -np.inf)
        out[:, self.classifier_.classes_.astype(int)] = raw
        return out

    def predict(self, d: Dataset) -> np.ndarray:
        """Predicted class indices into the schema's class list."""
        enc = self._encode(d)
        return self.classifier_.predict(enc.matrix).astype(int)

    def to_json(self) -> str:
        check_is_fitted(self, "classifier_")
        doc = {
            "format": PIPELINE_FORMAT,
            "version": PIPELINE_VERSION,
            "schema": schema_to_dict(self.schema_),
            "fill_values": self.imputer_.fill_values_.tolist(),
            "network": self.classifier_.network_.to_dict(),
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "DefectPipeline":
        doc = json.loads(text)
        if doc.get("format") != PIPELINE_FORMAT or doc.get("version") != PIPELINE_VERSION:
            raise ValueError("not a serialized defectlab pipeline (or unsupported version)")
        schema = schema_from_dict(doc["schema"])
        pipe = cls()
        pipe.schema_ = schema
        pipe.imputer_ = GlobalImputer()
        pipe.imputer_.schema_ = schema
        pipe.imputer_.fill_values_ = np.array(doc["fill_values"], dtype=float)
        dummy = Dataset(schema, np.zeros((0, schema.n_features)), np.zeros((0, schema.n_features), bool), [])
        pipe.encoder_ = NominalEncoder().fit(dummy)
        net = RbfNetwork.from_dict(doc["network"])
        pipe.classifier_ = RBFNetworkClassifier.from_network(net)
        return pipe
