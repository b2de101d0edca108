"""Experiment configuration (JSON). Unknown keys are rejected."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .balancer import DistributionBalancer
from .rbf import RBFNetworkClassifier

__all__ = ["ConfigError", "DatasetSpec", "ExperimentConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    pass


BALANCE_KEYS = {"b", "family", "sigma_floor"}
CLASSIFIER_KEYS = {
    "mode",
    "n_centers",
    "width",
    "ridge",
    "max_error",
    "max_neurons",
    "output_activation",
    "kmeans_iters",
}
CV_KEYS = {"folds", "mode", "seed", "stratified"}
OUTPUT_KEYS = {"directory", "formats"}
DATASET_KEYS = {"name", "path", "format", "class_column", "positive_label"}
TOP_KEYS = {"datasets", "balance", "classifier", "cv", "output"}
FORMATS = ("csv", "md")


@dataclass
class DatasetSpec:
    path: Path
    name: str
    format: str | None = None
    class_column: str | int = -1
    positive_label: str | None = None


@dataclass
class ExperimentConfig:
    datasets: list[DatasetSpec]
    balance: dict | None = field(default_factory=lambda: {"b": 30})
    classifier: dict = field(default_factory=dict)
    folds: int = 10
    mode: str = "leakfree"
    seed: int | None = None
    stratified: bool = True
    output_dir: Path = Path("results")
    formats: tuple[str, ...] = FORMATS

    def make_balancer(self):
        return DistributionBalancer(**self.balance) if self.balance is not None else None

    def make_classifier(self):
        return RBFNetworkClassifier(**self.classifier)

    def echo(self) -> dict:
        doc = asdict(self)
        doc["datasets"] = [{**asdict(d), "path": str(d.path)} for d in self.datasets]
        doc["output_dir"] = str(self.output_dir)
        doc["formats"] = list(self.formats)
        return doc


def _check_keys(section: dict, allowed: set, where: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def parse_config(doc: dict, base_dir: Path | str = ".") -> ExperimentConfig:
    base_dir = Path(base_dir)
    _check_keys(doc, TOP_KEYS, "config")
    datasets = []
    for i, ds in enumerate(doc.get("datasets", [])):
        _check_keys(ds, DATASET_KEYS, f"datasets[{i}]")
        if "path" not in ds:
            raise ConfigError(f"datasets[{i}] needs a path")
        path = Path(ds["path"])
        if not path.is_absolute():
            path = base_dir / path
        datasets.append(
            DatasetSpec(
                path=path,
                name=ds.get("name", path.stem),
                format=ds.get("format"),
                class_column=ds.get("class_column", -1),
                positive_label=ds.get("positive_label"),
            )
        )
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ConfigError("dataset names must be unique")

    balance = doc.get("balance", {"b": 30})
    if balance is not None:
        _check_keys(balance, BALANCE_KEYS, "balance")
    classifier = doc.get("classifier", {})
    _check_keys(classifier, CLASSIFIER_KEYS, "classifier")
    cv = doc.get("cv", {})
    _check_keys(cv, CV_KEYS, "cv")
    out = doc.get("output", {})
    _check_keys(out, OUTPUT_KEYS, "output")

    cfg = ExperimentConfig(
        datasets=datasets,
        balance=balance,
        classifier=classifier,
        folds=cv.get("folds", 10),
        mode=cv.get("mode", "leakfree"),
        seed=cv.get("seed"),
        stratified=cv.get("stratified", True),
        output_dir=base_dir / out.get("directory", "results"),
        formats=tuple(out.get("formats", FORMATS)),
    )
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig):
    if not isinstance(cfg.folds, int) or cfg.folds < 2:
        raise ConfigError("cv.folds must be an integer >= 2")
    if cfg.mode not in ("paper", "leakfree"):
        raise ConfigError("cv.mode must be 'paper' or 'leakfree'")
    if cfg.seed is not None and (not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64):
        raise ConfigError("cv.seed must be an unsigned 64-bit integer")
    bad = [f for f in cfg.formats if f not in FORMATS]
    if bad:
        raise ConfigError(f"unknown report format(s): {bad}")
    try:
        if cfg.balance is not None:
            DistributionBalancer(**cfg.balance)._check_params()
        RBFNetworkClassifier(**cfg.classifier)._check_params()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc, path.parent)
