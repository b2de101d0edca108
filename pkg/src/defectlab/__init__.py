"""Defect prediction with distribution-based balancing and RBF networks."""

__version__ = "0.1.0"

from .balancer import DistributionBalancer, balance
from .data import (
    MISSING,
    Dataset,
    EncodedDataset,
    Feature,
    FeatureSchema,
    GlobalImputer,
    NominalEncoder,
    decode,
    encode,
    impute_global,
    parse_arff,
    parse_csv,
    read_dataset,
    write_arff,
    write_csv,
)
from .evaluation import cross_validate
from .metrics import auc, confusion_matrix, metrics, wdl
from .pipeline import DefectPipeline
from .rbf import RBFNetworkClassifier, RbfNetwork, kmeans, solve_output_weights

__all__ = [
    "MISSING",
    "Dataset",
    "DefectPipeline",
    "DistributionBalancer",
    "EncodedDataset",
    "Feature",
    "FeatureSchema",
    "GlobalImputer",
    "NominalEncoder",
    "RBFNetworkClassifier",
    "RbfNetwork",
    "auc",
    "bundled",
    "balance",
    "confusion_matrix",
    "cross_validate",
    "decode",
    "encode",
    "impute_global",
    "kmeans",
    "metrics",
    "parse_arff",
    "parse_csv",
    "read_dataset",
    "solve_output_weights",
    "wdl",
    "write_arff",
    "write_csv",
]


def bundled(name: str):
    """Path to a dataset or config shipped in the package's fixtures folder."""
    from importlib.resources import files

    return files(__name__) / "fixtures" / name
