"""Feature repository: catalog, generators, point-in-time value store."""

from .catalog import CatalogReceipt, FeatureCatalog, FeatureDefinition
from .generators import GeneratorRegistry, default_registry
from .presets import PLANTED_FEATURE, standard_claims_features
from .repository import (
    FeatureRepository,
    FeatureStore,
    FeatureValue,
    FeatureVector,
    MaterializeReport,
    numeric_value,
)

__all__ = [
    "CatalogReceipt",
    "FeatureCatalog",
    "FeatureDefinition",
    "FeatureRepository",
    "FeatureStore",
    "FeatureValue",
    "FeatureVector",
    "GeneratorRegistry",
    "MaterializeReport",
    "PLANTED_FEATURE",
    "default_registry",
    "numeric_value",
    "standard_claims_features",
]
