"""Data acquisition: synthetic generation, source normalization, cohort construction."""

from .cohort import FirstEventRule, FixedDateRule, IndexRule, build_cohort, load_cohort, save_cohort, split_cohort
from .normalize import NormalizeResult, RawSourceRecord, SourceMapping, normalize_to_cdm
from .synthetic import (
    RISK_DIAGNOSIS_CODE,
    TARGET_ADMISSION_CODE,
    GeneratorConfig,
    anchor_date,
    generate_synthetic,
)

__all__ = [
    "FirstEventRule",
    "FixedDateRule",
    "GeneratorConfig",
    "IndexRule",
    "NormalizeResult",
    "RISK_DIAGNOSIS_CODE",
    "RawSourceRecord",
    "SourceMapping",
    "TARGET_ADMISSION_CODE",
    "anchor_date",
    "build_cohort",
    "generate_synthetic",
    "load_cohort",
    "normalize_to_cdm",
    "save_cohort",
    "split_cohort",
]
