"""Standard claims feature set used by the demo and acceptance workloads."""

from __future__ import annotations

from ..domain import EventType
from ..ingestion.synthetic import PLANNED_ADMISSION_CODE, RISK_DIAGNOSIS_CODE, TARGET_ADMISSION_CODE
from .catalog import FeatureDefinition

PLANTED_FEATURE = f"ever_{RISK_DIAGNOSIS_CODE.lower().replace('-', '_')}"


def _indicator(code: str, group: str) -> FeatureDefinition:
    name = f"ever_{code.lower().replace('-', '_')}"
    return FeatureDefinition(
        name=name, version=1, generator_id="code_indicator", params={"code": code}, group_id=group
    )


def standard_claims_features(n_dx_codes: int = 30) -> list[FeatureDefinition]:
    """Demographics, code history flags, utilization counts, and derived scores.

    Definitions are returned in registration order (dependencies first).
    """
    defs: list[FeatureDefinition] = [
        FeatureDefinition(name="age_at_index", version=1, generator_id="age_at_index"),
        FeatureDefinition(name="sex_female", version=1, generator_id="sex_indicator"),
    ]

    for i in range(1, n_dx_codes + 1):
        defs.append(_indicator(f"DX-{i:03d}", group="code_flags"))
    defs.append(_indicator(TARGET_ADMISSION_CODE, group="code_flags"))
    defs.append(_indicator(PLANNED_ADMISSION_CODE, group="code_flags"))

    windows = [
        ("dx_count_90d", EventType.DIAGNOSIS, 90),
        ("dx_count_365d", EventType.DIAGNOSIS, 365),
        ("px_count_365d", EventType.PROCEDURE, 365),
        ("rx_count_90d", EventType.PHARMACY, 90),
        ("rx_count_365d", EventType.PHARMACY, 365),
        ("adm_count_365d", EventType.ADMISSION, 365),
    ]
    for name, etype, days in windows:
        defs.append(
            FeatureDefinition(
                name=name,
                version=1,
                generator_id="event_count_window",
                params={"event_type": etype.value, "window_days": days},
                group_id="window_counts",
            )
        )

    defs.append(
        FeatureDefinition(
            name="high_dx_burden",
            version=1,
            generator_id="threshold_flag",
            params={"threshold": 8},
            dependencies=("dx_count_365d",),
        )
    )
    defs.append(
        FeatureDefinition(
            name="utilization_score",
            version=1,
            generator_id="weighted_sum",
            params={"weights": {"dx_count_365d": 1.0, "rx_count_365d": 0.5, "adm_count_365d": 2.0}},
            dependencies=("dx_count_365d", "rx_count_365d", "adm_count_365d"),
        )
    )
    defs.append(
        FeatureDefinition(
            name="frailty_proxy",
            version=1,
            generator_id="weighted_sum",
            params={"weights": {"age_at_index": 0.05, "utilization_score": 0.25}},
            dependencies=("age_at_index", "utilization_score"),
        )
    )
    return defs
