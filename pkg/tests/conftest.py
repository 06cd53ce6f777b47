"""Shared fixtures: synthetic populations and a fully trained workspace."""

from __future__ import annotations

from datetime import date
from pathlib import Path

import pytest

_acceptance_results: list[tuple[str, bool]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance_results.append((report.nodeid.split("::")[-1], report.passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, passed in _acceptance_results:
            terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}")

from longimodel.domain import EventType, TargetSpec
from longimodel.features.presets import standard_claims_features
from longimodel.ingestion.cohort import FixedDateRule, build_cohort, save_cohort
from longimodel.ingestion.synthetic import GeneratorConfig, anchor_date, generate_synthetic
from longimodel.timelines import save_timelines
from longimodel.training.pipeline import TrainConfig, run_pipeline
from longimodel.workspace import Workspace

TASK_ID = "unplanned_admission_90d"
TARGET = TargetSpec(EventType.ADMISSION, frozenset({"ADM-UNPLANNED"}), 90)


def make_generator_config(
    seed: int = 42, n_patients: int = 400, injection: float = 0.3, mean_events: float = 12.0, **kwargs
) -> GeneratorConfig:
    return GeneratorConfig(
        seed=seed,
        n_patients=n_patients,
        mean_events_per_patient=mean_events,
        date_range=(date(2018, 1, 1), date(2021, 12, 31)),
        target_injection_rate=injection,
        **kwargs,
    )


def catalog_refs(ws: Workspace) -> tuple[tuple[str, int], ...]:
    refs = []
    for name in ws.features.catalog.names():
        fdef = ws.features.catalog.get(name)
        if fdef.value_type == "numeric":
            refs.append((name, fdef.version))
    return tuple(refs)


def build_workspace(
    root: Path, seed: int = 42, n_patients: int = 400, injection: float = 0.3, mean_events: float = 12.0
) -> tuple[Workspace, GeneratorConfig]:
    """Populate a data root with timelines, features, and a cohort 'c1'."""
    cfg = make_generator_config(seed=seed, n_patients=n_patients, injection=injection, mean_events=mean_events)
    timelines = generate_synthetic(cfg)
    save_timelines(root, "main", timelines)
    ws = Workspace(root)
    for draft in standard_claims_features():
        ws.features.register_feature(draft)
    cohort = build_cohort(ws.timelines.all(), TARGET, FixedDateRule(anchor_date(cfg)), "c1")
    save_cohort(root, cohort)
    return ws, cfg


def train_model(ws: Workspace, seed: int = 0, task_id: str = TASK_ID, model_id: str | None = None):
    train_cfg = TrainConfig(
        task_id=task_id,
        cohort_id="c1",
        feature_refs=catalog_refs(ws),
        model_id=model_id,
    )
    if seed:
        from longimodel.training.logreg import Hyperparameters

        train_cfg = TrainConfig(
            task_id=task_id,
            cohort_id="c1",
            feature_refs=catalog_refs(ws),
            hyperparameters=Hyperparameters(seed=seed),
            model_id=model_id,
        )
    return run_pipeline(train_cfg, ws)


@pytest.fixture(scope="session")
def trained_root(tmp_path_factory) -> Path:
    """A data root with a trained, Production-promoted model."""
    root = tmp_path_factory.mktemp("trained")
    ws, _ = build_workspace(root)
    result = train_model(ws)
    ws.registry.transition_stage(result.model_id, result.version, "Staging", actor="tests")
    ws.registry.transition_stage(result.model_id, result.version, "Production", actor="tests")
    return root


@pytest.fixture(scope="session")
def trained_ws(trained_root) -> Workspace:
    return Workspace(trained_root)
