"""Cohort construction: label window semantics, splits, and the brute-force oracle."""

from datetime import date, timedelta

import pytest

from longimodel.domain import ClaimEvent, EventType, PatientTimeline, Sex, TargetSpec
from longimodel.errors import ConfigError, EmptyCohortError
from longimodel.ingestion.cohort import FirstEventRule, FixedDateRule, build_cohort, split_cohort
from longimodel.ingestion.synthetic import generate_synthetic

from conftest import make_generator_config

TARGET = TargetSpec(EventType.ADMISSION, frozenset({"ADM-UNPLANNED"}), 90)
INDEX = date(2020, 6, 1)


def patient(pid, offsets, birth=date(1960, 1, 1)):
    """Timeline with target admissions at INDEX + offset days (offset may be <= 0)."""
    events = [
        ClaimEvent(pid, INDEX + timedelta(days=off), EventType.ADMISSION, "ADM-UNPLANNED") for off in offsets
    ]
    events.append(ClaimEvent(pid, date(2019, 1, 1), EventType.DIAGNOSIS, "DX-001"))
    return PatientTimeline.build(pid, birth, Sex.F, events)


def brute_force_label(timeline, target, index):
    """Independent oracle: exhaustive scan with the window rule applied literally."""
    hits = 0
    for e in timeline.events:
        in_window = index < e.event_date <= index + timedelta(days=target.horizon_days)
        if e.event_type == target.event_type and e.code in target.code_set and in_window:
            hits += 1
    return 1 if hits else 0


class TestLabelWindow:
    def _label(self, offsets):
        cohort = build_cohort([patient("p1", offsets)], TARGET, FixedDateRule(INDEX), "c")
        return cohort.rows[0].label

    def test_event_inside_window_labels_one(self):
        assert self._label([30]) == 1

    def test_event_exactly_at_horizon_is_inclusive(self):
        assert self._label([90]) == 1

    def test_event_past_horizon_labels_zero(self):
        assert self._label([120]) == 0

    def test_event_at_index_is_excluded(self):
        assert self._label([0]) == 0

    def test_event_before_index_is_excluded(self):
        assert self._label([-10]) == 0


class TestIndexRules:
    def test_first_event_rule_picks_earliest_match(self):
        t = patient("p1", [30])
        rule = FirstEventRule(EventType.DIAGNOSIS, frozenset({"DX-001"}))
        cohort = build_cohort([t], TARGET, rule, "c")
        assert cohort.rows[0].index_date == date(2019, 1, 1)

    def test_no_index_date_raises_empty_cohort(self):
        t = patient("p1", [30])
        rule = FirstEventRule(EventType.DIAGNOSIS, frozenset({"DX-NEVER"}))
        with pytest.raises(EmptyCohortError):
            build_cohort([t], TARGET, rule, "c")

    def test_labels_match_brute_force_oracle_on_synthetic_population(self):
        timelines = generate_synthetic(make_generator_config(n_patients=500, seed=21))
        cohort = build_cohort(timelines, TARGET, FixedDateRule(date(2021, 3, 15)), "c")
        by_id = {t.patient_id: t for t in timelines}
        assert len(cohort.rows) == 500
        for row in cohort.rows:
            assert row.label == brute_force_label(by_id[row.patient_id], TARGET, row.index_date)

    def test_label_ignores_history_at_or_before_index(self):
        # identical future, different past: labels must agree
        future_only = patient("p1", [40])
        with_past = patient("p1", [40, -5, 0])
        rule = FixedDateRule(INDEX)
        a = build_cohort([future_only], TARGET, rule, "c").rows[0].label
        b = build_cohort([with_past], TARGET, rule, "c").rows[0].label
        assert a == b == 1


class TestSplit:
    def _cohort(self, n=100):
        timelines = [patient(f"p{i:03d}", [30] if i % 3 == 0 else []) for i in range(n)]
        return build_cohort(timelines, TARGET, FixedDateRule(INDEX), "c")

    def test_sizes_disjoint_union(self):
        cohort = self._cohort(100)
        train, test = split_cohort(cohort, (0.8, 0.2), seed=7)
        assert (len(train.rows), len(test.rows)) == (80, 20)
        train_ids = {r.patient_id for r in train.rows}
        test_ids = {r.patient_id for r in test.rows}
        assert not train_ids & test_ids
        assert train_ids | test_ids == {r.patient_id for r in cohort.rows}
        assert sorted(train.rows + test.rows, key=lambda r: r.patient_id) == list(cohort.rows)

    def test_deterministic_in_seed(self):
        cohort = self._cohort(60)
        assert split_cohort(cohort, (0.8, 0.2), seed=7) == split_cohort(cohort, (0.8, 0.2), seed=7)
        a, _ = split_cohort(cohort, (0.8, 0.2), seed=7)
        b, _ = split_cohort(cohort, (0.8, 0.2), seed=8)
        assert {r.patient_id for r in a.rows} != {r.patient_id for r in b.rows}

    def test_bad_fractions_rejected(self):
        cohort = self._cohort(10)
        with pytest.raises(ConfigError):
            split_cohort(cohort, (0.5, 0.6), seed=1)
        with pytest.raises(ConfigError):
            split_cohort(cohort, (1.0, 0.0), seed=1)

    def test_sub_cohorts_carry_fresh_digests(self):
        cohort = self._cohort(30)
        train, test = split_cohort(cohort, (0.8, 0.2), seed=3)
        assert train.verify() and test.verify()
        assert train.data_digest != test.data_digest != cohort.data_digest


class TestPersistence:
    def test_round_trip_verifies_sidecar_digest(self, tmp_path):
        from longimodel.ingestion.cohort import load_cohort, save_cohort

        timelines = [patient(f"p{i:02d}", [30] if i % 2 else []) for i in range(10)]
        cohort = build_cohort(timelines, TARGET, FixedDateRule(INDEX), "persist-me")
        save_cohort(tmp_path, cohort)
        loaded = load_cohort(tmp_path, "persist-me")
        assert loaded == cohort

    def test_tampered_rows_fail_digest_verification(self, tmp_path):
        from longimodel.errors import CorruptionError
        from longimodel.ingestion.cohort import load_cohort, save_cohort

        timelines = [patient(f"p{i:02d}", [30] if i % 2 else []) for i in range(10)]
        cohort = build_cohort(timelines, TARGET, FixedDateRule(INDEX), "tampered")
        path = save_cohort(tmp_path, cohort)
        lines = path.read_text().splitlines()
        assert '"label": 0' in lines[1]
        lines[1] = lines[1].replace('"label": 0', '"label": 1')
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CorruptionError):
            load_cohort(tmp_path, "tampered")
