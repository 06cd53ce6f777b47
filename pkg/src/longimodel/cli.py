"""Operator command surface: thin orchestration over the library modules.

Exit codes: 0 success, 1 domain error, 2 usage error. ``--json`` switches
output to structured records.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import date
from pathlib import Path

import numpy as np

from .config import CliConfig, load_config
from .domain import Digest, EventType, TargetSpec
from .errors import ConfigError, LongimodelError
from .features.catalog import FeatureDefinition
from .features.presets import standard_claims_features
from .ingestion.cohort import FirstEventRule, FixedDateRule, build_cohort, load_cohort, save_cohort, split_cohort
from .ingestion.normalize import RawSourceRecord, normalize_to_cdm
from .ingestion.synthetic import GeneratorConfig, anchor_date, generate_synthetic
from .persist import read_jsonl
from .timelines import TimelineStore, save_events, save_timelines
from .training.pipeline import TrainConfig, run_pipeline
from .workspace import Workspace


class Output:
    def __init__(self, as_json: bool):
        self.as_json = as_json

    def emit(self, doc: dict, text: str) -> None:
        print(json.dumps(doc, default=str) if self.as_json else text)

    def table(self, doc: dict, rows: list[str]) -> None:
        if self.as_json:
            print(json.dumps(doc, default=str))
        else:
            for row in rows:
                print(row)


def _parse_date(s: str) -> date:
    try:
        return date.fromisoformat(s)
    except ValueError as exc:
        raise ConfigError(f"invalid date: {s}") from exc


def _parse_index_rule(spec: str):
    kind, _, rest = spec.partition(":")
    if kind == "fixed":
        return FixedDateRule(_parse_date(rest))
    if kind == "first":
        etype, _, codes = rest.partition(":")
        if not etype or not codes:
            raise ConfigError("first rule needs first:<event_type>:<code,...>")
        return FirstEventRule(EventType(etype), frozenset(codes.split(",")))
    raise ConfigError(f"unknown index rule: {spec} (expected fixed:<date> or first:<type>:<codes>)")


# -- handlers -------------------------------------------------------------------


def cmd_ingest_generate(args, cfg: CliConfig, out: Output) -> int:
    gen_cfg = GeneratorConfig(
        seed=args.seed if args.seed is not None else cfg.default_seed,
        n_patients=args.n_patients,
        mean_events_per_patient=args.mean_events,
        date_range=(_parse_date(args.start), _parse_date(args.end)),
        target_injection_rate=args.injection_rate,
        id_prefix=args.id_prefix,
    )
    timelines = generate_synthetic(gen_cfg)
    events_path, patients_path = save_timelines(cfg.data_root, args.tag, timelines)
    n_events = sum(len(t.events) for t in timelines)
    doc = {
        "tag": args.tag,
        "patients": len(timelines),
        "events": n_events,
        "anchor_date": anchor_date(gen_cfg).isoformat(),
        "events_path": str(events_path),
        "patients_path": str(patients_path),
    }
    out.emit(doc, f"generated {len(timelines)} patients / {n_events} events -> {events_path} (anchor {doc['anchor_date']})")
    return 0


def cmd_ingest_normalize(args, cfg: CliConfig, out: Output) -> int:
    records = [RawSourceRecord(args.source, doc) for doc in read_jsonl(args.input)]
    result = normalize_to_cdm(records)
    events_path = Path(cfg.data_root) / f"events-{args.tag}.jsonl"
    save_events(events_path, result.events)
    doc = {
        "events": len(result.events),
        "rejects": [{"reason": r.reason, "payload": dict(r.record.payload)} for r in result.rejects],
        "events_path": str(events_path),
    }
    out.emit(doc, f"normalized {len(result.events)} events, {len(result.rejects)} rejects -> {events_path}")
    return 0


def cmd_cohort_build(args, cfg: CliConfig, out: Output) -> int:
    tags = args.tags.split(",") if args.tags else None
    store = TimelineStore.load(cfg.data_root, tags)
    target = TargetSpec(
        event_type=EventType(args.target_type),
        code_set=frozenset(args.target_codes.split(",")),
        horizon_days=args.horizon,
    )
    cohort = build_cohort(store.all(), target, _parse_index_rule(args.index), args.id)
    path = save_cohort(cfg.data_root, cohort)
    prevalence = sum(r.label for r in cohort.rows) / len(cohort.rows)
    doc = {
        "cohort_id": cohort.cohort_id,
        "rows": len(cohort.rows),
        "prevalence": prevalence,
        "digest": cohort.data_digest.hex,
        "path": str(path),
    }
    out.emit(doc, f"cohort {cohort.cohort_id}: {len(cohort.rows)} rows, prevalence {prevalence:.3f}, digest {cohort.data_digest.hex}")
    return 0


def cmd_cohort_split(args, cfg: CliConfig, out: Output) -> int:
    cohort = load_cohort(cfg.data_root, args.id)
    train, test = split_cohort(cohort, (args.train, args.test), args.seed)
    save_cohort(cfg.data_root, train)
    save_cohort(cfg.data_root, test)
    doc = {
        "train": {"cohort_id": train.cohort_id, "rows": len(train.rows), "digest": train.data_digest.hex},
        "test": {"cohort_id": test.cohort_id, "rows": len(test.rows), "digest": test.data_digest.hex},
    }
    out.emit(doc, f"split {args.id}: train {len(train.rows)} rows, test {len(test.rows)} rows")
    return 0


def cmd_features_register(args, cfg: CliConfig, out: Output) -> int:
    ws = Workspace(cfg.data_root)
    drafts: list[FeatureDefinition] = []
    if args.preset:
        drafts = standard_claims_features()
    if args.file:
        for doc in json.loads(Path(args.file).read_text(encoding="utf-8")):
            drafts.append(
                FeatureDefinition(
                    name=doc["name"],
                    version=1,
                    generator_id=doc["generator_id"],
                    params=doc.get("params", {}),
                    dependencies=tuple(doc.get("dependencies", ())),
                    value_type=doc.get("value_type", "numeric"),
                    group_id=doc.get("group_id"),
                )
            )
    if not drafts:
        raise ConfigError("nothing to register: pass --preset claims and/or --file defs.json")
    receipts = [ws.features.register_feature(d) for d in drafts]
    created = sum(1 for r in receipts if r.created)
    doc = {"registered": created, "unchanged": len(receipts) - created, "catalog_size": len(ws.features.catalog)}
    out.emit(doc, f"registered {created} definitions ({len(receipts) - created} unchanged), catalog holds {len(ws.features.catalog)}")
    return 0


def cmd_features_materialize(args, cfg: CliConfig, out: Output) -> int:
    ws = Workspace(cfg.data_root)
    cohort = load_cohort(cfg.data_root, args.cohort)
    names = ws.features.catalog.names() if args.features == "all" else args.features.split(",")
    by_date: dict[date, list[str]] = {}
    for row in cohort.rows:
        by_date.setdefault(row.index_date, []).append(row.patient_id)
    written = skipped = 0
    failures = []
    for index_date, pids in sorted(by_date.items()):
        timelines = [ws.timelines.get(pid) for pid in pids]
        report = ws.features.materialize(timelines, names, [index_date], max_workers=args.workers)
        written += report.written
        skipped += report.skipped
        failures.extend(report.failures)
    doc = {"written": written, "skipped": skipped, "failures": len(failures)}
    out.emit(doc, f"materialized {written} values ({skipped} fresh, {len(failures)} failures)")
    return 0


def cmd_features_search(args, cfg: CliConfig, out: Output) -> int:
    ws = Workspace(cfg.data_root)
    hits = ws.features.search_catalog(args.query or "")
    doc = {"features": [{"name": d.name, "version": d.version, "generator_id": d.generator_id} for d in hits]}
    out.table(doc, [f"{d.name} v{d.version} ({d.generator_id})" for d in hits] or ["no matches"])
    return 0


def cmd_train_run(args, cfg: CliConfig, out: Output) -> int:
    ws = Workspace(cfg.data_root)
    doc = json.loads(Path(args.train_config).read_text(encoding="utf-8")) if args.train_config else {}
    for key, value in (
        ("task_id", args.task),
        ("cohort_id", args.cohort),
        ("model_id", args.model_id),
    ):
        if value is not None:
            doc[key] = value
    if "feature_refs" not in doc or doc["feature_refs"] == "catalog":
        refs = []
        for name in ws.features.catalog.names():
            fdef = ws.features.catalog.get(name)
            if fdef.value_type == "numeric":
                refs.append([name, fdef.version])
        doc["feature_refs"] = refs
    hp_overrides = (
        ("seed", args.seed),
        ("epochs", args.epochs),
        ("learning_rate", args.learning_rate),
        ("l2", args.l2),
        ("batch_size", args.batch_size),
    )
    for key, value in hp_overrides:
        if value is not None:
            doc.setdefault("hyperparameters", {})[key] = value
    if args.calibrate is not None:
        doc["calibrate"] = args.calibrate
    if "task_id" not in doc or "cohort_id" not in doc:
        raise ConfigError("train run needs task_id and cohort_id (config file or --task/--cohort)")
    train_cfg = TrainConfig.from_doc(doc)
    result = run_pipeline(train_cfg, ws)
    report = result.report
    payload = {
        "model_id": result.model_id,
        "version": result.version,
        "metrics": report.metrics(),
        "provenance_ref": result.provenance.record_digest.hex,
        "artifact_digest": result.artifact.artifact_digest.hex,
        "draft_id": result.draft_id,
    }
    out.emit(
        payload,
        "\n".join(
            [
                f"registered {result.model_id} v{result.version}",
                f"  auc_train={report.auc_train:.4f} auc_test={report.auc_test:.4f}",
                f"  accuracy_test={report.accuracy_test:.4f} brier_test={report.brier_test:.4f}",
                f"  n_train={report.n_train} n_test={report.n_test} prevalence={report.label_prevalence:.3f}",
                f"  provenance {result.provenance.record_digest.hex}",
            ]
        ),
    )
    return 0


def cmd_registry_list(args, cfg: CliConfig, out: Output) -> int:
    ws = Workspace(cfg.data_root)
    specs = ws.registry.list_specs(args.task)
    doc = {"models": [s.to_doc() for s in specs]}
    rows = [
        f"{s.model_id} v{s.version} [{s.stage.value}] task={s.task_id} auc_test={s.metrics.get('auc_test', float('nan')):.4f}"
        for s in specs
    ]
    out.table(doc, rows or ["registry is empty"])
    return 0


def cmd_registry_show(args, cfg: CliConfig, out: Output) -> int:
    ws = Workspace(cfg.data_root)
    spec = ws.registry.get(args.model_id, args.version)
    doc = spec.to_doc()
    out.emit(doc, json.dumps(doc, indent=2))
    return 0


def cmd_registry_promote(args, cfg: CliConfig, out: Output) -> int:
    ws = Workspace(cfg.data_root)
    spec = ws.registry.transition_stage(args.model_id, args.version, args.stage, actor="cli")
    doc = spec.to_doc()
    out.emit(doc, f"{spec.model_id} v{spec.version} -> {spec.stage.value}")
    return 0


def cmd_provenance_show(args, cfg: CliConfig, out: Output) -> int:
    ws = Workspace(cfg.data_root)
    lineage = ws.registry.get_lineage(Digest(args.digest))
    record = lineage["record"]
    doc = record.to_doc()
    out.emit(doc, json.dumps(doc, indent=2))
    return 0


def cmd_serve(args, cfg: CliConfig, out: Output) -> int:
    import uvicorn

    from .service.http import MonitorJob, build_service

    ws = Workspace(cfg.data_root)
    service, monitor, app = build_service(ws, args.api_key or cfg.api_key, cfg.monitoring)
    interval = args.monitor_interval if args.monitor_interval is not None else cfg.monitoring.interval_s
    job = MonitorJob(monitor, interval)
    job.start()
    host = args.host or cfg.host
    port = args.port or cfg.port
    out.emit({"host": host, "port": port}, f"serving on http://{host}:{port} (monitor every {interval}s)")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        job.stop()
    return 0


def cmd_traffic_simulate(args, cfg: CliConfig, out: Output) -> int:
    import httpx

    from .ingestion.cohort import label_for

    base_url = args.base_url or cfg.base_url
    api_key = args.api_key or cfg.api_key
    tags = args.tags.split(",") if args.tags else None
    store = TimelineStore.load(cfg.data_root, tags)
    pids = store.patient_ids()
    if not pids:
        raise ConfigError("no patients found; run ingest generate first")
    target = TargetSpec(
        event_type=EventType(args.target_type),
        code_set=frozenset(args.target_codes.split(",")),
        horizon_days=args.horizon,
    )
    as_of = _parse_date(args.as_of)
    rng = np.random.default_rng(args.seed)
    chosen = [pids[int(i)] for i in rng.integers(0, len(pids), size=args.n)]

    latencies: list[float] = []
    request_ids: list[tuple[str, str]] = []
    failures = 0
    with httpx.Client(base_url=base_url, timeout=30.0, headers={"X-API-Key": api_key}) as client:
        for pid in chosen:
            body = {"task_id": args.task, "patient_id": pid, "as_of_date": as_of.isoformat(), "feature_policy": args.policy}
            started = time.perf_counter()
            response = client.post("/v1/predict", json=body)
            latencies.append((time.perf_counter() - started) * 1000.0)
            if response.status_code == 200:
                request_ids.append((response.json()["request_id"], pid))
            else:
                failures += 1
        feedback_sent = 0
        for request_id, pid in request_ids[: args.feedback]:
            outcome = label_for(store.get(pid), target, as_of)
            response = client.post(
                "/v1/feedback",
                json={"request_id": request_id, "observed_outcome": outcome, "workflow_state": "simulated"},
            )
            if response.status_code == 200:
                feedback_sent += 1

    lat = np.array(latencies) if latencies else np.array([0.0])
    doc = {
        "requests": len(chosen),
        "ok": len(request_ids),
        "failed": failures,
        "feedback_sent": feedback_sent,
        "p50_ms": float(np.percentile(lat, 50)),
        "p95_ms": float(np.percentile(lat, 95)),
    }
    out.emit(
        doc,
        f"sent {len(chosen)} predictions ({failures} failed), {feedback_sent} feedbacks; "
        f"p50 {doc['p50_ms']:.1f}ms p95 {doc['p95_ms']:.1f}ms",
    )
    return 0 if failures == 0 else 1


def cmd_monitor_run_once(args, cfg: CliConfig, out: Output) -> int:
    from .monitoring import AlertLog, Monitor, ProfileStore

    ws = Workspace(cfg.data_root)
    monitor = Monitor(
        registry=ws.registry,
        features=ws.features,
        predictions=ws.predictions,
        feedback=ws.feedback,
        alerts=AlertLog(ws.alerts_path),
        profiles=ProfileStore(ws.profiles_dir),
        cfg=cfg.monitoring,
    )
    new_alerts = monitor.evaluate_and_notify()
    doc = {"new_alerts": [a.to_doc() for a in new_alerts]}
    rows = [
        f"[{a.severity}] {a.kind} {a.model_id} v{a.model_version} {a.metric_name}={a.value:.4f} (threshold {a.threshold})"
        for a in new_alerts
    ]
    out.table(doc, rows or ["no new alerts"])
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="longimodel", description="Lifecycle platform for longitudinal-record models")
    parser.add_argument("--config", help="path to a JSON config file")
    parser.add_argument("--data-root", help="override the data root directory")
    parser.add_argument("--json", action="store_true", help="emit structured JSON output")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="data acquisition").add_subparsers(dest="subcommand", required=True)
    gen = ingest.add_parser("generate", help="generate a synthetic population")
    gen.add_argument("--tag", default="main")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--n-patients", type=int, default=2000)
    gen.add_argument("--mean-events", type=float, default=12.0)
    gen.add_argument("--start", default="2018-01-01")
    gen.add_argument("--end", default="2021-12-31")
    gen.add_argument("--injection-rate", type=float, default=0.3)
    gen.add_argument("--id-prefix", default="p")
    gen.set_defaults(handler=cmd_ingest_generate)
    norm = ingest.add_parser("normalize", help="normalize raw source records")
    norm.add_argument("--source", required=True)
    norm.add_argument("--input", required=True)
    norm.add_argument("--tag", default="normalized")
    norm.set_defaults(handler=cmd_ingest_normalize)

    cohort = sub.add_parser("cohort", help="cohort construction").add_subparsers(dest="subcommand", required=True)
    build = cohort.add_parser("build")
    build.add_argument("--id", required=True)
    build.add_argument("--target-type", default="admission")
    build.add_argument("--target-codes", default="ADM-UNPLANNED")
    build.add_argument("--horizon", type=int, default=90)
    build.add_argument("--index", required=True, help="fixed:<date> or first:<event_type>:<codes>")
    build.add_argument("--tags", help="comma-separated timeline tags (default: all)")
    build.set_defaults(handler=cmd_cohort_build)
    split = cohort.add_parser("split")
    split.add_argument("--id", required=True)
    split.add_argument("--train", type=float, default=0.8)
    split.add_argument("--test", type=float, default=0.2)
    split.add_argument("--seed", type=int, default=7)
    split.set_defaults(handler=cmd_cohort_split)

    features = sub.add_parser("features", help="feature repository").add_subparsers(dest="subcommand", required=True)
    reg = features.add_parser("register")
    reg.add_argument("--preset", choices=["claims"], help="register the standard claims feature set")
    reg.add_argument("--file", help="JSON list of feature definitions")
    reg.set_defaults(handler=cmd_features_register)
    mat = features.add_parser("materialize")
    mat.add_argument("--cohort", required=True)
    mat.add_argument("--features", default="all")
    mat.add_argument("--workers", type=int, default=4)
    mat.set_defaults(handler=cmd_features_materialize)
    search = features.add_parser("search")
    search.add_argument("query", nargs="?", default="")
    search.set_defaults(handler=cmd_features_search)

    train = sub.add_parser("train", help="training pipeline").add_subparsers(dest="subcommand", required=True)
    run = train.add_parser("run")
    run.add_argument("--config", dest="train_config", help="TrainConfig JSON file")
    run.add_argument("--task", help="task_id (overrides the config file)")
    run.add_argument("--cohort", help="cohort_id (overrides the config file)")
    run.add_argument("--model-id")
    run.add_argument("--seed", type=int, help="override hyperparameters.seed")
    run.add_argument("--epochs", type=int)
    run.add_argument("--learning-rate", type=float)
    run.add_argument("--l2", type=float)
    run.add_argument("--batch-size", type=int)
    calibrate_group = run.add_mutually_exclusive_group()
    calibrate_group.add_argument("--calibrate", dest="calibrate", action="store_true", default=None)
    calibrate_group.add_argument("--no-calibrate", dest="calibrate", action="store_false")
    run.set_defaults(handler=cmd_train_run)

    registry = sub.add_parser("registry", help="model registry").add_subparsers(dest="subcommand", required=True)
    rlist = registry.add_parser("list")
    rlist.add_argument("--task")
    rlist.set_defaults(handler=cmd_registry_list)
    rshow = registry.add_parser("show")
    rshow.add_argument("model_id")
    rshow.add_argument("version", type=int)
    rshow.set_defaults(handler=cmd_registry_show)
    promote = registry.add_parser("promote")
    promote.add_argument("model_id")
    promote.add_argument("version", type=int)
    promote.add_argument("stage")
    promote.set_defaults(handler=cmd_registry_promote)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--api-key")
    serve.add_argument("--monitor-interval", type=float)
    serve.set_defaults(handler=cmd_serve)

    traffic = sub.add_parser("traffic", help="traffic simulation").add_subparsers(dest="subcommand", required=True)
    sim = traffic.add_parser("simulate")
    sim.add_argument("--base-url")
    sim.add_argument("--api-key")
    sim.add_argument("--task", required=True)
    sim.add_argument("--n", type=int, default=100)
    sim.add_argument("--feedback", type=int, default=0)
    sim.add_argument("--tags", help="timeline tags to draw patients from")
    sim.add_argument("--as-of", required=True)
    sim.add_argument("--policy", default="compute_on_miss")
    sim.add_argument("--seed", type=int, default=11)
    sim.add_argument("--target-type", default="admission")
    sim.add_argument("--target-codes", default="ADM-UNPLANNED")
    sim.add_argument("--horizon", type=int, default=90)
    sim.set_defaults(handler=cmd_traffic_simulate)

    monitor = sub.add_parser("monitor", help="model monitoring").add_subparsers(dest="subcommand", required=True)
    once = monitor.add_parser("run-once")
    once.set_defaults(handler=cmd_monitor_run_once)

    prov = sub.add_parser("provenance", help="lineage store").add_subparsers(dest="subcommand", required=True)
    pshow = prov.add_parser("show")
    pshow.add_argument("digest")
    pshow.set_defaults(handler=cmd_provenance_show)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    out = Output(args.json)
    try:
        cfg = load_config(args.config, args.data_root)
        cfg.validate()
        return args.handler(args, cfg, out)
    except LongimodelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
