"""Command-line interface.

Subcommands:
    run       -- execute the full pipeline over raw logs or a scenario
    sweep     -- run the pipeline per grid point (window lengths or
                 summarization threshold vectors) and tabulate metrics
    scenario  -- materialize a synthetic scenario as raw logs or CSV

Exit codes: 0 success, 2 configuration problem, 3 input/output failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import re
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .ecg import build_ecg, write_dot
from .ingest import IoFailure, aggregated_csv_text, normalize_stream, write_olf_csv
from .model import NormalizedEvent, PipelineConfig, format_timestamp_ms, render_value
from .pipeline import PipelineResult, run_events, with_thresholds, with_twl
from .scenario import load_scenario, generate
from . import _kernels

import yaml


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except IoFailure as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggregate",
        description="Aggregate, filter, and summarize heterogeneous security event logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline")
    _common_io(run)
    run.add_argument("--atw", type=int, metavar="SECONDS",
                     help="override the batching window length")
    run.add_argument("--filter-mode", choices=("ldcof", "strict-sc"),
                     help="override the noise filtration mode")
    run.add_argument("--audit", action="store_true",
                     help="write audit.csv with every dropped event and score")
    run.add_argument("--dump-clusters", action="store_true",
                     help="write clusters.jsonl with the pre-filtration clusters")
    run.add_argument("--export-ecg", metavar="SPEC",
                     help="comma-separated features; writes correlation graphs "
                          "for the raw and the aggregated event sets")
    run.add_argument("--cluster-quality", action="store_true",
                     help="also compute the cluster validity indexes (quadratic cost)")
    run.set_defaults(handler=_cmd_run)

    sweep = sub.add_parser("sweep", help="run one pipeline execution per grid point")
    _common_io(sweep)
    sweep.add_argument("--sweep-twl", metavar="LIST",
                       help="comma-separated window lengths in seconds")
    sweep.add_argument("--sweep-thresholds", metavar="FILE",
                       help="YAML file with a sensor_id and a list of threshold vectors")
    sweep.set_defaults(handler=_cmd_sweep)

    scen = sub.add_parser("scenario", help="materialize a synthetic scenario")
    scen.add_argument("--config", required=True, help="pipeline configuration file")
    scen.add_argument("--spec", required=True, help="scenario spec file")
    scen.add_argument("--out", required=True, help="output directory")
    scen.add_argument("--seed", type=int, help="override the scenario seed")
    scen.add_argument("--format", choices=("raw", "olf"), default="raw",
                      help="raw log lines (default) or normalized CSV")
    scen.set_defaults(handler=_cmd_scenario)
    return parser


def _common_io(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--config", required=True, help="pipeline configuration file")
    cmd.add_argument("--input", nargs="*", default=[], metavar="PATH",
                     help="raw log files or directories of them")
    cmd.add_argument("--scenario", metavar="FILE",
                     help="generate the input from a scenario spec instead")
    cmd.add_argument("--seed", type=int,
                     help="override the scenario seed (with --scenario)")
    cmd.add_argument("--out", required=True, help="output directory")


def _collect_lines(paths: list[str]) -> list[str]:
    files: list[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(sorted(p for p in path.rglob("*") if p.is_file()))
        elif path.is_file():
            files.append(path)
        else:
            raise IoFailure(f"input not found: {path}")
    lines: list[str] = []
    for path in files:
        lines.extend(path.read_text(encoding="utf-8").splitlines())
    return lines


def _load_events(args, config: PipelineConfig, patterns) -> tuple[list[NormalizedEvent], object]:
    if args.scenario and args.input:
        raise ConfigError("--scenario and --input are mutually exclusive")
    if args.scenario:
        spec = load_scenario(args.scenario)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
        return generate(spec, config.sensors), None
    lines = _collect_lines(args.input)
    profiles = {p.sensor_id: p for p in config.sensors}
    return normalize_stream(lines, patterns, profiles)[0:2]


def _apply_overrides(args, config: PipelineConfig) -> PipelineConfig:
    if getattr(args, "atw", None):
        config = dataclasses.replace(config, atw_seconds=args.atw)
    if getattr(args, "filter_mode", None):
        config = dataclasses.replace(config, filter_mode=args.filter_mode)
    config.check()
    return config


def _write_run_outputs(result: PipelineResult, config: PipelineConfig, out: Path,
                       args, rejects) -> int:
    out.mkdir(parents=True, exist_ok=True)
    storage = 0
    for profile in config.sensors:
        rows = [e for e in result.aggregated if e.sensor_id == profile.sensor_id]
        if not rows:
            continue
        text = aggregated_csv_text(rows, profile)
        target = out / f"aggregated_{profile.sensor_id}.csv"
        target.write_text(text, encoding="utf-8")
        storage += len(text.encode("utf-8"))

    payload = result.metrics.as_dict()
    payload["storage_bytes"] = storage
    payload["windows"] = result.windows
    (out / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    columns = list(payload)
    csv_line = ",".join(str(payload[c]) if payload[c] is not None else "" for c in columns)
    (out / "metrics.csv").write_text(",".join(columns) + "\n" + csv_line + "\n",
                                     encoding="utf-8")

    if args.audit:
        rows = ["event_id,cluster_id,score,reason"]
        rows += [f"{d.event_id},{d.cluster_id},{d.score:.6g},{d.reason}"
                 for d in result.dropped]
        (out / "audit.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    if args.dump_clusters:
        with open(out / "clusters.jsonl", "w", encoding="utf-8") as fh:
            for c in result.clusters:
                fh.write(json.dumps({
                    "cluster_id": c.cluster_id,
                    "sensor_id": c.sensor_id,
                    "event_type": c.event_type,
                    "base_event_id": c.base_event_id,
                    "size": c.size,
                    "window": [format_timestamp_ms(c.window[0]),
                               format_timestamp_ms(c.window[1])],
                    "member_ids": [m.event_id for m in c.members],
                }) + "\n")
    if rejects is not None and rejects.count:
        (out / "rejects.txt").write_text("\n".join(rejects.samples) + "\n", encoding="utf-8")
        print(f"rejected lines: {rejects.count} (samples in rejects.txt)")
    return storage


def _export_graphs(spec: str, raw_events, aggregated, config: PipelineConfig, out: Path) -> None:
    features = [f.strip() for f in spec.split(",") if f.strip()]
    declared = {name for p in config.sensors for name in p.feature_names()}
    unknown = [f for f in features if f not in declared]
    if unknown:
        raise ConfigError(f"--export-ecg names unknown features: {', '.join(unknown)}")
    for tag, events in (("raw", raw_events), ("aggregated", aggregated)):
        nodes, edges = build_ecg(events, features)
        write_dot(nodes, edges, out / f"ecg_{tag}.dot")
        print(f"ecg_{tag}.dot: {len(nodes)} nodes, {len(edges)} edges")


def _cmd_run(args) -> int:
    config, patterns = load_config(args.config)
    config = _apply_overrides(args, config)
    events, rejects = _load_events(args, config, patterns)
    _kernels.warmup()
    result = run_events(events, config, compute_quality=args.cluster_quality)
    out = Path(args.out)
    _write_run_outputs(result, config, out, args, rejects)
    if args.export_ecg:
        _export_graphs(args.export_ecg, events, result.aggregated, config, out)
    m = result.metrics
    ear_text = f"{m.ear_percent:.1f}%" if m.ear_percent is not None else "null"
    ilr_text = f"{m.ilr:.4f}" if m.ilr is not None else "null"
    print(f"events: {m.total_events} in, {m.aggregated_events} out | "
          f"EAR {ear_text} | ILR {ilr_text} | "
          f"EPR {m.epr_events_per_sec:.0f} events/s")
    print(f"artifacts in {out}")
    return 0


def _parse_vector_file(path: str) -> tuple[str, list[list[int]]]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    sensor_id = doc.get("sensor_id")
    vectors = doc.get("vectors")
    if not sensor_id or not vectors:
        raise ConfigError(f"{path}: need sensor_id and a non-empty vectors list")
    return sensor_id, [[int(v) for v in vec] for vec in vectors]


def _cmd_sweep(args) -> int:
    if bool(args.sweep_twl) == bool(args.sweep_thresholds):
        raise ConfigError("pass exactly one of --sweep-twl / --sweep-thresholds")
    config, patterns = load_config(args.config)
    events, _ = _load_events(args, config, patterns)
    _kernels.warmup()

    grid: list[tuple[str, PipelineConfig]] = []
    if args.sweep_twl:
        for twl in (int(v) for v in args.sweep_twl.split(",")):
            grid.append((str(twl), with_twl(config, twl)))
    else:
        sensor_id, vectors = _parse_vector_file(args.sweep_thresholds)
        for vec in vectors:
            label = "/".join(str(v) for v in vec)
            grid.append((label, with_thresholds(config, {sensor_id: vec})))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["parameter,ear_percent,epr_events_per_sec,ilr,storage_bytes"]
    for label, swept in grid:
        result = run_events(events, swept)
        storage = 0
        for profile in swept.sensors:
            sensor_rows = [e for e in result.aggregated if e.sensor_id == profile.sensor_id]
            if sensor_rows:
                storage += len(aggregated_csv_text(sensor_rows, profile).encode("utf-8"))
        m = result.metrics
        ear_text = f"{m.ear_percent:.4f}" if m.ear_percent is not None else ""
        ilr_text = f"{m.ilr:.6f}" if m.ilr is not None else ""
        rows.append(f"{label},{ear_text},{m.epr_events_per_sec:.1f},{ilr_text},{storage}")
        print(rows[-1])
    (out / "sweep.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    return 0


_PLACEHOLDER = re.compile(r"\{([^{}]+)\}")


def render_line(event: NormalizedEvent, template: str) -> str:
    """Render an event into a raw log line via a pattern's template."""
    values = {name: render_value(value) for name, value in event.features.items()}
    values["timestamp"] = format_timestamp_ms(event.timestamp)
    values["event_type"] = event.event_type

    def sub(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise ConfigError(f"template names unknown field {name!r}")
        return values[name]

    return _PLACEHOLDER.sub(sub, template)


def _cmd_scenario(args) -> int:
    config, patterns = load_config(args.config)
    spec = load_scenario(args.spec)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    events = generate(spec, config.sensors)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    by_sensor: dict[str, list[NormalizedEvent]] = {}
    for e in events:
        by_sensor.setdefault(e.sensor_id, []).append(e)
    if args.format == "olf":
        for profile in config.sensors:
            rows = by_sensor.get(profile.sensor_id)
            if rows:
                write_olf_csv(rows, out / f"{profile.sensor_id}.csv", profile)
    else:
        templates = {p.sensor_id: p.template for p in patterns if p.template}
        for sensor_id, rows in by_sensor.items():
            template = templates.get(sensor_id)
            if not template:
                raise ConfigError(f"no render template for sensor {sensor_id}")
            text = "\n".join(render_line(e, template) for e in rows)
            (out / f"{sensor_id}.log").write_text(text + "\n", encoding="utf-8")
    print(f"{len(events)} events across {len(by_sensor)} sensors written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
