"""Command-line driver.

Subcommands: ``map``, ``simulate``, ``compare``, ``summarize``. Exit codes:
0 success, 1 runtime failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .experiment import BASELINE, ExperimentConfig, build_runs, resolve_strategy, run_experiment
from .manifest import (
    ManifestError,
    bundled_manifest_paths,
    load_manifest,
    priority_summary_csv,
    summarize_by_priority,
    summarize_by_type,
    type_summary_csv,
)
from .mapping import ResourceType
from .metrics import DEFAULT_EPSILON, UnknownBaseline, compare
from .netsim import LinkModel, assign_priorities
from .scheduler import DEFAULT_QUANTUM, SchedulerMode

log = logging.getLogger("epsprio")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INPUT = 2

STRATEGY_CHOICES = ["dm", "rtam", "sam", BASELINE]
MODE_CHOICES = [m.value for m in SchedulerMode]
METRIC_ABBREV = {
    "fcp_proxy_ms": "FCP",
    "lcp_proxy_ms": "LCP",
    "tti_proxy_ms": "TTI",
    "si_proxy_ms": "SI",
    "page_complete_ms": "PAGE",
}


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


def resolve_manifest_path(value: str) -> Path:
    """``builtin:<site>`` names one of the bundled synthetic manifests."""
    if value.startswith("builtin:"):
        name = value.split(":", 1)[1]
        for p in bundled_manifest_paths():
            if p.stem == name:
                return p
        raise InputError(f"no bundled manifest named {name!r}")
    return Path(value)


def _load(value: str):
    path = resolve_manifest_path(value)
    try:
        return path, load_manifest(path)
    except OSError as exc:
        raise InputError(f"cannot read manifest: {exc}") from None
    except ManifestError as exc:
        raise InputError(f"{path}: {exc}") from None


def _split_list(values: Optional[Sequence[str]], choices: Sequence[str], flag: str) -> Optional[list[str]]:
    if not values:
        return None
    out = []
    for v in values:
        for item in v.split(","):
            item = item.strip()
            if item not in choices:
                raise InputError(f"{flag}: invalid choice {item!r} (choose from {', '.join(choices)})")
            out.append(item)
    return out


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_map(args: argparse.Namespace) -> int:
    _, manifest = _load(args.manifest)
    strategy_name = args.strategy or "rtam"
    strategy = resolve_strategy(strategy_name, manifest, args.sam_threshold)
    mode = SchedulerMode.SEQUENTIAL_FIFO if strategy is None else SchedulerMode.URGENCY_NON_INCREMENTAL
    params = assign_priorities(manifest, strategy, mode)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["resource_id", "type", "chromium_priority", "urgency"])
    for r in manifest:
        w.writerow([r.resource_id, r.rtype.value, r.chromium_priority.label, int(params[r.resource_id].urgency)])
    if strategy is not None and strategy.sam_threshold_bytes is not None:
        log.info("SAM threshold: %d bytes", strategy.sam_threshold_bytes)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _link_from_args(args: argparse.Namespace) -> LinkModel:
    base = LinkModel.challenging() if args.challenging else LinkModel()
    overrides = {}
    if args.bandwidth is not None:
        overrides["bandwidth_bytes_per_sec"] = args.bandwidth
    if args.delay_ms is not None:
        overrides["one_way_delay_ms"] = args.delay_ms
    if args.loss is not None:
        overrides["loss_rate"] = args.loss
    if args.seed is not None:
        overrides["seed"] = args.seed
    try:
        return LinkModel(**{**base.to_dict(), **overrides})
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_simulate(args: argparse.Namespace) -> int:
    path, _ = _load(args.manifest)
    strategies = _split_list(args.strategy, STRATEGY_CHOICES, "--strategy") or [BASELINE, "dm", "rtam"]
    modes = _split_list(args.mode, MODE_CHOICES, "--mode")
    runs = build_runs(strategies, modes)
    if not runs:
        raise InputError("no valid (strategy, mode) combination; baseline only runs with --mode fifo")
    try:
        cfg = ExperimentConfig(
            manifest_path=path,
            runs=runs,
            link=_link_from_args(args),
            quantum_bytes=args.quantum,
            repetitions=args.reps,
            output_dir=Path(args.out),
            sam_threshold_bytes=args.sam_threshold,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    try:
        results = run_experiment(cfg)
    except FileExistsError as exc:
        raise InputError(str(exc)) from None
    log.info("wrote %d runs to %s", len(results), cfg.output_dir)
    return EXIT_OK


def _read_metrics_file(path: str) -> tuple[str, str, dict[str, float]]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("metrics"), dict) or "label" not in doc:
        raise InputError(f"{path}: not a metrics file (needs 'label' and 'metrics')")
    try:
        metrics = {str(k): float(v) for k, v in doc["metrics"].items()}
    except (TypeError, ValueError):
        raise InputError(f"{path}: metric values must be numbers") from None
    return str(doc.get("site", "")), str(doc["label"]), metrics


def _format_pct(rel: float) -> str:
    return f"{rel * 100:+.2f}%".replace("-", "−")


def cmd_compare(args: argparse.Namespace) -> int:
    if len(args.metrics_files) < 2:
        raise InputError("compare needs at least two metrics files")
    by_site: dict[str, list[tuple[str, dict[str, float]]]] = {}
    for path in args.metrics_files:
        site, label, metrics = _read_metrics_file(path)
        by_site.setdefault(site, []).append((label, metrics))

    names: Optional[list[str]] = None
    rows = []
    for site, runs in by_site.items():
        try:
            table = compare(runs, args.baseline, args.epsilon)
        except UnknownBaseline:
            where = f" for site {site!r}" if site else ""
            raise InputError(f"baseline label {args.baseline!r} not found{where}") from None
        except ValueError as exc:
            raise InputError(str(exc)) from None
        for label, changes in table.items():
            if names is None:
                names = list(changes)
            elif set(changes) != set(names):
                raise InputError(f"mismatched metric sets between sites ({site!r})")
            rows.append((site, label, changes))
    assert names is not None
    known = list(METRIC_ABBREV)
    names.sort(key=lambda n: (known.index(n) if n in known else len(known), n))

    headers = [METRIC_ABBREV.get(n, n) for n in names]
    row_names = [f"{site} / {label}" if site else label for site, label, _ in rows]
    width = max([len("run")] + [len(n) for n in row_names])
    col = max(9, *(len(h) for h in headers))

    out = io.StringIO()
    out.write(f"sign matrix vs {args.baseline} (epsilon {args.epsilon:.2%})\n")
    out.write("run".ljust(width) + "".join(h.rjust(6) for h in headers) + "\n")
    for name, (_, _, changes) in zip(row_names, rows):
        out.write(name.ljust(width) + "".join(changes[n].sign.rjust(6) for n in names) + "\n")
    out.write("\nrelative change (positive = faster)\n")
    out.write("run".ljust(width) + "".join(h.rjust(col + 1) for h in headers) + "\n")
    for name, (_, _, changes) in zip(row_names, rows):
        out.write(name.ljust(width) + "".join(_format_pct(changes[n].relative).rjust(col + 1) for n in names) + "\n")
    sys.stdout.write(out.getvalue())

    if args.out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["site", "label", "baseline_label", "metric", "baseline", "value", "relative_change", "sign"])
        for site, label, changes in rows:
            for n in names:
                c = changes[n]
                w.writerow([site, label, args.baseline, n, repr(c.baseline), repr(c.value), repr(c.relative), c.sign])
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    return EXIT_OK


def _text_table(header: list[str], rows: list[list[object]]) -> str:
    cells = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = []
    for k, r in enumerate(cells):
        lines.append("  ".join(c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def cmd_summarize(args: argparse.Namespace) -> int:
    _, manifest = _load(args.manifest)
    by_prio = summarize_by_priority(manifest)
    by_type = summarize_by_type(manifest)

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "by_priority.csv").write_text(priority_summary_csv(by_prio))
        (out / "by_type.csv").write_text(type_summary_csv(by_type))

    if args.csv:
        sys.stdout.write(priority_summary_csv(by_prio) + "\n" + type_summary_csv(by_type))
        return EXIT_OK

    prio_rows = [[p.label, t.value, c.count, c.total_bytes] for (p, t), c in by_prio.items() if c.count]
    prio_rows.append(["total", "", len(manifest), manifest.total_bytes])
    type_rows: list[list[object]] = []
    for t in ResourceType:
        c = by_type[t]
        share = c.total_bytes / manifest.total_bytes
        type_rows.append([t.value, "", c.count, c.total_bytes, f"{share:.1%}"])
    type_rows.append(["total", "", len(manifest), manifest.total_bytes, "100.0%"])

    sys.stdout.write(f"{manifest.site_name}: {len(manifest)} resources, {manifest.total_bytes} bytes\n\n")
    sys.stdout.write(_text_table(["priority", "type", "count", "total_bytes"], prio_rows))
    sys.stdout.write("\n")
    sys.stdout.write(_text_table(["type", "", "count", "total_bytes", "bytes %"], type_rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser = argparse.ArgumentParser(prog="epsprio", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def manifest_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument("--manifest", required=True, help="manifest JSON path, or builtin:<site>")

    p = sub.add_parser("map", parents=[common], help="print the urgency assigned to every resource")
    manifest_arg(p)
    p.add_argument("--strategy", choices=STRATEGY_CHOICES, default="rtam")
    p.add_argument("--sam-threshold", type=int, help="SAM size threshold in bytes (default: mean script/image size)")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("simulate", parents=[common], help="run strategies x modes x repetitions and write traces and metrics")
    manifest_arg(p)
    p.add_argument("--strategy", action="append", help="comma list or repeated; default baseline,dm,rtam")
    p.add_argument("--mode", action="append", help="comma list or repeated: " + ", ".join(MODE_CHOICES))
    p.add_argument("--bandwidth", type=float, help="bytes per second (default 1250000)")
    p.add_argument("--delay-ms", type=float, help="one-way delay per direction (default 10)")
    p.add_argument("--loss", type=float, help="loss probability per direction (default 0.0005)")
    p.add_argument("--challenging", action="store_true", help="20 ms delay and 0.1%% loss")
    p.add_argument("--seed", type=int, help="base seed; repetition k uses seed+k (default 0)")
    p.add_argument("--quantum", type=int, default=DEFAULT_QUANTUM)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--sam-threshold", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", parents=[common], help="sign matrix and relative changes against a baseline label")
    p.add_argument("metrics_files", nargs="+")
    p.add_argument("--baseline", default="baseline-fifo")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--out", help="write the relative-change CSV here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("summarize", parents=[common], help="resource counts and bytes per priority and type")
    manifest_arg(p)
    p.add_argument("--csv", action="store_true", help="print CSV instead of text tables")
    p.add_argument("--out", help="also write by_priority.csv and by_type.csv into this directory")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"epsprio {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"epsprio {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
