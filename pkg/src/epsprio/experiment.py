"""Experiment runs and their on-disk outputs.

Layout written by :func:`run_experiment` into ``output_dir``::

    index.json                      config and list of every file below
    metrics_median.csv              one row per (strategy, mode)
    <label>.median.json             median metrics, input for ``compare``
    runs/<label>/rep<k>.trace.csv   per-resource timings
    runs/<label>/rep<k>.metrics.json

``label`` is ``<strategy>-<mode>``, e.g. ``rtam-urgency``. Every file embeds
the configuration that produced it, and nothing time- or host-dependent is
written, so the same config always produces byte-identical trees.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import shutil
import statistics
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .manifest import SCHEMA_VERSION, WebsiteManifest, loads_manifest
from .mapping import MappingStrategy, Strategy, pooled_mean_threshold
from .metrics import ProxyMetrics, compute_metrics
from .netsim import LinkModel, simulate
from .scheduler import DEFAULT_QUANTUM, SchedulerMode

BASELINE = "baseline"

MODEL_NOTES = [
    "metrics are delivery-order proxies, not browser measurements",
    "loss is per quantum with retransmission after 2x one-way delay; no congestion or flow control",
    "urgency preemption takes effect at quantum boundaries",
]


@dataclass(frozen=True)
class RunSpec:
    strategy: str  # "baseline" or a Strategy value
    mode: SchedulerMode

    @property
    def label(self) -> str:
        return f"{self.strategy}-{self.mode.value}"


@dataclass
class ExperimentConfig:
    manifest_path: Path
    runs: list[RunSpec]
    link: LinkModel = field(default_factory=LinkModel)
    quantum_bytes: int = DEFAULT_QUANTUM
    repetitions: int = 10
    output_dir: Path = Path("results")
    sam_threshold_bytes: Optional[int] = None

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.quantum_bytes <= 0:
            raise ValueError("quantum_bytes must be positive")
        if not self.runs:
            raise ValueError("no runs configured")
        for run in self.runs:
            if run.strategy == BASELINE and run.mode is not SchedulerMode.SEQUENTIAL_FIFO:
                raise ValueError("baseline only runs with the fifo mode")


def build_runs(strategies: Sequence[str], modes: Optional[Sequence[str]]) -> list[RunSpec]:
    """Cross strategies with modes.

    Without explicit modes the baseline gets ``fifo`` and every mapping
    strategy gets ``urgency``. With explicit modes, baseline pairs with
    ``fifo`` only.
    """
    runs = []
    for s in strategies:
        if s != BASELINE:
            Strategy(s)
        if modes is None:
            mode_list = [SchedulerMode.SEQUENTIAL_FIFO if s == BASELINE else SchedulerMode.URGENCY_NON_INCREMENTAL]
        else:
            mode_list = [SchedulerMode(m) for m in modes]
        for m in mode_list:
            if s == BASELINE and m is not SchedulerMode.SEQUENTIAL_FIFO:
                continue
            spec = RunSpec(s, m)
            if spec not in runs:
                runs.append(spec)
    return runs


def resolve_strategy(name: str, manifest: WebsiteManifest, sam_threshold: Optional[int]) -> Optional[MappingStrategy]:
    if name == BASELINE:
        return None
    selector = Strategy(name)
    if selector is Strategy.SAM:
        return MappingStrategy(selector, sam_threshold or pooled_mean_threshold(manifest))
    return MappingStrategy(selector)


def _dump_json(obj: object) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _comment_header(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True, ensure_ascii=False) + "\n"


def read_commented_csv(text: str) -> list[dict[str, str]]:
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


@dataclass(frozen=True)
class RunResult:
    spec: RunSpec
    repetition: int
    seed: int
    metrics: ProxyMetrics


def _base_config(cfg: ExperimentConfig, manifest: WebsiteManifest, manifest_bytes: bytes) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": f"epsprio {__version__}",
        "site_name": manifest.site_name,
        "manifest": str(cfg.manifest_path),
        "manifest_sha256": hashlib.sha256(manifest_bytes).hexdigest(),
        "quantum_bytes": cfg.quantum_bytes,
        "repetitions": cfg.repetitions,
        "link": cfg.link.to_dict(),
        "notes": MODEL_NOTES,
    }


def _run_config(base: dict, spec: RunSpec, strategy: Optional[MappingStrategy], seed: Optional[int], rep: Optional[int]) -> dict:
    conf = dict(base)
    conf["strategy"] = spec.strategy
    conf["mode"] = spec.mode.value
    conf["label"] = spec.label
    conf["sam_threshold_bytes"] = strategy.sam_threshold_bytes if strategy is not None else None
    if rep is not None:
        conf["repetition"] = rep
        conf["link"] = dict(conf["link"], seed=seed)
    return conf


def _write_tree(cfg: ExperimentConfig, root: Path) -> list[RunResult]:
    manifest_bytes = Path(cfg.manifest_path).read_bytes()
    manifest = loads_manifest(manifest_bytes)
    base = _base_config(cfg, manifest, manifest_bytes)
    order = [r.resource_id for r in manifest]

    files: list[str] = []
    results: list[RunResult] = []
    median_rows = []
    for spec in cfg.runs:
        strategy = resolve_strategy(spec.strategy, manifest, cfg.sam_threshold_bytes)
        run_dir = root / "runs" / spec.label
        run_dir.mkdir(parents=True)
        per_rep: list[ProxyMetrics] = []
        for k in range(cfg.repetitions):
            seed = cfg.link.seed + k
            link = replace(cfg.link, seed=seed)
            trace = simulate(manifest, strategy, spec.mode, link, cfg.quantum_bytes)
            metrics = compute_metrics(trace, manifest)
            per_rep.append(metrics)
            results.append(RunResult(spec, k, seed, metrics))

            conf = _run_config(base, spec, strategy, seed, k)
            trace_path = run_dir / f"rep{k}.trace.csv"
            trace_path.write_text(_comment_header(conf) + trace.to_csv(order))
            metrics_path = run_dir / f"rep{k}.metrics.json"
            metrics_path.write_text(_dump_json({
                "site": manifest.site_name,
                "label": spec.label,
                "config": conf,
                "metrics": metrics.to_dict(),
                "lost_quanta": trace.lost_quanta,
                "lost_requests": trace.lost_requests,
            }))
            files += [str(trace_path.relative_to(root)), str(metrics_path.relative_to(root))]

        median = {name: statistics.median(getattr(m, name) for m in per_rep) for name in ProxyMetrics.names()}
        conf = _run_config(base, spec, strategy, None, None)
        median_path = root / f"{spec.label}.median.json"
        median_path.write_text(_dump_json({
            "site": manifest.site_name,
            "label": spec.label,
            "aggregate": "median",
            "config": conf,
            "metrics": median,
        }))
        files.append(median_path.name)
        median_rows.append([manifest.site_name, spec.label, spec.strategy, spec.mode.value] + [repr(median[n]) for n in ProxyMetrics.names()])

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["site", "label", "strategy", "mode"] + ProxyMetrics.names())
    w.writerows(median_rows)
    (root / "metrics_median.csv").write_text(_comment_header(base) + buf.getvalue())
    files.append("metrics_median.csv")

    (root / "index.json").write_text(_dump_json({
        "config": dict(base, runs=[r.label for r in cfg.runs], sam_threshold_bytes=cfg.sam_threshold_bytes),
        "files": files,
    }))
    return results


def run_experiment(cfg: ExperimentConfig) -> list[RunResult]:
    """Run every (strategy, mode, repetition) and write the output tree.

    The tree is assembled in a temporary sibling directory and moved into
    place only on success, so a failure leaves no partial outputs. An
    existing ``output_dir`` is replaced only if it is empty or holds a
    previous tree (has ``index.json``).
    """
    out = Path(cfg.output_dir)
    if out.exists() and any(out.iterdir()) and not (out / "index.json").exists():
        raise FileExistsError(f"{out} exists and is not an epsprio output directory")
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        results = _write_tree(cfg, tmp)
        if out.exists():
            shutil.rmtree(out)
        tmp.rename(out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return results
