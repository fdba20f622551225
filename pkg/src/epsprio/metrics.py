"""Delivery-order proxies for page-load metrics, and run comparison.

The proxies only look at when resources finished arriving:

* ``fcp_proxy_ms``: root document and every VeryHigh stylesheet have arrived.
* ``lcp_proxy_ms``: the largest image has arrived (FCP proxy if no images).
* ``tti_proxy_ms``: every script has arrived, and not before the FCP proxy.
* ``si_proxy_ms``: byte-weighted mean completion time.
* ``page_complete_ms``: the last resource has arrived.

They are stand-ins ordered like the browser metrics they are named after,
not estimates of those metrics. Layout shift and blocking time have no proxy.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Mapping, Sequence, Union

from .manifest import WebsiteManifest
from .mapping import ChromiumPriority, ResourceType
from .netsim import DeliveryTrace

DEFAULT_EPSILON = 0.005

IMPROVED = "+"
REGRESSED = "−"
UNCHANGED = "·"


class MissingResource(KeyError):
    pass


class UnknownBaseline(KeyError):
    pass


@dataclass(frozen=True)
class ProxyMetrics:
    fcp_proxy_ms: float
    lcp_proxy_ms: float
    tti_proxy_ms: float
    si_proxy_ms: float
    page_complete_ms: float

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def compute_metrics(trace: DeliveryTrace, manifest: WebsiteManifest) -> ProxyMetrics:
    done: dict[str, float] = {}
    for r in manifest:
        timing = trace.timings.get(r.resource_id)
        if timing is None:
            raise MissingResource(r.resource_id)
        done[r.resource_id] = timing.completion_ms

    blocking = [done[manifest.root.resource_id]]
    blocking += [
        done[r.resource_id]
        for r in manifest
        if r.rtype is ResourceType.STYLESHEET and r.chromium_priority is ChromiumPriority.VERY_HIGH
    ]
    fcp = max(blocking)

    images = [r for r in manifest if r.rtype is ResourceType.IMAGE]
    if images:
        # first one in manifest order wins a size tie
        largest = max(images, key=lambda r: r.size_bytes)
        lcp = done[largest.resource_id]
    else:
        lcp = fcp

    tti = max([fcp] + [done[r.resource_id] for r in manifest if r.rtype is ResourceType.SCRIPT])

    total = sum(r.size_bytes for r in manifest)
    si = sum(r.size_bytes * done[r.resource_id] for r in manifest) / total

    return ProxyMetrics(fcp, lcp, tti, si, max(done.values()))


@dataclass(frozen=True)
class MetricChange:
    baseline: float
    value: float
    relative: float
    sign: str


def relative_change(baseline: float, value: float) -> float:
    """Fractional improvement of ``value`` over ``baseline``; positive is faster."""
    if baseline == 0:
        return 0.0 if value == 0 else -math.inf
    return (baseline - value) / baseline


def sign_of(relative: float, epsilon: float = DEFAULT_EPSILON) -> str:
    if relative > epsilon:
        return IMPROVED
    if relative < -epsilon:
        return REGRESSED
    return UNCHANGED


def _as_dict(metrics: Union[ProxyMetrics, Mapping[str, float]]) -> dict[str, float]:
    if isinstance(metrics, ProxyMetrics):
        return metrics.to_dict()
    return {k: float(v) for k, v in metrics.items()}


def compare(
    runs: Sequence[tuple[str, Union[ProxyMetrics, Mapping[str, float]]]],
    baseline: str,
    epsilon: float = DEFAULT_EPSILON,
) -> dict[str, dict[str, MetricChange]]:
    """Relative change and sign of every metric of every non-baseline run.

    Runs may be :class:`ProxyMetrics` or plain ``{metric: value}`` mappings;
    all runs must carry the same metric names. Returns
    ``{label: {metric: MetricChange}}`` in input order.

    Raises:
        UnknownBaseline: no run carries the ``baseline`` label.
        ValueError: fewer than two runs, a repeated label, or mismatched
            metric sets.
    """
    if len(runs) < 2:
        raise ValueError("compare needs at least two runs")
    by_label: dict[str, dict[str, float]] = {}
    for label, metrics in runs:
        if label in by_label:
            raise ValueError(f"duplicate run label {label!r}")
        by_label[label] = _as_dict(metrics)
    if baseline not in by_label:
        raise UnknownBaseline(baseline)

    base = by_label[baseline]
    for label, metrics in by_label.items():
        if metrics.keys() != base.keys():
            raise ValueError(f"mismatched metric sets: {label!r} vs baseline {baseline!r}")
    table: dict[str, dict[str, MetricChange]] = {}
    for label, metrics in by_label.items():
        if label == baseline:
            continue
        row = {}
        for name, value in metrics.items():
            rel = relative_change(base[name], value)
            row[name] = MetricChange(base[name], value, rel, sign_of(rel, epsilon))
        table[label] = row
    return table
