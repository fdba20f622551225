"""Website resource manifests.

A manifest is a JSON document::

    {
      "schema_version": 1,
      "site_name": "example.org",
      "resources": [
        {"resource_id": "doc", "url_path": "/", "rtype": "Document",
         "size_bytes": 14000, "chromium_priority": "VeryHigh",
         "requested_after": null},
        ...
      ]
    }

``rtype`` may be omitted when a ``mime_type`` is given; it is then derived
with :func:`epsprio.mapping.classify_resource`. Resources without
``requested_after`` are requested once the root document has arrived.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .mapping import ChromiumPriority, ResourceType, classify_resource

SCHEMA_VERSION = 1


class ManifestError(Exception):
    pass


class ParseError(ManifestError):
    pass


class ValidationError(ManifestError):
    def __init__(self, message: str, resource_id: Optional[str] = None) -> None:
        super().__init__(message if resource_id is None else f"{message} (resource {resource_id!r})")
        self.resource_id = resource_id


@dataclass(frozen=True)
class ResourceDescriptor:
    resource_id: str
    url_path: str
    rtype: ResourceType
    size_bytes: int
    chromium_priority: ChromiumPriority
    requested_after: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "resource_id": self.resource_id,
            "url_path": self.url_path,
            "rtype": self.rtype.value,
            "size_bytes": self.size_bytes,
            "chromium_priority": self.chromium_priority.label,
            "requested_after": self.requested_after,
        }


@dataclass(frozen=True)
class WebsiteManifest:
    site_name: str
    resources: tuple[ResourceDescriptor, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "resources", tuple(self.resources))
        validate(self)

    def __len__(self) -> int:
        return len(self.resources)

    def __iter__(self):
        return iter(self.resources)

    @property
    def root(self) -> ResourceDescriptor:
        return next(r for r in self.resources if r.rtype is ResourceType.DOCUMENT and r.requested_after is None)

    @property
    def total_bytes(self) -> int:
        return sum(r.size_bytes for r in self.resources)

    def by_id(self) -> dict[str, ResourceDescriptor]:
        return {r.resource_id: r for r in self.resources}

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "site_name": self.site_name,
            "resources": [r.to_dict() for r in self.resources],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def validate(manifest: WebsiteManifest) -> None:
    """Check manifest invariants, raising :class:`ValidationError` on the first violation."""
    if not manifest.resources:
        raise ValidationError("manifest has no resources")

    seen: dict[str, ResourceDescriptor] = {}
    for r in manifest.resources:
        if r.resource_id in seen:
            raise ValidationError("duplicate resource_id", r.resource_id)
        if r.size_bytes <= 0:
            raise ValidationError("size_bytes must be positive", r.resource_id)
        seen[r.resource_id] = r

    for r in manifest.resources:
        if r.requested_after is not None and r.requested_after not in seen:
            raise ValidationError(f"requested_after names unknown resource {r.requested_after!r}", r.resource_id)

    # every requested_after chain must end at a resource without one
    state: dict[str, int] = {}
    for start in seen:
        path = []
        node: Optional[str] = start
        while node is not None and state.get(node) != 2:
            if state.get(node) == 1:
                raise ValidationError("requested_after cycle", node)
            state[node] = 1
            path.append(node)
            node = seen[node].requested_after
        for n in path:
            state[n] = 2

    roots = [r for r in manifest.resources if r.rtype is ResourceType.DOCUMENT and r.requested_after is None]
    if len(roots) != 1:
        names = ", ".join(r.resource_id for r in roots) or "none"
        raise ValidationError(f"expected exactly one root Document without requested_after, found {names}")


def _resource_from_dict(raw: object, index: int) -> ResourceDescriptor:
    if not isinstance(raw, dict):
        raise ParseError(f"resources[{index}] is not an object")
    rid = raw.get("resource_id")
    if not isinstance(rid, str) or not rid:
        raise ParseError(f"resources[{index}]: resource_id must be a non-empty string")
    url_path = raw.get("url_path", "")
    if not isinstance(url_path, str):
        raise ParseError(f"resource {rid!r}: url_path must be a string")
    size = raw.get("size_bytes")
    if isinstance(size, bool) or not isinstance(size, int):
        raise ParseError(f"resource {rid!r}: size_bytes must be an integer")
    after = raw.get("requested_after")
    if after is not None and not isinstance(after, str):
        raise ParseError(f"resource {rid!r}: requested_after must be a string or null")
    try:
        if "rtype" in raw:
            rtype = ResourceType.parse(raw["rtype"])
        elif "mime_type" in raw:
            rtype = classify_resource(str(raw["mime_type"]), url_path)
        else:
            raise ParseError(f"resource {rid!r}: missing rtype")
        priority = ChromiumPriority.parse(raw.get("chromium_priority"))
    except ValueError as exc:
        raise ParseError(f"resource {rid!r}: {exc}") from None
    return ResourceDescriptor(rid, url_path, rtype, size, priority, after)


def manifest_from_dict(doc: object) -> WebsiteManifest:
    if not isinstance(doc, dict):
        raise ParseError("manifest must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    site = doc.get("site_name")
    if not isinstance(site, str):
        raise ParseError("site_name must be a string")
    resources = doc.get("resources")
    if not isinstance(resources, list):
        raise ParseError("resources must be a list")
    return WebsiteManifest(site, tuple(_resource_from_dict(r, i) for i, r in enumerate(resources)))


def loads_manifest(text: Union[str, bytes]) -> WebsiteManifest:
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"not valid JSON: {exc}") from None
    return manifest_from_dict(doc)


def load_manifest(path: Union[str, Path]) -> WebsiteManifest:
    return loads_manifest(Path(path).read_bytes())


# --- summaries

@dataclass(frozen=True)
class Cell:
    count: int = 0
    total_bytes: int = 0


def summarize_by_priority(manifest: WebsiteManifest) -> dict[tuple[ChromiumPriority, ResourceType], Cell]:
    """Count and bytes for every (priority, type) combination, zeros included."""
    table = {(p, t): Cell() for p in ChromiumPriority for t in ResourceType}
    for r in manifest.resources:
        key = (r.chromium_priority, r.rtype)
        cell = table[key]
        table[key] = Cell(cell.count + 1, cell.total_bytes + r.size_bytes)
    return table


def summarize_by_type(manifest: WebsiteManifest) -> dict[ResourceType, Cell]:
    counts = {t: 0 for t in ResourceType}
    sizes = {t: 0 for t in ResourceType}
    for r in manifest.resources:
        counts[r.rtype] += 1
        sizes[r.rtype] += r.size_bytes
    return {t: Cell(counts[t], sizes[t]) for t in ResourceType}


def priority_summary_csv(table: dict[tuple[ChromiumPriority, ResourceType], Cell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["priority", "type", "count", "total_bytes"])
    for (p, t), cell in table.items():
        w.writerow([p.label, t.value, cell.count, cell.total_bytes])
    return buf.getvalue()


def type_summary_csv(table: dict[ResourceType, Cell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["type", "count", "total_bytes"])
    for t, cell in table.items():
        w.writerow([t.value, cell.count, cell.total_bytes])
    return buf.getvalue()


def bundled_manifest_paths() -> list[Path]:
    """The synthetic site manifests shipped with the package, smallest first."""
    from .synthetic import SITE_ORDER

    base = Path(__file__).parent / "data" / "manifests"
    return [base / f"{name}.json" for name in SITE_ORDER]
