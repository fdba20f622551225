"""Chromium priority to urgency mappings.

Three strategies are provided:

* DM: one urgency per Chromium priority level.
* RTAM: urgency by (priority, resource type); combinations without an entry
  fall back to DM.
* SAM: RTAM, with Script/Image resources nudged one level more urgent when
  larger than a byte threshold and one level less urgent otherwise.
"""

from __future__ import annotations

import enum
import math
import posixpath
from dataclasses import dataclass
from typing import Iterable, Optional
from urllib.parse import urlsplit

from .priority import MAX_URGENCY, MIN_URGENCY, UrgencyLevel


class ChromiumPriority(enum.IntEnum):
    VERY_HIGH = 0
    HIGH = 1
    MEDIUM = 2
    LOW = 3
    VERY_LOW = 4

    @property
    def label(self) -> str:
        return _PRIORITY_LABELS[self]

    @classmethod
    def parse(cls, value: object) -> "ChromiumPriority":
        """Accept ``"VeryHigh"``, ``"very_high"``, ``"Very High"`` or a code 0..4."""
        if isinstance(value, bool):
            raise ValueError(f"not a Chromium priority: {value!r}")
        if isinstance(value, int):
            return cls(value)
        if isinstance(value, str):
            key = value.replace("_", "").replace("-", "").replace(" ", "").lower()
            for member, label in _PRIORITY_LABELS.items():
                if label.lower() == key:
                    return member
        raise ValueError(f"not a Chromium priority: {value!r}")


_PRIORITY_LABELS = {
    ChromiumPriority.VERY_HIGH: "VeryHigh",
    ChromiumPriority.HIGH: "High",
    ChromiumPriority.MEDIUM: "Medium",
    ChromiumPriority.LOW: "Low",
    ChromiumPriority.VERY_LOW: "VeryLow",
}


class ResourceType(enum.Enum):
    DOCUMENT = "Document"
    STYLESHEET = "StyleSheet"
    SCRIPT = "Script"
    IMAGE = "Image"
    OTHER = "Other"

    @classmethod
    def parse(cls, value: object) -> "ResourceType":
        if isinstance(value, str):
            key = value.replace("_", "").replace(" ", "").lower()
            for member in cls:
                if member.value.lower() == key:
                    return member
        raise ValueError(f"not a resource type: {value!r}")


class Strategy(enum.Enum):
    DM = "dm"
    RTAM = "rtam"
    SAM = "sam"


@dataclass(frozen=True)
class MappingStrategy:
    selector: Strategy
    sam_threshold_bytes: Optional[int] = None

    def __post_init__(self) -> None:
        if self.selector is Strategy.SAM:
            if self.sam_threshold_bytes is None or self.sam_threshold_bytes <= 0:
                raise ValueError("SAM requires a positive sam_threshold_bytes")
        elif self.sam_threshold_bytes is not None:
            raise ValueError(f"sam_threshold_bytes is only valid for SAM, not {self.selector.value}")

    @property
    def name(self) -> str:
        return self.selector.value

    def urgency(self, priority: ChromiumPriority, rtype: ResourceType, size_bytes: int) -> UrgencyLevel:
        if self.selector is Strategy.DM:
            return dm_map(priority)
        if self.selector is Strategy.RTAM:
            return rtam_map(priority, rtype)
        return sam_map(priority, rtype, size_bytes, self.sam_threshold_bytes)


DM_TABLE: dict[ChromiumPriority, int] = {
    ChromiumPriority.VERY_HIGH: 0,
    ChromiumPriority.HIGH: 2,
    ChromiumPriority.MEDIUM: 3,
    ChromiumPriority.LOW: 5,
    ChromiumPriority.VERY_LOW: 7,
}

RTAM_TABLE: dict[tuple[ChromiumPriority, ResourceType], int] = {
    (ChromiumPriority.VERY_HIGH, ResourceType.DOCUMENT): 0,
    (ChromiumPriority.VERY_HIGH, ResourceType.STYLESHEET): 1,
    (ChromiumPriority.HIGH, ResourceType.SCRIPT): 2,
    (ChromiumPriority.HIGH, ResourceType.IMAGE): 3,
    (ChromiumPriority.MEDIUM, ResourceType.SCRIPT): 4,
    (ChromiumPriority.MEDIUM, ResourceType.IMAGE): 5,
    (ChromiumPriority.LOW, ResourceType.SCRIPT): 6,
    (ChromiumPriority.LOW, ResourceType.IMAGE): 6,
    (ChromiumPriority.VERY_LOW, ResourceType.OTHER): 7,
}

_SIZE_ADJUSTED = (ResourceType.SCRIPT, ResourceType.IMAGE)


def dm_map(priority: ChromiumPriority) -> UrgencyLevel:
    return UrgencyLevel(DM_TABLE[ChromiumPriority(priority)])


def rtam_map(priority: ChromiumPriority, rtype: ResourceType) -> UrgencyLevel:
    cell = RTAM_TABLE.get((ChromiumPriority(priority), rtype))
    if cell is None:
        return dm_map(priority)
    return UrgencyLevel(cell)


def sam_map(priority: ChromiumPriority, rtype: ResourceType, size_bytes: int, threshold_bytes: int) -> UrgencyLevel:
    """RTAM urgency adjusted by one level for Scripts and Images.

    Larger than ``threshold_bytes`` moves one level more urgent, anything
    else one level less urgent, clamped to [0, 7]. VeryHigh resources and
    other types keep their RTAM urgency.
    """
    if threshold_bytes <= 0:
        raise ValueError("threshold_bytes must be positive")
    if size_bytes < 0:
        raise ValueError("size_bytes must be non-negative")
    base = rtam_map(priority, rtype)
    if priority == ChromiumPriority.VERY_HIGH or rtype not in _SIZE_ADJUSTED:
        return base
    step = -1 if size_bytes > threshold_bytes else 1
    return UrgencyLevel(min(MAX_URGENCY, max(MIN_URGENCY, base + step)))


def pooled_mean_threshold(resources: Iterable) -> int:
    """Mean size over Script and Image resources, floored to whole bytes.

    For integer sizes ``size > mean`` holds exactly when ``size > floor(mean)``,
    so flooring does not change any SAM decision. Returns 1 when the pool
    is empty (nothing will be adjusted).
    """
    sizes = [r.size_bytes for r in resources if r.rtype in _SIZE_ADJUSTED]
    if not sizes:
        return 1
    return max(1, math.floor(sum(sizes) / len(sizes)))


_IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".gif", ".webp", ".svg", ".ico", ".avif"}
_EXTENSIONS = {
    ".html": ResourceType.DOCUMENT,
    ".htm": ResourceType.DOCUMENT,
    ".css": ResourceType.STYLESHEET,
    ".js": ResourceType.SCRIPT,
    ".mjs": ResourceType.SCRIPT,
    **{ext: ResourceType.IMAGE for ext in _IMAGE_EXTENSIONS},
}


def classify_resource(mime_type: str, url_path: str) -> ResourceType:
    """Classify by MIME type, falling back to the URL path extension."""
    mime = (mime_type or "").split(";", 1)[0].strip().lower()
    if mime == "text/html":
        return ResourceType.DOCUMENT
    if mime == "text/css":
        return ResourceType.STYLESHEET
    if "javascript" in mime or "ecmascript" in mime:
        return ResourceType.SCRIPT
    if mime.startswith("image/"):
        return ResourceType.IMAGE

    path = urlsplit(url_path or "").path
    ext = posixpath.splitext(path)[1].lower()
    return _EXTENSIONS.get(ext, ResourceType.OTHER)
