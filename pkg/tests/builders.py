"""Small manifest factories shared by tests."""

from __future__ import annotations

import random

from epsprio.manifest import ResourceDescriptor, WebsiteManifest
from epsprio.mapping import ChromiumPriority as P
from epsprio.mapping import ResourceType as T


def res(rid, rtype=T.OTHER, size=1000, prio=P.MEDIUM, after=None, path=None):
    return ResourceDescriptor(rid, path or f"/{rid}", rtype, size, prio, after)


def doc(size=1000, rid="doc"):
    return res(rid, T.DOCUMENT, size, P.VERY_HIGH)


def manifest(*resources, name="test"):
    return WebsiteManifest(name, tuple(resources))


def random_manifest(rng: random.Random, n: int, max_size: int = 20000, chains: bool = True) -> WebsiteManifest:
    rs = [doc(rng.randint(1, max_size))]
    for k in range(1, n):
        rtype = rng.choice([T.STYLESHEET, T.SCRIPT, T.IMAGE, T.OTHER, T.DOCUMENT])
        prio = rng.choice(list(P))
        after = None
        if chains and rng.random() < 0.4:
            after = rng.choice(rs).resource_id
        if rtype is T.DOCUMENT and after is None:
            after = "doc"
        rs.append(res(f"r{k}", rtype, rng.randint(1, max_size), prio, after))
    return manifest(*rs, name=f"random-{n}")


def image_after_scripts() -> WebsiteManifest:
    """Largest image is High priority and listed after Medium/Low scripts."""
    return manifest(
        doc(30_000),
        res("css", T.STYLESHEET, 8_000, P.VERY_HIGH),
        res("js-a", T.SCRIPT, 120_000, P.MEDIUM),
        res("js-b", T.SCRIPT, 90_000, P.LOW),
        res("js-c", T.SCRIPT, 60_000, P.MEDIUM),
        res("thumb", T.IMAGE, 15_000, P.LOW),
        res("hero", T.IMAGE, 200_000, P.HIGH),
        name="image-after-scripts",
    )


def script_heavy() -> WebsiteManifest:
    """Script bytes exceed image bytes, and a script discovers another script.

    Deferring ``app`` behind the images also defers the request for the
    chunk it discovers, leaving the link idle for that round trip; sequential
    delivery overlaps the same round trip with the image transfers.
    """
    return manifest(
        doc(40_000),
        res("css", T.STYLESHEET, 10_000, P.VERY_HIGH),
        res("vendor", T.SCRIPT, 100_000, P.HIGH),
        res("app", T.SCRIPT, 150_000, P.MEDIUM),
        res("hero", T.IMAGE, 60_000, P.HIGH),
        res("thumb", T.IMAGE, 40_000, P.HIGH),
        res("app-chunk", T.SCRIPT, 100_000, P.LOW, after="app"),
        name="script-heavy",
    )
