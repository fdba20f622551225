"""Synthetic site manifests.

These are shape-alikes of eight popular sites: resource counts grow from
wikipedia (fewest) to nytimes (most), and nytimes carries more script bytes
than image bytes. They are not measured data. The shipped JSON files under
``data/manifests`` are produced by :func:`generate_site` and can be
regenerated with ``python -m epsprio.synthetic``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .manifest import ResourceDescriptor, WebsiteManifest
from .mapping import ChromiumPriority as P
from .mapping import ResourceType as T


@dataclass(frozen=True)
class SiteShape:
    name: str
    count: int
    stylesheets: int
    script_share: float
    image_share: float
    script_kb: float
    image_kb: float
    discovered_share: float = 0.3


SHAPES = {
    s.name: s
    for s in [
        SiteShape("wikipedia", 12, 2, 0.25, 0.45, 12, 20, 0.2),
        SiteShape("w3", 24, 3, 0.25, 0.45, 15, 30),
        SiteShape("apache", 31, 3, 0.3, 0.45, 18, 35),
        SiteShape("statcounter", 42, 3, 0.35, 0.4, 20, 40),
        SiteShape("apple", 58, 4, 0.3, 0.5, 25, 80),
        SiteShape("amazon", 83, 4, 0.35, 0.45, 30, 45),
        SiteShape("etsy", 104, 5, 0.35, 0.45, 30, 50, 0.35),
        SiteShape("nytimes", 146, 6, 0.5, 0.3, 55, 25, 0.45),
    ]
}
SITE_ORDER = list(SHAPES)


def _size(rng: random.Random, mean_kb: float) -> int:
    return max(200, int(rng.lognormvariate(0, 0.8) * mean_kb * 1024 / 1.377))


def generate_site(name: str) -> WebsiteManifest:
    shape = SHAPES[name]
    rng = random.Random(f"epsprio-synthetic:{name}")
    resources = [ResourceDescriptor("doc", "/index.html", T.DOCUMENT, _size(rng, 40), P.VERY_HIGH)]

    for k in range(shape.stylesheets):
        # an occasional Medium stylesheet, the outlier RTAM leaves to DM
        prio = P.MEDIUM if k == shape.stylesheets - 1 and shape.stylesheets >= 4 else P.VERY_HIGH
        resources.append(ResourceDescriptor(f"css{k}", f"/css/s{k}.css", T.STYLESHEET, _size(rng, 12), prio))

    rest = shape.count - len(resources)
    n_scripts = round(rest * shape.script_share)
    n_images = round(rest * shape.image_share)
    n_other = rest - n_scripts - n_images

    scripts: list[str] = []
    for k in range(n_scripts):
        prio = rng.choices([P.HIGH, P.MEDIUM, P.LOW], weights=[3, 3, 4])[0]
        after = None
        if scripts and rng.random() < shape.discovered_share:
            after = rng.choice(scripts)
        rid = f"js{k}"
        resources.append(ResourceDescriptor(rid, f"/js/{rid}.js", T.SCRIPT, _size(rng, shape.script_kb), prio, after))
        scripts.append(rid)

    for k in range(n_images):
        if k == 0:
            # hero image: the LCP candidate
            prio, size = P.HIGH, int(shape.image_kb * 1024 * 4)
        else:
            prio = rng.choices([P.HIGH, P.MEDIUM, P.LOW], weights=[1, 2, 5])[0]
            size = _size(rng, shape.image_kb)
        after = rng.choice(scripts) if scripts and rng.random() < shape.discovered_share / 2 else None
        ext = rng.choice(["jpg", "png", "webp", "svg"])
        resources.append(ResourceDescriptor(f"img{k}", f"/img/i{k}.{ext}", T.IMAGE, size, prio, after))

    for k in range(n_other):
        if k < 2:
            resources.append(ResourceDescriptor(f"font{k}", f"/fonts/f{k}.woff2", T.OTHER, _size(rng, 20), P.HIGH))
        else:
            resources.append(ResourceDescriptor(f"misc{k}", f"/misc/m{k}.json", T.OTHER, _size(rng, 1.5), P.VERY_LOW))

    return WebsiteManifest(f"{name} (synthetic)", tuple(resources))


def write_all(directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name in SITE_ORDER:
        path = directory / f"{name}.json"
        path.write_text(generate_site(name).dumps())
        out.append(path)
    return out


if __name__ == "__main__":
    for p in write_all(Path(__file__).parent / "data" / "manifests"):
        print(p)
