"""Dominant-color labeling for 32x32 icons.

Pipeline: optional alpha flattening over white, k-means over the 1024 pixels,
nearest X11 color name per centroid, then grouping into the 12 label classes
shipped in data/x11_classes.csv.
"""

import csv
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import NamedTuple, Optional

import numpy as np

# The 12 label classes; index in this tuple is the stable integer encoding.
CLASSES = (
    "black", "blue", "brown", "cyan", "gray", "green",
    "orange", "pink", "purple", "red", "white", "yellow",
)

ICON_SIZE = 32


class UnknownColorNameError(KeyError):
    """Raised when a name is not in the shipped X11 table."""


class Rgb(NamedTuple):
    r: int
    g: int
    b: int


class PaletteEntry(NamedTuple):
    centroid: Rgb
    pixel_count: int


@dataclass(frozen=True)
class Palette:
    """k centroids with their pixel counts, sorted by count descending."""

    entries: tuple[PaletteEntry, ...]

    @property
    def counts(self):
        return tuple(e.pixel_count for e in self.entries)


@dataclass(frozen=True)
class ColorLabel:
    primary: str
    top3: tuple[str, str, str]
    palette: Palette


def class_index(name: str) -> int:
    try:
        return CLASSES.index(name)
    except ValueError:
        raise UnknownColorNameError(name) from None


@lru_cache(maxsize=1)
def _x11_table():
    """Load the versioned X11 table: (names, rgb array, name->class dict)."""
    path = resources.files("logan.data") / "x11_classes.csv"
    names, rgbs, classes = [], [], {}
    with path.open("r", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            names.append(row["name"])
            rgbs.append((int(row["r"]), int(row["g"]), int(row["b"])))
            classes[row["name"]] = row["class"]
    # rows are stored name-sorted; argmin on this order breaks ties
    # toward the lexicographically smallest name
    assert names == sorted(names)
    return tuple(names), np.array(rgbs, dtype=np.int64), classes


def x11_names() -> tuple[str, ...]:
    return _x11_table()[0]


def canonical_shade(cls: str) -> Rgb:
    """Representative RGB of a class: the table row named like the class."""
    if cls not in CLASSES:
        raise UnknownColorNameError(cls)
    names, rgbs, _ = _x11_table()
    idx = names.index(cls)
    return Rgb(*(int(v) for v in rgbs[idx]))


def _check_raster(image: np.ndarray, channels: int) -> np.ndarray:
    image = np.asarray(image)
    if image.shape != (ICON_SIZE, ICON_SIZE, channels):
        raise ValueError(
            f"expected {ICON_SIZE}x{ICON_SIZE}x{channels} raster, got shape {image.shape}"
        )
    return image


def alpha_flatten(image: np.ndarray) -> np.ndarray:
    """Composite an RGBA raster over opaque white.

    Exact integer arithmetic with round-half-up; fully opaque pixels pass
    through unchanged and fully transparent ones become white.
    """
    image = _check_raster(image, 4)
    rgba = image.astype(np.int64)
    alpha = rgba[..., 3:4]
    num = alpha * rgba[..., :3] + (255 - alpha) * 255  # 255 * composited value
    out = (2 * num + 255) // 510
    return out.astype(np.uint8)


def kmeans_palette(
    image: np.ndarray,
    k: int = 3,
    seed: int = 0,
    max_iters: int = 50,
    minibatch: Optional[int] = None,
) -> Palette:
    """Cluster the pixels of a 32x32 RGB raster into k color centroids.

    Reference behavior is full-batch Lloyd iterations with deterministic
    farthest-point seeding: the first centroid is a seed-selected pixel, each
    following one is the pixel farthest from the chosen set (ties to the
    lowest pixel index). Pixels are canonicalized to value order before
    seeding, so the result only depends on the multiset of colors, never on
    their arrangement. Empty clusters keep their position during iteration
    and are re-seeded to the most populous cluster's centroid (count 0) in
    the returned palette.

    Args:
        image: 32x32x3 raster, values 0..255.
        k: number of centroids (>= 1).
        seed: RNG seed; fixed seed gives bit-identical output.
        max_iters: Lloyd iteration cap.
        minibatch: if set, each iteration updates centroids from that many
            sampled pixels instead of all 1024 (approximate but faster on
            large batches of calls); final counts still cover every pixel.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    image = _check_raster(image, 3)
    pixels = image.reshape(-1, 3).astype(np.float64)
    pixels = pixels[np.lexsort((pixels[:, 2], pixels[:, 1], pixels[:, 0]))]
    n = len(pixels)
    rng = np.random.default_rng(seed)

    # farthest-point seeding from a seed-selected first pixel
    centroids = np.empty((k, 3), dtype=np.float64)
    centroids[0] = pixels[int(rng.integers(n))]
    for j in range(1, k):
        d = ((pixels[:, None, :] - centroids[None, :j, :]) ** 2).sum(-1).min(axis=1)
        centroids[j] = pixels[int(np.argmax(d))]

    prev_assign = None
    for _ in range(max_iters):
        if minibatch is not None and minibatch < n:
            subset = pixels[rng.choice(n, size=minibatch, replace=False)]
        else:
            subset = pixels
        assign = ((subset[:, None, :] - centroids[None, :, :]) ** 2).sum(-1).argmin(axis=1)
        for j in range(k):
            members = subset[assign == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
        if minibatch is None or minibatch >= n:
            if prev_assign is not None and np.array_equal(assign, prev_assign):
                break
            prev_assign = assign

    # final full assignment for exact pixel counts
    final_assign = ((pixels[:, None, :] - centroids[None, :, :]) ** 2).sum(-1).argmin(axis=1)
    counts = np.bincount(final_assign, minlength=k)
    most = int(np.argmax(counts))
    rounded = np.rint(centroids).astype(np.int64)
    for j in range(k):
        if counts[j] == 0:
            rounded[j] = rounded[most]

    order = sorted(range(k), key=lambda j: (-int(counts[j]), tuple(rounded[j])))
    entries = tuple(
        PaletteEntry(Rgb(*(int(v) for v in rounded[j])), int(counts[j])) for j in order
    )
    return Palette(entries=entries)


def nearest_x11_name(c) -> str:
    """Name of the X11 entry closest to c in squared RGB distance.

    Ties resolve to the lexicographically smallest name.
    """
    r, g, b = (int(v) for v in c)
    for v in (r, g, b):
        if not 0 <= v <= 255:
            raise ValueError(f"channel out of range: {(r, g, b)}")
    names, rgbs, _ = _x11_table()
    d = ((rgbs - np.array([r, g, b])) ** 2).sum(axis=1)
    return names[int(np.argmin(d))]


def x11_to_class(name: str) -> str:
    """Class assigned to an X11 name by the shipped grouping table."""
    _, _, classes = _x11_table()
    try:
        return classes[name]
    except KeyError:
        raise UnknownColorNameError(name) from None


def label_image(image: np.ndarray, seed: int = 0) -> ColorLabel:
    """Label a 32x32 RGB(A) raster with its dominant-color class and top-3.

    Flattens alpha over white if present, extracts a k=3 palette, and maps
    each centroid through the X11 name lookup to a class. The primary class
    is the class of the largest cluster.
    """
    image = np.asarray(image)
    if image.ndim == 3 and image.shape[2] == 4:
        image = alpha_flatten(image)
    palette = kmeans_palette(image, k=3, seed=seed)
    top3 = tuple(x11_to_class(nearest_x11_name(e.centroid)) for e in palette.entries)
    return ColorLabel(primary=top3[0], top3=top3, palette=palette)
