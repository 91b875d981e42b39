"""Icon corpus ingestion, labeling, synthetic generation, and batch streams."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .colors import CLASSES, ColorLabel, alpha_flatten, canonical_shade, label_image

ICON_SHAPE = (32, 32, 3)


class DatasetError(Exception):
    """Malformed corpus input (bad file, wrong resolution, bad sidecar)."""


class Icon(NamedTuple):
    id: str
    pixels: np.ndarray  # 32x32x3 uint8


class Batch(NamedTuple):
    images: np.ndarray  # Bx32x32x3 float32 in [-1, 1]
    classes: np.ndarray  # B int64 class codes


@dataclass
class LabeledCorpus:
    icons: tuple[Icon, ...]
    labels: dict[str, ColorLabel]
    class_histogram: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.class_histogram:
            self.class_histogram = {c: 0 for c in CLASSES}
            for lab in self.labels.values():
                self.class_histogram[lab.primary] += 1

    def __len__(self):
        return len(self.icons)

    def arrays(self):
        """Stacked pixel tensor and integer class codes, corpus order."""
        images = np.stack([ic.pixels for ic in self.icons]) if self.icons else \
            np.zeros((0,) + ICON_SHAPE, dtype=np.uint8)
        codes = np.array(
            [CLASSES.index(self.labels[ic.id].primary) for ic in self.icons],
            dtype=np.int64,
        )
        return images, codes


def normalize(pixels: np.ndarray) -> np.ndarray:
    """Map byte values into [-1, 1] (pairs with the generator's tanh head)."""
    return (pixels.astype(np.float32) / 127.5) - 1.0


def denormalize(values: np.ndarray) -> np.ndarray:
    """Inverse of normalize, rounding back to bytes."""
    return np.rint((np.asarray(values) + 1.0) * 127.5).clip(0, 255).astype(np.uint8)


def _icon_from_png(path: Path) -> Icon:
    try:
        with Image.open(path) as im:
            im.load()
            has_alpha = im.mode in ("RGBA", "LA") or (
                im.mode == "P" and "transparency" in im.info
            )
            im = im.convert("RGBA" if has_alpha else "RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as exc:
        raise DatasetError(f"malformed image file {path.name}: {exc}") from exc
    if arr.shape[:2] != ICON_SHAPE[:2]:
        raise DatasetError(
            f"{path.name}: expected 32x32 icon, got {arr.shape[1]}x{arr.shape[0]}"
        )
    if arr.shape[2] == 4:
        arr = alpha_flatten(arr)
    return Icon(id=path.stem, pixels=arr)


def _load_packed(bin_path: Path, sidecar: Path) -> list[Icon]:
    try:
        meta = json.loads(sidecar.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"bad container sidecar {sidecar.name}: {exc}") from exc
    if meta.get("shape") != [32, 32, 3] or meta.get("dtype") != "u8":
        raise DatasetError(f"unsupported container layout in {sidecar.name}: {meta}")
    count = int(meta.get("count", -1))
    if count < 0:
        raise DatasetError(f"bad count in {sidecar.name}")
    raw = bin_path.read_bytes()
    expected = count * 32 * 32 * 3
    if len(raw) != expected:
        raise DatasetError(
            f"{bin_path.name}: expected {expected} bytes for {count} icons, got {len(raw)}"
        )
    tensor = np.frombuffer(raw, dtype=np.uint8).reshape((count,) + ICON_SHAPE)
    return [Icon(id=f"{i:06d}", pixels=tensor[i]) for i in range(count)]


def load_icons(path) -> list[Icon]:
    """Load a corpus from a PNG directory or a packed bin+json container.

    Directory entries are ordered lexicographically by filename; container
    entries keep native order. Every icon is validated to be 32x32.
    """
    path = Path(path)
    if path.is_dir():
        return [_icon_from_png(p) for p in sorted(path.glob("*.png"))]
    if path.suffix == ".bin":
        return _load_packed(path, path.with_suffix(".json"))
    if path.suffix == ".json":
        return _load_packed(path.with_suffix(".bin"), path)
    raise DatasetError(f"not a corpus path: {path}")


def write_packed(icons, bin_path):
    """Write icons as the flat binary container plus its JSON sidecar."""
    bin_path = Path(bin_path)
    tensor = (
        np.stack([ic.pixels for ic in icons])
        if len(icons)
        else np.zeros((0,) + ICON_SHAPE, dtype=np.uint8)
    )
    bin_path.write_bytes(tensor.astype(np.uint8).tobytes())
    sidecar = bin_path.with_suffix(".json")
    sidecar.write_text(
        json.dumps({"count": len(icons), "shape": [32, 32, 3], "dtype": "u8"})
    )
    return bin_path, sidecar


def write_label_csv(corpus: LabeledCorpus, path):
    """Persist labels as image_id,primary,top1..3,centroid hexes,counts."""
    lines = ["image_id,primary,top1,top2,top3,c1_rgb,c2_rgb,c3_rgb,count1,count2,count3"]
    for ic in corpus.icons:
        lab = corpus.labels[ic.id]
        hexes = ["#%02X%02X%02X" % tuple(e.centroid) for e in lab.palette.entries]
        counts = [str(e.pixel_count) for e in lab.palette.entries]
        lines.append(",".join([ic.id, lab.primary, *lab.top3, *hexes, *counts]))
    Path(path).write_text("\n".join(lines) + "\n")


def build_corpus(
    icons,
    labeler: Callable[[np.ndarray], ColorLabel] = label_image,
    csv_path=None,
) -> LabeledCorpus:
    """Label every icon and assemble the corpus; optionally persist the CSV."""
    labels = {}
    for ic in icons:
        try:
            labels[ic.id] = labeler(ic.pixels)
        except Exception as exc:
            raise DatasetError(f"labeling failed for icon {ic.id}: {exc}") from exc
    corpus = LabeledCorpus(icons=tuple(icons), labels=labels)
    if csv_path is not None:
        write_label_csv(corpus, csv_path)
    return corpus


# ---------------------------------------------------------------------------
# synthetic desk-scale corpus
# ---------------------------------------------------------------------------

_MIN_FILL = 0.60


def _shape_mask(kind: int, rng: np.random.Generator) -> np.ndarray:
    """Boolean fill mask for a circle, square, or clipped triangle."""
    yy, xx = np.mgrid[0:32, 0:32].astype(np.float64)
    cx = 15.5 + rng.uniform(-1.5, 1.5)
    cy = 15.5 + rng.uniform(-1.5, 1.5)
    if kind == 0:  # circle
        r = rng.uniform(15.0, 17.0)
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r**2
        while mask.mean() < _MIN_FILL:
            r += 1.0
            mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r**2
    elif kind == 1:  # square
        h = rng.uniform(13.0, 15.0)
        mask = (np.abs(xx - cx) <= h) & (np.abs(yy - cy) <= h)
        while mask.mean() < _MIN_FILL:
            h += 1.0
            mask = (np.abs(xx - cx) <= h) & (np.abs(yy - cy) <= h)
    else:  # triangle, drawn oversized and clipped to the canvas
        s = rng.uniform(30.0, 34.0)
        apex = np.array([cx, cy - s * 0.9])
        left = np.array([cx - s, cy + s * 0.75])
        right = np.array([cx + s, cy + s * 0.75])

        def inside(a, b, c):
            d1 = (xx - b[0]) * (a[1] - b[1]) - (a[0] - b[0]) * (yy - b[1])
            d2 = (xx - c[0]) * (b[1] - c[1]) - (b[0] - c[0]) * (yy - c[1])
            d3 = (xx - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (yy - a[1])
            neg = (d1 < 0) | (d2 < 0) | (d3 < 0)
            pos = (d1 > 0) | (d2 > 0) | (d3 > 0)
            return ~(neg & pos)

        mask = inside(apex, left, right)
        while mask.mean() < _MIN_FILL:
            s += 2.0
            apex = np.array([cx, cy - s * 0.9])
            left = np.array([cx - s, cy + s * 0.75])
            right = np.array([cx + s, cy + s * 0.75])
            mask = inside(apex, left, right)
    return mask


def synth_corpus(n_per_class: int, seed: int) -> LabeledCorpus:
    """Render a labeled corpus of solid shapes, one canonical shade per class.

    Each icon is a filled circle, square, or triangle (seeded choice) in the
    class's canonical shade on a white background, covering at least 60% of
    the pixels. Every icon is verified through the labeler; a mismatch aborts.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    icons, labels = [], {}
    for cls in CLASSES:
        shade = canonical_shade(cls)
        for i in range(n_per_class):
            mask = _shape_mask(int(rng.integers(3)), rng)
            img = np.full(ICON_SHAPE, 255, dtype=np.uint8)
            img[mask] = shade
            icon = Icon(id=f"{cls}_{i:04d}", pixels=img)
            lab = label_image(img)
            if lab.primary != cls:
                raise DatasetError(
                    f"synthetic self-check failed: class {cls}, seed {seed}, "
                    f"icon {icon.id} labeled {lab.primary}"
                )
            icons.append(icon)
            labels[icon.id] = lab
    return LabeledCorpus(icons=tuple(icons), labels=labels)


def batch_stream(
    corpus: LabeledCorpus, batch_size: int, seed: int
) -> Iterator[Batch]:
    """Endless epoch-shuffled stream of normalized batches.

    Every icon appears exactly once per epoch; the final short batch of an
    epoch is emitted as-is. Each stream owns its RNG state.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    images, codes = corpus.arrays()
    rng = np.random.default_rng(seed)
    n = len(corpus)
    while True:
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            sel = perm[start : start + batch_size]
            yield Batch(images=normalize(images[sel]), classes=codes[sel])
