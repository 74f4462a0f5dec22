"""Glossary icon labelling by nearest-neighbour thumbnail matching.

Catalog glossaries pair each solution/destination-type icon with a text
label; entry pages show the icon only. Icons on entry pages are the same
graphics as the glossary ones, so matching a normalized thumbnail against
the (augmented) glossary descriptors recovers the label.
"""

from __future__ import annotations

import base64
import io
import json
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import BelowThreshold, EmptyGlossary
from .records import load_image

THUMB_SIZE = 32
DEFAULT_THRESHOLD = 0.90


@dataclass(frozen=True)
class AugmentConfig:
    seed: int = 0
    resize_factor: float = 0.5
    jpeg_quality: int = 35
    noise_sigma: float = 4.0  # grey levels


@dataclass(frozen=True)
class IconDescriptor:
    thumbnail: np.ndarray  # uint8, THUMB_SIZE x THUMB_SIZE
    source: str = "Original"  # Original | Augmented

    @property
    def vector(self) -> np.ndarray:
        return self.thumbnail.astype(np.float64).ravel() / 255.0


def _flatten_alpha(im: Image.Image) -> Image.Image:
    if im.mode in ("RGBA", "LA") or (im.mode == "P" and "transparency" in im.info):
        rgba = im.convert("RGBA")
        bg = Image.new("RGBA", rgba.size, (255, 255, 255, 255))
        im = Image.alpha_composite(bg, rgba)
    return im


def thumbnail(image, size: int = THUMB_SIZE) -> np.ndarray:
    im = _flatten_alpha(load_image(image)).convert("L")
    return np.asarray(im.resize((size, size), Image.BILINEAR), dtype=np.uint8)


def _centered(vectors: np.ndarray) -> np.ndarray:
    c = vectors - vectors.mean(axis=-1, keepdims=True)
    norms = np.linalg.norm(c, axis=-1, keepdims=True)
    return np.divide(c, norms, out=np.zeros_like(c), where=norms > 1e-12)


def similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of mean-centred thumbnail vectors, clipped to [0, 1].

    Centring keeps flat white backgrounds from dominating, so noise or blank
    images do not look like every icon.
    """
    ca, cb = _centered(np.stack([a, b]).astype(np.float64))
    return float(np.clip(ca @ cb, 0.0, 1.0))


def _augment(image, cfg: AugmentConfig, index: int) -> list[np.ndarray]:
    im = _flatten_alpha(load_image(image)).convert("L")
    w, h = im.size
    small = im.resize((max(1, round(w * cfg.resize_factor)), max(1, round(h * cfg.resize_factor))),
                      Image.BILINEAR)
    buf = io.BytesIO()
    im.save(buf, format="JPEG", quality=cfg.jpeg_quality)
    jpeg = np.asarray(Image.open(io.BytesIO(buf.getvalue())).convert("L"), dtype=np.float64)
    rng = np.random.default_rng([cfg.seed, index])
    noisy = np.clip(jpeg + rng.normal(0.0, cfg.noise_sigma, jpeg.shape), 0, 255).astype(np.uint8)
    return [thumbnail(small), thumbnail(noisy)]


@dataclass
class IconGlossary:
    entries: dict = field(default_factory=dict)  # label -> list[IconDescriptor]
    catalog_id: str = ""
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)
    _labels: list | None = field(default=None, repr=False, compare=False)

    @property
    def labels(self) -> list[str]:
        return list(self.entries)

    def descriptor_count(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def _index(self):
        if self._matrix is None:
            labels, vecs = [], []
            for label, descs in self.entries.items():
                for d in descs:
                    labels.append(label)
                    vecs.append(d.vector)
            self._labels = labels
            self._matrix = _centered(np.array(vecs))
        return self._labels, self._matrix

    def best_match(self, image) -> tuple[str, float]:
        if not self.entries:
            raise EmptyGlossary("glossary has no entries")
        labels, matrix = self._index()
        q = _centered(thumbnail(image).astype(np.float64).ravel() / 255.0)
        sims = np.clip(matrix @ q, 0.0, 1.0)
        i = int(np.argmax(sims))  # first maximum keeps ties deterministic
        return labels[i], float(sims[i])

    def to_dict(self) -> dict:
        return {
            "catalog_id": self.catalog_id,
            "thumb_size": THUMB_SIZE,
            "entries": [
                {
                    "label": label,
                    "descriptors": [
                        {"source": d.source,
                         "thumbnail": base64.b64encode(d.thumbnail.tobytes()).decode("ascii")}
                        for d in descs
                    ],
                }
                for label, descs in self.entries.items()
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IconGlossary":
        n = d.get("thumb_size", THUMB_SIZE)
        entries = {}
        for e in d["entries"]:
            if e["label"] in entries:
                raise ValueError(f"duplicate glossary label {e['label']!r}")
            entries[e["label"]] = [
                IconDescriptor(
                    np.frombuffer(base64.b64decode(x["thumbnail"]), dtype=np.uint8).reshape(n, n).copy(),
                    x["source"],
                )
                for x in e["descriptors"]
            ]
        return cls(entries, d.get("catalog_id", ""))

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "IconGlossary":
        return cls.from_dict(json.loads(text))


def build_glossary(labeled_images, augment: AugmentConfig | None = None,
                   catalog_id: str = "") -> IconGlossary:
    """Glossary with one original plus two augmented descriptors per image."""
    cfg = augment or AugmentConfig()
    entries: dict[str, list[IconDescriptor]] = {}
    for index, (label, image) in enumerate(labeled_images):
        descs = entries.setdefault(label, [])
        descs.append(IconDescriptor(thumbnail(image), "Original"))
        descs.extend(IconDescriptor(t, "Augmented") for t in _augment(image, cfg, index))
    if not entries:
        raise EmptyGlossary("no labelled images supplied")
    return IconGlossary(entries, catalog_id)


def match_icon(image, glossary: IconGlossary,
               threshold: float = DEFAULT_THRESHOLD) -> tuple[str, float]:
    label, sim = glossary.best_match(image)
    if sim < threshold:
        raise BelowThreshold(label, sim, threshold)
    return label, sim
