"""Procedural glyph corpora for tests, demos and desk-scale experiments.

Each component label owns a fixed stroke skeleton; a glyph places the
skeletons of its components in layout boxes that depend on the whole
combination (for Hangul the vowel shape and the presence of a final move
everything around), so component shapes change with context the way real
compositional glyphs do.  A style perturbs stroke width, slant, scale and,
per component, the skeleton control points.  No font files are needed.
"""
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

from ..scripts import ComponentLabel
from .dataset import GlyphDataset

_GRID = np.array([(x, y) for y in (0.0, 0.5, 1.0) for x in (0.0, 0.5, 1.0)])
_EMPTY_NAMES = {"∅", ""}

# Hangul medial classes by index: vowels written to the right / below / both
_VERTICAL = {0, 1, 2, 3, 4, 5, 6, 7, 20}
_HORIZONTAL = {8, 12, 13, 17, 18}


@dataclass(frozen=True)
class SyntheticStyle:
    name: str
    width: float = 0.06     # stroke width as a fraction of the glyph size
    slant: float = 0.0
    scale: float = 0.9
    jitter: float = 0.05    # per-component control point displacement
    seed: int = 0


def synthetic_styles(n, seed=0):
    rng = np.random.default_rng([seed, 7])
    styles = []
    for k in range(n):
        styles.append(SyntheticStyle(
            name=f"syn{k:03d}",
            width=float(rng.uniform(0.035, 0.10)),
            slant=float(rng.uniform(-0.3, 0.3)),
            scale=float(rng.uniform(0.75, 0.98)),
            jitter=float(rng.uniform(0.0, 0.09)),
            seed=int(rng.integers(1 << 30)),
        ))
    return styles


def _skeleton(label):
    rng = np.random.default_rng([label.type_index, label.component_index, 4242])
    n_strokes = int(rng.integers(2, 5))
    strokes = []
    for _ in range(n_strokes):
        a, b = rng.choice(9, size=2, replace=False)
        strokes.append((a, b))
    return strokes


def _korean_boxes(labels):
    medial, final = labels[1].component_index, labels[2].component_index
    bottom = 0.62 if final != 0 else 0.95
    if medial in _VERTICAL:
        boxes = [(0.05, 0.08, 0.55, bottom - 0.05), (0.62, 0.03, 0.95, bottom)]
    elif medial in _HORIZONTAL:
        boxes = [(0.2, 0.03, 0.8, bottom * 0.5), (0.05, bottom * 0.58, 0.95, bottom)]
    else:
        boxes = [(0.05, 0.03, 0.6, bottom * 0.5), (0.05, 0.05, 0.95, bottom)]
    boxes.append((0.12, 0.68, 0.88, 0.97))
    return boxes


def _generic_boxes(num_types):
    boxes = [(0.15, 0.3, 0.85, 0.8)]
    above = [(0.25, 0.05, 0.75, 0.27), (0.55, 0.0, 0.95, 0.2)]
    below = [(0.25, 0.83, 0.75, 1.0)]
    extra = above + below
    for t in range(1, num_types):
        boxes.append(extra[(t - 1) % len(extra)])
    return boxes


def render_glyph(schema, char, style, size=64, supersample=4):
    """Render one glyph as uint8 grayscale (white background)."""
    labels = schema.decompose(char)
    boxes = _korean_boxes(labels) if schema.script_id == "korean" else _generic_boxes(schema.num_types)
    big = size * supersample
    im = Image.new("L", (big, big), 255)
    draw = ImageDraw.Draw(im)
    width = max(1, int(round(style.width * big)))

    def place(pt):
        x, y = pt
        x = 0.5 + (x - 0.5) * style.scale + style.slant * (0.5 - y) * style.scale
        y = 0.5 + (y - 0.5) * style.scale
        return (x * big, y * big)

    for label, (x0, y0, x1, y1) in zip(labels, boxes):
        if schema.is_null(label) or schema.name(label) in _EMPTY_NAMES:
            continue
        rng = np.random.default_rng([style.seed, label.type_index, label.component_index])
        pts = _GRID + rng.uniform(-style.jitter, style.jitter, size=_GRID.shape)
        pts = np.clip(pts, -0.1, 1.1)
        for a, b in _skeleton(ComponentLabel(*label)):
            pa = place((x0 + pts[a][0] * (x1 - x0), y0 + pts[a][1] * (y1 - y0)))
            pb = place((x0 + pts[b][0] * (x1 - x0), y0 + pts[b][1] * (y1 - y0)))
            draw.line([pa, pb], fill=0, width=width, joint="curve")
            r = width / 2
            for px, py in (pa, pb):
                draw.ellipse([px - r, py - r, px + r, py + r], fill=0)
    return np.asarray(im.resize((size, size), Image.LANCZOS), dtype=np.uint8)


def compact_charset(schema, n_chars, seed=0, per_type=None):
    """Random characters built from a small per-type label vocabulary.

    Keeping the vocabulary small makes every component recur in several
    characters, which core-subset training needs.
    """
    rng = np.random.default_rng([seed, 11])
    if per_type is None:
        m = math.ceil(n_chars ** (1.0 / schema.num_types)) + 1
        per_type = [m] * schema.num_types
    vocab = []
    for t, m in enumerate(per_type):
        labels = schema.labels(t, include_null=False)
        vocab.append([labels[i] for i in rng.choice(len(labels), min(m, len(labels)), replace=False)])
    combos = [[a] for a in vocab[0]]
    for t in range(1, schema.num_types):
        combos = [c + [l] for c in combos for l in vocab[t]]
    if n_chars > len(combos):
        raise ValueError(f"vocabulary {per_type} yields only {len(combos)} characters")
    picks = rng.choice(len(combos), n_chars, replace=False)
    return sorted(schema.compose(combos[i]) for i in picks)


def make_corpus(schema, chars, n_fonts=None, styles=None, image_size=64, seed=0):
    """In-memory :class:`GlyphDataset` with every style rendering every char."""
    if styles is None:
        styles = synthetic_styles(n_fonts, seed)
    glyphs = {s.name: {c: render_glyph(schema, c, s, image_size) for c in chars} for s in styles}
    return GlyphDataset.from_arrays(schema, glyphs, image_size)
