"""Glyph datasets: on-disk ingestion and in-memory corpora.

On-disk layout is ``root/<font_id>/<hex codepoints>.png``; multi-codepoint
characters join their codepoints with ``_`` (``0e01_0e34.png``).  Pixels are
8-bit grayscale with a white background and are mapped to ``[-1, 1]`` with
white at -1, so ink is the positive signal.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import EmptyFont, UnreadableImage

logger = logging.getLogger(__name__)

DEFAULT_IMAGE_SIZE = 128


@dataclass(frozen=True)
class StyleLabel:
    font: str
    index: int

    def __str__(self):
        return self.font


@dataclass(frozen=True, eq=False)
class GlyphImage:
    pixels: np.ndarray  # (H, W) float32 in [-1, 1]
    char: str
    style: StyleLabel


def char_to_filename(char):
    return "_".join(f"{ord(c):04x}" for c in char) + ".png"


def filename_to_char(name):
    stem = Path(name).stem
    return "".join(chr(int(part, 16)) for part in stem.split("_"))


def to_unit(gray):
    """uint8 grayscale (white=255) to float32 in [-1, 1] (white=-1)."""
    return (1.0 - np.asarray(gray, dtype=np.float32) / 127.5).astype(np.float32)


def to_uint8(pixels):
    pixels = np.clip(np.asarray(pixels, dtype=np.float64), -1.0, 1.0)
    return np.round((1.0 - pixels) * 127.5).astype(np.uint8)


def read_image(path, image_size):
    try:
        with Image.open(path) as im:
            im = im.convert("L")
            if im.size != (image_size, image_size):
                im = im.resize((image_size, image_size), Image.BILINEAR)
            return to_unit(np.asarray(im))
    except (OSError, UnidentifiedImageError, ValueError) as e:
        raise UnreadableImage(path, str(e)) from e


def write_image(path, pixels):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(pixels), mode="L").save(path)


def _probe(path):
    try:
        with Image.open(path) as im:
            im.verify()
    except (OSError, UnidentifiedImageError, ValueError, SyntaxError) as e:
        raise UnreadableImage(path, str(e)) from e


class GlyphDataset:
    """Read-only (font x character) glyph collection with lazy pixel access."""

    def __init__(self, schema, image_size, sources, cache=True):
        self.schema = schema
        self.image_size = image_size
        self.fonts = sorted(sources)
        self._sources = {f: dict(sources[f]) for f in self.fonts}
        self._styles = {f: StyleLabel(f, i) for i, f in enumerate(self.fonts)}
        self._chars = {f: sorted(self._sources[f]) for f in self.fonts}
        self._cache = {} if cache else None

    @classmethod
    def from_arrays(cls, schema, glyphs, image_size=None):
        """Build from ``{font: {char: array}}``; uint8 arrays are normalized."""
        sources = {}
        for font, chars in glyphs.items():
            sources[font] = {}
            for char, arr in chars.items():
                schema.decompose(char)
                arr = np.asarray(arr)
                arr = to_unit(arr) if arr.dtype == np.uint8 else arr.astype(np.float32)
                if image_size is None:
                    image_size = arr.shape[0]
                if arr.shape != (image_size, image_size):
                    raise ValueError(f"glyph {font}/{char!r} has shape {arr.shape}")
                sources[font][char] = arr
            if not sources[font]:
                raise EmptyFont(f"font {font!r} has no glyphs")
        return cls(schema, image_size, sources, cache=False)

    def __len__(self):
        return sum(len(c) for c in self._chars.values())

    def __repr__(self):
        return f"GlyphDataset({len(self.fonts)} fonts, {len(self)} glyphs, {self.image_size}px)"

    def style(self, font):
        return font if isinstance(font, StyleLabel) else self._styles[font]

    def chars(self, font):
        return self._chars[str(font)]

    def all_chars(self):
        return sorted(set().union(*self._chars.values())) if self.fonts else []

    def has(self, font, char):
        return char in self._sources.get(str(font), ())

    def pixels(self, font, char):
        font = str(font)
        src = self._sources[font][char]
        if isinstance(src, np.ndarray):
            return src
        key = (font, char)
        if self._cache is not None and key in self._cache:
            return self._cache[key]
        arr = read_image(src, self.image_size)
        if self._cache is not None:
            self._cache[key] = arr
        return arr

    def glyph(self, font, char):
        return GlyphImage(self.pixels(font, char), char, self.style(font))

    def glyphs(self, font, chars=None):
        return [self.glyph(font, c) for c in (self.chars(font) if chars is None else chars)]


def ingest(root, schema, image_size=DEFAULT_IMAGE_SIZE, skip_unreadable=False, cache=True):
    """Index an image-directory corpus; pixels are decoded lazily."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(root)
    sources = {}
    skipped = 0
    for font_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        files = {}
        for path in sorted(font_dir.glob("*.png")):
            try:
                char = filename_to_char(path.name)
            except ValueError:
                logger.warning("ignoring %s: name is not a codepoint", path)
                continue
            if not schema.is_valid(char):
                logger.warning("ignoring %s: not a %s character", path, schema.script_id)
                continue
            try:
                _probe(path)
            except UnreadableImage:
                if not skip_unreadable:
                    raise
                skipped += 1
                logger.warning("skipping unreadable image %s", path)
                continue
            files[char] = path
        if not files:
            raise EmptyFont(f"font directory {font_dir} has no readable glyph images")
        sources[font_dir.name] = files
    if skipped:
        logger.warning("skipped %d unreadable images under %s", skipped, root)
    return GlyphDataset(schema, image_size, sources, cache=cache)


def write_dataset(dataset, root):
    root = Path(root)
    for font in dataset.fonts:
        for char in dataset.chars(font):
            write_image(root / font / char_to_filename(char), dataset.pixels(font, char))
    return root


def load_glyph_dir(path, schema, image_size):
    """Load a flat directory of ``<hex>.png`` glyphs as ``{char: pixels}``."""
    out = {}
    for p in sorted(Path(path).glob("*.png")):
        char = filename_to_char(p.name)
        schema.decompose(char)
        out[char] = read_image(p, image_size)
    if not out:
        raise EmptyFont(f"no glyph images in {path}")
    return out
