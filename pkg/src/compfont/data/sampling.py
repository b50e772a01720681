"""Reference-set sampling and training batch assembly."""
import logging
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..scripts import minimal_reference_set

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReferenceSet:
    style: object
    glyphs: tuple

    @property
    def chars(self):
        return tuple(g.char for g in self.glyphs)

    def __len__(self):
        return len(self.glyphs)


def required_size(schema, required):
    """Lower bound on the size of a set covering ``required``: its largest type."""
    counts = [0] * schema.num_types
    for label in required:
        counts[label.type_index] += 1
    return max(counts)


def sample_references(dataset, style, k, seed, schema=None, candidates=None, required=None):
    """Draw ``k`` glyphs of one style whose characters cover every component.

    A random greedy cover is drawn first and padded with random extra
    characters of the same style.  ``candidates`` restricts the characters
    that may be used (e.g. to the seen characters); ``required`` narrows the
    labels to cover from the whole schema to, say, those a corpus uses.
    """
    schema = schema or dataset.schema
    bound = schema.min_reference_size if required is None else required_size(schema, required)
    if k < bound:
        raise ValueError(f"k={k} is below the minimal covering size {bound} "
                         f"of the {schema.script_id} components to cover")
    available = dataset.chars(style)
    if candidates is not None:
        allowed = set(candidates)
        available = [c for c in available if c in allowed]
    cover = minimal_reference_set(schema, available, seed, required)
    if len(cover) > k:
        raise ValueError(f"greedy cover of {style} needs {len(cover)} glyphs, more than k={k}")
    rest = sorted(set(available) - set(cover))
    if len(rest) < k - len(cover):
        raise ValueError(f"style {style} has only {len(available)} usable glyphs, k={k} requested")
    rng = np.random.default_rng([0 if seed is None else seed, 1])
    extra = [rest[i] for i in rng.choice(len(rest), k - len(cover), replace=False)]
    return ReferenceSet(dataset.style(style), tuple(dataset.glyph(style, c) for c in cover + extra))


@dataclass
class Batch:
    step: int
    targets: list           # GlyphImage per target
    references: list        # per target, list of GlyphImage (core component subset)
    font_index: np.ndarray  # index into split.train_fonts
    char_index: np.ndarray  # index into split.seen_chars

    def __len__(self):
        return len(self.targets)


class _CoreIndex:
    """Per font: which seen characters contain each component."""

    def __init__(self, dataset, split, schema):
        self.schema = schema
        seen = set(split.seen_chars)
        self.by_component = {}
        self.pairs = []
        skipped = 0
        for font in split.train_fonts:
            chars = [c for c in dataset.chars(font) if c in seen]
            index = defaultdict(list)
            for c in chars:
                for label in schema.decompose(c):
                    if not schema.is_null(label):
                        index[label].append(c)
            self.by_component[font] = index
            for c in chars:
                if all(len(index[l]) > 1 for l in schema.decompose(c) if not schema.is_null(l)):
                    self.pairs.append((font, c))
                else:
                    skipped += 1
        if skipped:
            logger.info("skipped %d (font, char) targets whose components need the target itself", skipped)
        self.skipped = skipped

    def references(self, font, char, rng):
        refs = []
        for label in self.schema.decompose(char):
            if self.schema.is_null(label):
                continue
            options = [c for c in self.by_component[font][label] if c != char]
            pick = options[int(rng.integers(len(options)))]
            if pick not in refs:
                refs.append(pick)
        return refs


def batches(dataset, split, batch_size, seed, schema=None, start=0):
    """Infinite shuffled stream of training batches.

    Batch ``b`` depends only on ``(seed, b)``, so a stream restarted with
    ``start=b`` continues exactly where an uninterrupted one would be.
    """
    schema = schema or dataset.schema
    core = _CoreIndex(dataset, split, schema)
    n = len(core.pairs)
    if n == 0:
        raise ValueError("no trainable (font, char) pairs in the split")
    font_pos = {f: i for i, f in enumerate(split.train_fonts)}
    char_pos = {c: i for i, c in enumerate(split.seen_chars)}
    perms = {}

    def order(epoch):
        if epoch not in perms:
            perms.clear()
            perms[epoch] = np.random.default_rng([seed, 0, epoch]).permutation(n)
        return perms[epoch]

    step = start
    while True:
        rng = np.random.default_rng([seed, 1, step])
        targets, refs = [], []
        for g in range(step * batch_size, (step + 1) * batch_size):
            font, char = core.pairs[order(g // n)[g % n]]
            targets.append(dataset.glyph(font, char))
            refs.append([dataset.glyph(font, c) for c in core.references(font, char, rng)])
        yield Batch(step, targets, refs,
                    np.array([font_pos[t.style.font] for t in targets], dtype=np.int64),
                    np.array([char_pos[t.char] for t in targets], dtype=np.int64))
        step += 1
