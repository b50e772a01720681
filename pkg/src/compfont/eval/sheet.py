"""Glyph grids for visual inspection and preference studies."""
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from ..data import to_uint8


def write_grid(rows, out_path, pad=2):
    """Write rows of equally sized [-1, 1] images as one 8-bit grayscale grid."""
    rows = [list(r) for r in rows]
    if not rows or not any(rows):
        raise ValueError("empty grid")
    h, w = np.asarray(rows[0][0]).shape[-2:]
    n_cols = max(len(r) for r in rows)
    sheet = np.full((len(rows) * (h + pad) + pad, n_cols * (w + pad) + pad), 200, dtype=np.uint8)
    for i, row in enumerate(rows):
        for j, img in enumerate(row):
            y, x = pad + i * (h + pad), pad + j * (w + pad)
            sheet[y:y + h, x:x + w] = to_uint8(np.asarray(img).reshape(h, w))
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(sheet, mode="L").save(out_path)
    return len(rows), n_cols


@torch.no_grad()
def sample_sheet(generator, references, chars, out_path, ground_truth=None):
    """Generated rows (one per style) plus an optional ground-truth row.

    ``references`` maps each style to its reference glyphs; ``ground_truth``
    is one row of images aligned with ``chars``.  Returns ``(rows, cols)``.
    """
    chars = list(chars)
    if not chars:
        raise ValueError("sample sheet needs at least one character")
    was_training = generator.training
    generator.eval()
    try:
        dm = generator.new_memory()
        rows = []
        for style, glyphs in references.items():
            glyphs = list(getattr(glyphs, "glyphs", glyphs))
            generator.encode_reference(dm, glyphs, [g.char for g in glyphs], [style] * len(glyphs))
            out = generator.generate(dm, chars, [style] * len(chars))
            rows.append(list(out[:, 0].cpu().numpy()))
    finally:
        generator.train(was_training)
    if ground_truth is not None:
        gt = [getattr(g, "pixels", g) for g in ground_truth]
        if len(gt) != len(chars):
            raise ValueError("ground-truth row must match the character list")
        rows.append(gt)
    return write_grid(rows, out_path)
