"""A procedurally drawn corpus, a font/char split and per-font reference draws."""
import tempfile
from pathlib import Path

from compfont.data import make_split, sample_references, write_dataset
from compfont.data.synthetic import compact_charset, make_corpus
from compfont.eval import write_grid
from compfont.scripts import get_schema

korean = get_schema("korean")
chars = compact_charset(korean, 40, seed=0)  # every component at least once
ds = make_corpus(korean, chars, n_fonts=6, image_size=64, seed=0)
print(len(ds), "glyphs in", len(ds.fonts), "fonts")

split = make_split(ds, font_ratio=0.7, char_ratio=0.8, seed=0)
print("train fonts", split.train_fonts, "eval fonts", split.eval_fonts)
print(len(split.seen_chars), "seen chars,", len(split.unseen_chars), "unseen")

# a toy corpus cannot hold every component, so cover only the ones its chars use
used = {l for c in chars for l in korean.decompose(c) if not korean.is_null(l)}
refs = sample_references(ds, ds.fonts[0], 30, seed=0, schema=korean, required=used)
print("references for", ds.fonts[0], "".join(refs.chars))

out = Path(tempfile.mkdtemp())
write_dataset(ds, out / "data")  # one directory per font, one PNG per char
rows = [[ds.pixels(f, c) for c in chars[:10]] for f in ds.fonts]
write_grid(rows, out / "corpus.png")
print("wrote", out)
