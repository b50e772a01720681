"""Train a very small generator for a few steps, then generate and mix."""
import tempfile
from pathlib import Path

import torch

from compfont.config import TrainConfig
from compfont.data import DatasetSplit
from compfont.data.synthetic import compact_charset, make_corpus
from compfont.eval import sample_sheet, write_grid
from compfont.scripts import get_schema
from compfont.training import load_generator, train

korean = get_schema("korean")
chars = compact_charset(korean, 30, seed=0)
ds = make_corpus(korean, chars, n_fonts=4, image_size=32, seed=0)
split = DatasetSplit(tuple(ds.fonts[:3]), tuple(ds.fonts[3:]), tuple(chars[:26]), tuple(chars[26:]))

# the desk profile shrunk further so this runs in seconds on a CPU
cfg = TrainConfig.preset("desk", iterations=20, batch_size=4, log_every=5, checkpoint_every=0,
                         model=dict(image_size=32, base_channels=4, enc_max_channels=16,
                                    dec_max_channels=16, disc_max_channels=16, blocks_per_stage=1,
                                    attention_heads=2))
out = Path(tempfile.mkdtemp())
last = train(ds, split, cfg, out / "run")
print(open(out / "run" / "log.jsonl").read().splitlines()[-1])

gen, schema, _ = load_generator(last)
gen.eval()
font = split.eval_fonts[0]
refs = {font: [ds.glyph(font, c) for c in split.seen_chars]}
sample_sheet(gen, refs, list(split.unseen_chars), out / "sheet.png",
             ground_truth=[ds.glyph(font, c) for c in split.unseen_chars])

# interpolate the medial component between two styles
a, b = ds.fonts[0], ds.fonts[1]
dm = gen.new_memory()
gen.encode_glyphs(dm, ds.glyphs(a) + ds.glyphs(b))
char = ds.chars(a)[0]
with torch.no_grad():
    strip = [gen.mix_components(dm, char, ds.style(a), ds.style(b), 1, t)[0, 0].numpy()
             for t in (0, 0.25, 0.5, 0.75, 1)]
write_grid([strip], out / "mix.png")
print("wrote", out)
