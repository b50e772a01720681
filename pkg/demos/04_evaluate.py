"""Scoring a generator on the four seen/unseen cells with small judge networks."""
import tempfile
from pathlib import Path

from compfont.config import TrainConfig
from compfont.data import DatasetSplit
from compfont.data.synthetic import compact_charset, make_corpus
from compfont.eval import ClassifierConfig, EvalConfig, EvalReport, evaluate, train_eval_classifier
from compfont.scripts import get_schema
from compfont.training import train

korean = get_schema("korean")
chars = compact_charset(korean, 30, seed=0)
ds = make_corpus(korean, chars, n_fonts=5, image_size=32, seed=0)
split = DatasetSplit(tuple(ds.fonts[:4]), tuple(ds.fonts[4:]), tuple(chars[:26]), tuple(chars[26:]))

cfg = TrainConfig.preset("desk", iterations=10, batch_size=4, checkpoint_every=0,
                         model=dict(image_size=32, base_channels=4, enc_max_channels=16,
                                    dec_max_channels=16, disc_max_channels=16, blocks_per_stage=1,
                                    attention_heads=2))
out = Path(tempfile.mkdtemp())
last = train(ds, split, cfg, out / "run")

# judges are trained on real glyphs only; a low floor because the corpus is tiny
cc = ClassifierConfig(depth=18, width=8, epochs=5, accuracy_floor=0.0, seed=0)
clfs = {t: train_eval_classifier(ds, t, cc) for t in ("content", "style")}
for t, c in clfs.items():
    print(t, "judge val accuracy", round(c.val_accuracy, 3))

report = evaluate(last, ds, split, clfs, EvalConfig(n_references=10, seed=0))
print(report.format_table())
report.save(out / "report.jsonl")
assert EvalReport.from_jsonl((out / "report.jsonl").read_text()).cells == report.cells
