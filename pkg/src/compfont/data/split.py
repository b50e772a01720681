"""Font / character train-evaluation splits."""
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

SPLIT_FORMAT = "compfont-split"

CELLS = (("seen", "seen"), ("seen", "unseen"), ("unseen", "seen"), ("unseen", "unseen"))


@dataclass(frozen=True)
class DatasetSplit:
    train_fonts: tuple
    eval_fonts: tuple
    seen_chars: tuple
    unseen_chars: tuple
    seed: int = 0
    font_ratio: float = 0.8
    char_ratio: float = 0.9

    def __post_init__(self):
        if set(self.train_fonts) & set(self.eval_fonts):
            raise ValueError("train and eval fonts overlap")
        if set(self.seen_chars) & set(self.unseen_chars):
            raise ValueError("seen and unseen characters overlap")

    @classmethod
    def train_on_everything(cls, dataset):
        """Degenerate split with every font and character used for training."""
        return cls(tuple(dataset.fonts), (), tuple(dataset.all_chars()), (), 0, 1.0, 1.0)

    def fonts(self, which):
        return {"seen": self.train_fonts, "unseen": self.eval_fonts}[which]

    def chars(self, which):
        return {"seen": self.seen_chars, "unseen": self.unseen_chars}[which]

    def cells(self):
        """The four evaluation cells keyed by (font set, char set)."""
        return {(f, c): (self.fonts(f), self.chars(c)) for f, c in CELLS}

    def to_dict(self):
        d = asdict(self)
        d = {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
        return {"format": SPLIT_FORMAT, **d}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=1) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path):
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        if d.pop("format", SPLIT_FORMAT) != SPLIT_FORMAT:
            raise ValueError(f"{path} is not a split file")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def _partition(items, ratio, rng, what):
    items = sorted(items)
    n_first = math.floor(len(items) * ratio)
    if n_first == 0 or n_first == len(items):
        raise ValueError(f"ratio {ratio} leaves an empty {what} partition ({len(items)} items)")
    perm = rng.permutation(len(items))
    first = tuple(sorted(items[i] for i in perm[:n_first]))
    rest = tuple(sorted(items[i] for i in perm[n_first:]))
    return first, rest


def make_split(dataset, font_ratio=0.8, char_ratio=0.9, seed=0):
    """Deterministic split; the training side gets ``floor(n * ratio)`` items."""
    for r in (font_ratio, char_ratio):
        if not 0.0 < r < 1.0:
            raise ValueError(f"split ratios must lie in (0, 1), got {r}")
    train_fonts, eval_fonts = _partition(dataset.fonts, font_ratio, np.random.default_rng([seed, 0]), "font")
    seen, unseen = _partition(dataset.all_chars(), char_ratio, np.random.default_rng([seed, 1]), "character")
    return DatasetSplit(train_fonts, eval_fonts, seen, unseen, seed, font_ratio, char_ratio)
