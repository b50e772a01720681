"""Four-cell evaluation of a trained generator."""
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..data import CELLS, sample_references
from ..errors import CompfontError
from .classifier import FEATURE_LAYER
from .metrics import ms_ssim, ssim
from .perceptual import accuracy, mfid_from_features

logger = logging.getLogger(__name__)

REPORT_FORMAT = "compfont-eval-report"
METRICS = ("ssim", "ms_ssim", "content_acc", "style_acc", "content_pd", "style_pd",
           "content_mfid", "style_mfid")


@dataclass
class EvalConfig:
    n_references: int = 30
    seed: int = 0
    min_class_count: int = 2
    batch_size: int = 64
    use_ema: bool = True


def cell_name(font_set, char_set):
    return f"{font_set}_fonts/{char_set}_chars"


@dataclass
class EvalReport:
    cells: dict                                   # cell name -> {metric: value or None}
    counts: dict                                  # cell name -> number of scored glyphs
    failures: list = field(default_factory=list)  # [{font, code, message}]
    seed: int = 0
    n_references: int = 30
    feature_layer: str = FEATURE_LAYER

    def generalization_gap(self):
        """Seen-font minus unseen-font value per char set and metric."""
        gap = {}
        for chars in ("seen", "unseen"):
            seen, unseen = self.cells[cell_name("seen", chars)], self.cells[cell_name("unseen", chars)]
            gap[chars] = {m: (None if seen.get(m) is None or unseen.get(m) is None
                              else seen[m] - unseen[m]) for m in METRICS}
        return gap

    def records(self):
        yield {"format": REPORT_FORMAT, "version": 1, "feature_layer": self.feature_layer,
               "seed": self.seed, "n_references": self.n_references}
        for name, values in self.cells.items():
            yield {"cell": name, "metric": "count", "value": self.counts[name]}
            for m in METRICS:
                yield {"cell": name, "metric": m, "value": values.get(m)}
        for chars, values in self.generalization_gap().items():
            for m in METRICS:
                yield {"gap": f"{chars}_chars", "metric": m, "value": values[m]}
        for f in self.failures:
            yield {"failure": f["font"], "code": f["code"], "message": f["message"]}

    def to_jsonl(self):
        return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in self.records())

    def save(self, path):
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def from_jsonl(cls, text):
        lines = [json.loads(l) for l in text.splitlines() if l.strip()]
        head = lines[0]
        if head.get("format") != REPORT_FORMAT:
            raise ValueError("not an evaluation report")
        cells, counts, failures = {}, {}, []
        for r in lines[1:]:
            if "cell" in r:
                if r["metric"] == "count":
                    counts[r["cell"]] = r["value"]
                else:
                    cells.setdefault(r["cell"], {})[r["metric"]] = r["value"]
            elif "failure" in r:
                failures.append({"font": r["failure"], "code": r["code"], "message": r["message"]})
        return cls(cells, counts, failures, head["seed"], head["n_references"], head["feature_layer"])

    def format_table(self):
        names = [cell_name(f, c) for f, c in CELLS]
        width = max(len(n) for n in names)
        lines = [f"# features: {self.feature_layer}; seed {self.seed}; k={self.n_references}",
                 " " * 14 + "".join(f"{n:>{width + 2}}" for n in names)]
        fmt = lambda v: "-" if v is None else f"{v:.4f}"  # noqa: E731
        for m in METRICS:
            lines.append(f"{m:<14}" + "".join(f"{fmt(self.cells[n].get(m)):>{width + 2}}" for n in names))
        lines.append("generalization gap (seen fonts - unseen fonts)")
        for chars, values in self.generalization_gap().items():
            lines.append(f"  {chars + ' chars':<14}" + "  ".join(f"{m}={fmt(values[m])}" for m in METRICS))
        for f in self.failures:
            lines.append(f"failure: {f['font']}: {f['code']}: {f['message']}")
        return "\n".join(lines)


def _needed(schema, chars):
    return {l for c in chars for l in schema.decompose(c) if not schema.is_null(l)}


def _font_seed(seed, fonts, font):
    return [seed, sorted(fonts).index(font)]


@torch.no_grad()
def _generate_font(generator, dataset, font, refs, chars, batch_size):
    dm = generator.new_memory()
    glyphs = list(refs.glyphs)
    generator.encode_reference(dm, glyphs, [g.char for g in glyphs], [font] * len(glyphs))
    out = []
    for i in range(0, len(chars), batch_size):
        chunk = chars[i:i + batch_size]
        out.append(generator.generate(dm, chunk, [font] * len(chunk))[:, 0].cpu().numpy())
    return np.concatenate(out).astype(np.float64) if out else np.zeros((0,) + (dataset.image_size,) * 2)


def _score(gen, real, chars, fonts, clfs, cfg):
    if len(gen) == 0:
        return {m: None for m in METRICS}
    vals = {"ssim": float(np.mean([ssim(a, b) for a, b in zip(gen, real)])),
            "ms_ssim": float(np.mean([ms_ssim(a, b) for a, b in zip(gen, real)]))}
    for target, labels in (("content", chars), ("style", fonts)):
        clf = clfs.get(target)
        if clf is None:
            vals.update({f"{target}_acc": None, f"{target}_pd": None, f"{target}_mfid": None})
            continue
        fg, fr = clf.features(gen), clf.features(real)
        vals[f"{target}_acc"] = accuracy(clf, gen, labels)
        vals[f"{target}_pd"] = float(np.linalg.norm(fg - fr, axis=1).mean())
        try:
            vals[f"{target}_mfid"] = mfid_from_features(fg, fr, labels, labels, cfg.min_class_count)
        except ValueError:
            logger.warning("%s mFID undefined: no class reaches %d samples", target, cfg.min_class_count)
            vals[f"{target}_mfid"] = None
    return vals


def evaluate(model, dataset, split, clfs=None, config=None):
    """Score a generator on the four {seen, unseen fonts} x {seen, unseen chars} cells.

    Per font, one reference set of ``n_references`` glyphs is drawn from the
    seen characters (seeded by ``config.seed`` and the font), covering every
    component the font's evaluated characters use, and every other
    character of each cell is generated from it; reference
    characters are never scored.  ``model`` is a Generator or a checkpoint
    path.  Failures (e.g. a font lacking glyphs for some component) are
    recorded per font and the remaining fonts are still scored.  Model
    weights and train/eval modes are left untouched.
    """
    config = config or EvalConfig()
    clfs = dict(clfs or {})
    if isinstance(model, (str, Path)):
        from ..training import load_generator
        model, _, _ = load_generator(model, use_ema=config.use_ema)
    all_fonts = list(split.train_fonts) + list(split.eval_fonts)
    modes = {m: m.training for m in model.modules()}
    model.eval()
    try:
        per_font, failures = {}, []
        for font in all_fonts:
            try:
                wanted = set(split.seen_chars) | set(split.unseen_chars)
                present = [c for c in dataset.chars(font) if c in wanted]
                refs = sample_references(dataset, font, config.n_references,
                                         _font_seed(config.seed, all_fonts, font), dataset.schema,
                                         candidates=split.seen_chars,
                                         required=_needed(dataset.schema, present))
                ref_chars = set(refs.chars)
                targets = [c for c in present if c not in ref_chars]
                gen = _generate_font(model, dataset, font, refs, targets, config.batch_size)
            except (CompfontError, ValueError) as e:
                code = e.code if isinstance(e, CompfontError) else type(e).__name__
                logger.warning("evaluation of %s failed: %s: %s", font, code, e)
                failures.append({"font": str(font), "code": code, "message": str(e)})
                continue
            per_font[font] = dict(zip(targets, gen))
    finally:
        for m, mode in modes.items():
            m.training = mode

    cells, counts = {}, {}
    for font_set, char_set in CELLS:
        name = cell_name(font_set, char_set)
        in_chars = set(split.chars(char_set))
        gen, real, chars, fonts = [], [], [], []
        for font in split.fonts(font_set):
            for c, img in per_font.get(font, {}).items():
                if c in in_chars:
                    gen.append(img)
                    real.append(dataset.pixels(font, c))
                    chars.append(c)
                    fonts.append(font)
        counts[name] = len(gen)
        cells[name] = _score(np.asarray(gen), np.asarray(real, dtype=np.float64), chars, fonts, clfs, config)
    return EvalReport(cells, counts, failures, config.seed, config.n_references)


def reference_sensitivity(model, dataset, split, clfs=None, config=None, seeds=range(8)):
    """Re-run :func:`evaluate` with different reference draws; per-cell mean and std."""
    config = config or EvalConfig()
    reports = [evaluate(model, dataset, split, clfs, EvalConfig(**{**asdict(config), "seed": s}))
               for s in seeds]
    summary = {}
    for name in reports[0].cells:
        summary[name] = {}
        for m in METRICS:
            vals = [r.cells[name][m] for r in reports if r.cells[name][m] is not None]
            summary[name][m] = (float(np.mean(vals)), float(np.std(vals))) if vals else None
    return reports, summary
