import logging

import numpy as np
import pytest
import torch
from PIL import Image

from compfont.config import AblationConfig, ModelConfig
from compfont.data import GlyphDataset, read_image
from compfont.data.synthetic import compact_charset, make_corpus
from compfont.errors import InsufficientAccuracy, ShapeMismatch
from compfont.eval import (ClassifierConfig, EvalClassifier, EvalConfig, EvalReport, ResNet, accuracy,
                           evaluate, fid, frechet_distance, mfid, mfid_from_features, ms_ssim,
                           perceptual_distance, sample_sheet, ssim, style_attribution,
                           train_eval_classifier, write_grid)
from compfont.model import Generator

from conftest import TINY_MODEL


def _ssim_oracle(a, b):
    """Direct per-window loops over the same Gaussian window."""
    size, sigma = 11, 1.5
    x = np.arange(size) - 5
    g = np.exp(-x ** 2 / (2 * sigma ** 2))
    w = np.outer(g, g) / np.outer(g, g).sum()
    c1, c2 = (0.01 * 2) ** 2, (0.03 * 2) ** 2
    vals = []
    for i in range(a.shape[0] - size + 1):
        for j in range(a.shape[1] - size + 1):
            pa, pb = a[i:i + size, j:j + size], b[i:i + size, j:j + size]
            ma, mb = (w * pa).sum(), (w * pb).sum()
            va = (w * (pa - ma) ** 2).sum()
            vb = (w * (pb - mb) ** 2).sum()
            cov = (w * (pa - ma) * (pb - mb)).sum()
            vals.append((2 * ma * mb + c1) * (2 * cov + c2) / ((ma ** 2 + mb ** 2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def test_ssim_identity_and_constant(rng):
    x = rng.uniform(-1, 1, (32, 32))
    assert ssim(x, x) == 1.0
    z = np.zeros((16, 16))
    assert ssim(z, z) == 1.0
    assert ms_ssim(x, x) == pytest.approx(1.0, abs=1e-12)


def test_ssim_matches_loop_oracle(rng):
    for _ in range(3):
        a, b = rng.uniform(-1, 1, (20, 20)), rng.uniform(-1, 1, (20, 20))
        assert ssim(a, b) == pytest.approx(_ssim_oracle(a, b), abs=1e-6)


def test_ssim_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        ssim(np.zeros((8, 8)), np.zeros((8, 9)))
    with pytest.raises(ShapeMismatch):
        ms_ssim(np.zeros((16, 16)), np.zeros((8, 8)))


def test_ms_ssim_fewer_scales_warns(rng, caplog, monkeypatch):
    monkeypatch.setattr("compfont.eval.metrics._warned_shapes", set())
    a, b = rng.uniform(-1, 1, (32, 32)), rng.uniform(-1, 1, (32, 32))
    with caplog.at_level(logging.WARNING):
        v = ms_ssim(a, b)
        ms_ssim(b, a)
    assert caplog.text.count("scales") == 1  # once per shape
    assert -1 <= v <= 1
    big = rng.uniform(-1, 1, (192, 192))
    caplog.clear()
    with caplog.at_level(logging.WARNING):
        ms_ssim(big, big * 0.9)
    assert "scales" not in caplog.text


def test_frechet_closed_form():
    mu1, mu2 = np.zeros(3), np.array([1.0, 2.0, 0.0])
    s1, s2 = np.diag([1.0, 4.0, 9.0]), np.diag([4.0, 1.0, 1.0])
    want = 5.0 + (1 - 2) ** 2 + (2 - 1) ** 2 + (3 - 1) ** 2
    assert frechet_distance(mu1, s1, mu2, s2, eps=0) == pytest.approx(want, rel=1e-9)


def test_frechet_singular_covariance(rng):
    f = rng.normal(size=(5, 8))  # fewer samples than dims
    assert fid(f, f) <= 1e-3
    assert fid(f, f + 1.0) == pytest.approx(8.0, rel=1e-3)


def test_mfid_skips_small_classes(rng, caplog):
    f = rng.normal(size=(20, 3))
    cls = ["a"] * 10 + ["b"] * 9 + ["c"]
    with caplog.at_level(logging.WARNING):
        m = mfid_from_features(f, f, cls, cls)
    assert m <= 1e-3 and "'c'" in caplog.text
    with pytest.raises(ValueError):
        mfid_from_features(f[:1], f[:1], ["a"], ["a"])


class _StubClassifier:
    """Identity 'features' on flattened images and a fixed lookup for predictions."""

    def __init__(self, labels, predictions=None):
        self.labels = list(labels)
        self.index = {l: i for i, l in enumerate(self.labels)}
        self.predictions = predictions

    def features(self, images):
        return np.asarray(images, dtype=np.float64).reshape(len(images), -1)

    def predict(self, images):
        return np.asarray(self.predictions)


def test_accuracy_and_attribution():
    clf = _StubClassifier(["x", "y", "z"], [0, 1, 1, 2])
    imgs = np.zeros((4, 2, 2))
    assert accuracy(clf, imgs, ["x", "y", "y", "z"]) == 1.0
    assert accuracy(clf, imgs, ["y", "z", "z", "x"]) == 0.0
    assert accuracy(clf, imgs, ["x", "x", "y", "x"]) == pytest.approx(2 / 4)
    hist = style_attribution(clf, imgs)
    assert hist == {"x": 1, "y": 2, "z": 1} and sum(hist.values()) == 4
    assert style_attribution(clf, np.zeros((0, 2, 2))) == {}


def test_perceptual_distance(rng):
    clf = _StubClassifier([])
    a, b = rng.normal(size=(6, 3, 3)), rng.normal(size=(6, 3, 3))
    assert perceptual_distance(clf, a, a) == 0.0
    assert perceptual_distance(clf, a, b) == pytest.approx(perceptual_distance(clf, b, a))
    brute = np.mean([np.sqrt(((x - y) ** 2).sum()) for x, y in zip(a, b)])
    assert perceptual_distance(clf, a, b) == pytest.approx(brute, rel=1e-12)
    with pytest.raises(ValueError):
        perceptual_distance(clf, a, b[:3])


def test_mfid_wrapper(rng):
    clf = _StubClassifier([])
    g, r = rng.normal(size=(8, 2, 2)), rng.normal(size=(8, 2, 2))
    cls = ["a", "b"] * 4
    assert mfid(clf, g, r, cls) == mfid_from_features(g.reshape(8, -1), r.reshape(8, -1), cls, cls)


def test_resnet_depths():
    for depth in (18, 34, 50):
        net = ResNet(5, depth, width=4)
        assert net(torch.zeros(2, 1, 32, 32)).shape == (2, 5)
        assert net.features(torch.zeros(2, 1, 32, 32)).shape == (2, net.feature_dim)


@pytest.fixture(scope="module")
def five_font_corpus():
    from compfont.scripts import get_schema
    k = get_schema("korean")
    return make_corpus(k, compact_charset(k, 60, seed=1), n_fonts=5, image_size=32, seed=3)


def test_style_classifier_toy(five_font_corpus, tmp_path):
    clf = train_eval_classifier(five_font_corpus, "style",
                                ClassifierConfig(width=8, epochs=20, val_fraction=0.15, seed=0))
    assert clf.labels == five_font_corpus.fonts
    assert clf.val_accuracy > 0.95
    clf.save(tmp_path / "style.pt")
    back = EvalClassifier.load(tmp_path / "style.pt")
    x = np.stack([five_font_corpus.pixels(f, five_font_corpus.chars(f)[0]) for f in five_font_corpus.fonts])
    assert np.allclose(back.features(x), clf.features(x))
    assert back.labels == clf.labels


def test_classifier_floor_and_labels(five_font_corpus):
    clf = train_eval_classifier(five_font_corpus, "content",
                                ClassifierConfig(width=4, epochs=1, accuracy_floor=1.01))
    assert len(clf.labels) == len(five_font_corpus.all_chars())
    with pytest.raises(InsufficientAccuracy):
        clf.features(np.zeros((1, 32, 32)))
    with pytest.raises(ValueError):
        train_eval_classifier(five_font_corpus, "shape")


def test_write_grid_and_sheet(tmp_path, korean):
    cfg = ModelConfig(**TINY_MODEL)
    torch.manual_seed(0)
    gen = Generator(korean, cfg, AblationConfig()).eval()
    chars = compact_charset(korean, 30, seed=0)
    ds = make_corpus(korean, chars, n_fonts=4, image_size=32)
    targets = chars[20:28]
    refs = {f: ds.glyphs(f, [c for c in chars if c not in targets]) for f in ds.fonts}
    before = [p.clone() for p in gen.parameters()]
    shape = sample_sheet(gen, refs, targets, tmp_path / "sheet.png",
                         ground_truth=ds.glyphs(ds.fonts[0], targets))
    assert shape == (5, 8)  # 4 styles x 8 chars + a ground-truth row = 40 cells
    with Image.open(tmp_path / "sheet.png") as im:
        assert im.mode == "L"
        assert im.size == (8 * 34 + 2, 5 * 34 + 2)
    assert read_image(tmp_path / "sheet.png", 64).shape == (64, 64)
    assert all(torch.equal(a, b) for a, b in zip(before, gen.parameters()))
    with pytest.raises(ValueError):
        sample_sheet(gen, refs, [], tmp_path / "empty.png")
    with pytest.raises(ValueError):
        write_grid([], tmp_path / "x.png")


@pytest.fixture(scope="module")
def eval_setup():
    from compfont.data import DatasetSplit
    from compfont.scripts import get_schema
    k = get_schema("korean")
    chars = compact_charset(k, 30, seed=0)
    ds = make_corpus(k, chars, n_fonts=4, image_size=32)
    split = DatasetSplit(tuple(ds.fonts[:3]), tuple(ds.fonts[3:]), tuple(chars[:24]), tuple(chars[24:]))
    torch.manual_seed(0)
    gen = Generator(k, ModelConfig(**TINY_MODEL), AblationConfig())
    clfs = {"content": _StubClassifier(ds.all_chars(), None), "style": _StubClassifier(ds.fonts, None)}
    return ds, split, gen, clfs


class _ArgmaxStub(_StubClassifier):
    """Cheap 16-d features (4x4 average pooling) and constant predictions."""

    def features(self, images):
        x = np.asarray(images, dtype=np.float64)
        n, h, w = x.shape
        return x.reshape(n, 4, h // 4, 4, w // 4).mean(axis=(2, 4)).reshape(n, 16)

    def predict(self, images):
        return np.zeros(len(images), dtype=np.int64)


def test_evaluate_report(eval_setup):
    ds, split, gen, _ = eval_setup
    clfs = {"content": _ArgmaxStub(ds.all_chars()), "style": _ArgmaxStub(ds.fonts)}
    gen.train()
    before = {k: v.clone() for k, v in gen.state_dict().items()}
    cfg = EvalConfig(n_references=8, seed=0)
    report = evaluate(gen, ds, split, clfs, cfg)
    assert gen.training  # mode restored
    assert all(torch.equal(before[k], v) for k, v in gen.state_dict().items())
    assert set(report.cells) == {"seen_fonts/seen_chars", "seen_fonts/unseen_chars",
                                 "unseen_fonts/seen_chars", "unseen_fonts/unseen_chars"}
    assert report.counts["unseen_fonts/unseen_chars"] == 6
    assert report.counts["seen_fonts/seen_chars"] == 3 * (24 - 8)
    for cell in report.cells.values():
        assert -1 <= cell["ssim"] <= 1 and -1 <= cell["ms_ssim"] <= 1
        assert 0 <= cell["content_acc"] <= 1 and cell["content_pd"] >= 0
    gap = report.generalization_gap()
    assert gap["seen"]["ssim"] == pytest.approx(report.cells["seen_fonts/seen_chars"]["ssim"]
                                                - report.cells["unseen_fonts/seen_chars"]["ssim"])
    text = report.to_jsonl()
    assert "penultimate" in text.splitlines()[0]
    assert EvalReport.from_jsonl(text).to_jsonl() == text
    assert evaluate(gen, ds, split, clfs, cfg).to_jsonl() == text
    assert evaluate(gen, ds, split, clfs, EvalConfig(n_references=8, seed=1)).to_jsonl() != text
    assert "generalization gap" in report.format_table()


def test_evaluate_records_failures(eval_setup):
    ds, split, gen, _ = eval_setup
    glyphs = {f: {c: ds.pixels(f, c) for c in ds.chars(f)} for f in ds.fonts}
    victim = ds.fonts[3]
    need = ds.schema.decompose(split.unseen_chars[0])[1]
    glyphs[victim] = {c: px for c, px in glyphs[victim].items()
                      if c in split.unseen_chars or ds.schema.decompose(c)[1] != need}
    broken = GlyphDataset.from_arrays(ds.schema, glyphs)
    report = evaluate(gen, broken, split, None, EvalConfig(n_references=8))
    assert [f["font"] for f in report.failures] == [victim]
    assert report.failures[0]["code"] == "CoverageImpossible"
    assert report.counts["unseen_fonts/seen_chars"] == 0
    assert report.cells["unseen_fonts/seen_chars"]["ssim"] is None
    assert report.cells["seen_fonts/seen_chars"]["ssim"] is not None
