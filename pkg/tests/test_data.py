import numpy as np
import pytest
from PIL import Image

from compfont.data import (DatasetSplit, GlyphDataset, batches, char_to_filename, filename_to_char,
                           ingest, load_glyph_dir, make_split, read_image, sample_references,
                           to_uint8, to_unit, write_dataset, write_image)
from compfont.data.synthetic import compact_charset, make_corpus, render_glyph, synthetic_styles
from compfont.errors import EmptyFont, UnreadableImage
from compfont.scripts import coverage


def _write_corpus(root, korean, n_fonts, chars, size=16):
    for f in range(n_fonts):
        for c in chars:
            write_image(root / f"font{f}" / char_to_filename(c), np.full((size, size), -1.0))


def test_filename_round_trip():
    for c in ["한", "กิ่", "ก"]:
        assert filename_to_char(char_to_filename(c)) == c
    assert char_to_filename("กิ") == "0e01_0e34.png"


def test_pixel_convention():
    gray = np.array([[255, 0]], dtype=np.uint8)
    unit = to_unit(gray)
    assert unit.tolist() == [[-1.0, 1.0]]
    assert to_uint8(unit).tolist() == gray.tolist()


def test_ingest_counts(tmp_path, korean):
    chars = [chr(0xAC00 + i) for i in range(100)]
    _write_corpus(tmp_path, korean, 2, chars)
    ds = ingest(tmp_path, korean, image_size=16)
    assert len(ds) == 200
    assert ds.fonts == ["font0", "font1"]
    assert ds.pixels("font0", "가").shape == (16, 16)


def test_ingest_resizes(tmp_path, korean):
    _write_corpus(tmp_path, korean, 1, ["가"], size=40)
    assert ingest(tmp_path, korean, image_size=16).pixels("font0", "가").shape == (16, 16)


def test_ingest_errors(tmp_path, korean):
    (tmp_path / "empty").mkdir()
    with pytest.raises(EmptyFont):
        ingest(tmp_path, korean, 16)
    (tmp_path / "empty").rmdir()
    _write_corpus(tmp_path, korean, 1, ["가", "각"])
    (tmp_path / "font0" / char_to_filename("간")).write_bytes(b"not a png")
    with pytest.raises(UnreadableImage) as err:
        ingest(tmp_path, korean, 16)
    assert "ac04" in str(err.value)
    ds = ingest(tmp_path, korean, 16, skip_unreadable=True)
    assert ds.chars("font0") == ["가", "각"]


def test_read_image_unreadable(tmp_path):
    p = tmp_path / "x.png"
    p.write_text("nope")
    with pytest.raises(UnreadableImage):
        read_image(p, 8)


def test_write_dataset_round_trip(tmp_path, tiny_corpus):
    write_dataset(tiny_corpus, tmp_path)
    ds = ingest(tmp_path, tiny_corpus.schema, tiny_corpus.image_size)
    font, char = ds.fonts[1], ds.chars(ds.fonts[1])[3]
    a, b = ds.pixels(font, char), tiny_corpus.pixels(font, char)
    assert np.abs(a - b).max() <= 1 / 127.5 + 1e-6
    refs = load_glyph_dir(tmp_path / font, ds.schema, ds.image_size)
    assert set(refs) == set(ds.chars(font))


def test_make_split_floor_and_determinism(korean):
    chars = [chr(0xAC00 + i) for i in range(50)]
    ds = GlyphDataset.from_arrays(korean, {f"f{i}": {c: np.zeros((8, 8), np.uint8) for c in chars}
                                           for i in range(10)})
    a = make_split(ds, seed=1)
    assert (len(a.train_fonts), len(a.eval_fonts)) == (8, 2)
    assert (len(a.seen_chars), len(a.unseen_chars)) == (45, 5)
    assert a == make_split(ds, seed=1)
    assert a != make_split(ds, seed=2)
    assert set(a.cells()) == {("seen", "seen"), ("seen", "unseen"), ("unseen", "seen"), ("unseen", "unseen")}


def test_make_split_rejects_empty(korean):
    ds = GlyphDataset.from_arrays(korean, {"f0": {"가": np.zeros((8, 8), np.uint8)}})
    with pytest.raises(ValueError):
        make_split(ds)


def test_split_file_round_trip(tmp_path, tiny_split):
    tiny_split.save(tmp_path / "split.json")
    assert DatasetSplit.load(tmp_path / "split.json") == tiny_split


def test_split_disjointness():
    with pytest.raises(ValueError):
        DatasetSplit(("a",), ("a",), ("가",), ())


def test_sample_references(korean):
    chars = list(korean.characters())[::5]
    ds = GlyphDataset.from_arrays(korean, {"f": {c: np.zeros((8, 8), np.uint8) for c in chars}})
    refs = sample_references(ds, "f", 30, seed=0)
    assert len(refs) == 30 and len(set(refs.chars)) == 30
    assert coverage(korean, refs.chars).is_complete
    assert refs.chars == sample_references(ds, "f", 30, seed=0).chars
    with pytest.raises(ValueError):
        sample_references(ds, "f", 27, seed=0)


def test_batches_core_subset(tiny_corpus, tiny_split):
    schema = tiny_corpus.schema
    stream = batches(tiny_corpus, tiny_split, 16, seed=0)
    for _ in range(5):
        b = next(stream)
        assert len(b) == 16
        for t, refs in zip(b.targets, b.references):
            assert all(r.char != t.char for r in refs)
            assert all(r.style == t.style for r in refs)
            assert all(r.char in tiny_split.seen_chars for r in refs)
            need = set(schema.decompose(t.char))
            have = {l for r in refs for l in schema.decompose(r.char)}
            assert need <= have
            assert len(refs) <= schema.num_types
        assert [tiny_split.train_fonts[i] for i in b.font_index] == [t.style.font for t in b.targets]
        assert [tiny_split.seen_chars[i] for i in b.char_index] == [t.char for t in b.targets]


def test_batches_restart(tiny_corpus, tiny_split):
    full = batches(tiny_corpus, tiny_split, 4, seed=5)
    ref = [next(full) for _ in range(12)]
    resumed = batches(tiny_corpus, tiny_split, 4, seed=5, start=7)
    for want in ref[7:]:
        got = next(resumed)
        assert [t.char for t in got.targets] == [t.char for t in want.targets]
        assert [[r.char for r in rs] for rs in got.references] == \
            [[r.char for r in rs] for rs in want.references]


def test_han_core_subset(korean):
    chars = ["한", "하", "안", "간", "흑"]
    ds = GlyphDataset.from_arrays(korean, {"f": {c: np.zeros((8, 8), np.uint8) for c in chars}})
    split = DatasetSplit(("f",), (), tuple(chars), ())
    for _ in range(3):
        b = next(batches(ds, split, 8, seed=_))
        for t, refs in zip(b.targets, b.references):
            if t.char == "한":
                names = {korean.name(l) for r in refs for l in korean.decompose(r.char)}
                assert {"ㅎ", "ㅏ", "ㄴ"} <= names


def test_synthetic_styles_differ(korean):
    a, b = synthetic_styles(2, seed=0)
    ga, gb = render_glyph(korean, "한", a, 32), render_glyph(korean, "한", b, 32)
    assert ga.shape == (32, 32) and ga.dtype == np.uint8
    assert np.abs(to_unit(ga) - to_unit(gb)).mean() > 0.01
    assert np.array_equal(ga, render_glyph(korean, "한", a, 32))


def test_compact_charset(korean, thai):
    for schema in (korean, thai):
        chars = compact_charset(schema, 20, seed=0)
        assert len(set(chars)) == 20
        ds = make_corpus(schema, chars, n_fonts=2, image_size=16)
        assert len(ds) == 40


def test_write_image_is_8bit(tmp_path):
    write_image(tmp_path / "a.png", np.zeros((4, 4)))
    with Image.open(tmp_path / "a.png") as im:
        assert im.mode == "L"
