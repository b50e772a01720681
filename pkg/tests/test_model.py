import numpy as np
import pytest
import torch

from compfont.config import AblationConfig, ModelConfig
from compfont.data import GlyphImage
from compfont.errors import LabelOutOfRange, MissingComponent
from compfont.layers import GCBlock, HGBlock, InstanceNorm, SABlock
from compfont.model import (ComponentClassifier, Discriminator, Generator, encode_reference, generate,
                            mix_components)

CFG = ModelConfig(image_size=32, base_channels=4, enc_max_channels=16, dec_max_channels=16,
                  disc_max_channels=16, blocks_per_stage=1, attention_heads=2)


def glyph(char, style, seed=0):
    rng = np.random.default_rng(seed)
    return GlyphImage(rng.uniform(-1, 1, (32, 32)).astype(np.float32), char, style)


@pytest.fixture
def gen(korean):
    torch.manual_seed(0)
    return Generator(korean, CFG, AblationConfig()).eval()


def test_layers_shapes():
    x = torch.randn(2, 8, 8, 8)
    assert GCBlock(8)(x).shape == x.shape
    assert SABlock(8, 8, heads=2)(x).shape == x.shape
    assert HGBlock(8, 8)(x).shape == x.shape
    one = torch.randn(2, 8, 1, 1)
    assert torch.equal(InstanceNorm(8)(one), one)


def test_encoder_shapes(gen):
    out = gen.encoder(torch.zeros(2, 1, 32, 32))
    assert out["high"].shape == (2, 3, CFG.high_channels, 4, 4)
    assert out["mid"].shape == (2, 3, CFG.mid_channels, 8, 8)


def test_generate_shape_and_range(gen):
    dm = gen.new_memory()
    for c in ["한", "가", "흑"]:
        encode_reference(gen, glyph(c, "s"), dm)
    g = generate(gen, dm, "학", "s")
    assert g.pixels.shape == (32, 32) and g.char == "학"
    assert np.abs(g.pixels).max() <= 1.0


def test_generate_missing_component(gen):
    dm = gen.new_memory()
    encode_reference(gen, glyph("한", "s"), dm)
    with pytest.raises(MissingComponent) as err:
        generate(gen, dm, "흑", "s")
    assert "ㅡ" in str(err.value)


def test_bad_char_leaves_memory_untouched(gen):
    dm = gen.new_memory()
    with pytest.raises(Exception):
        gen.encode_reference(dm, [glyph("한", "s").pixels, glyph("A", "s").pixels], ["한", "A"], ["s", "s"])
    assert len(dm) == 0


def test_encode_writes_each_head(gen):
    dm = gen.new_memory()
    feats = gen.encode_reference(dm, [glyph("한", "s")], ["한"], ["s"])
    for t, i in enumerate([18, 0, 4]):
        assert torch.equal(dm.read((t, i), "s")["high"], feats["high"][0, t])
        assert torch.equal(dm.read((t, i), "s")["mid"], feats["mid"][0, t])


def test_thai_nulls_use_pm_only(thai):
    torch.manual_seed(0)
    g = Generator(thai, CFG, AblationConfig()).eval()
    dm = g.new_memory()
    g.encode_reference(dm, [glyph("ก", "s")], ["ก"], ["s"])
    assert len(dm) == 1  # only the consonant
    with torch.no_grad():
        out = g.generate(dm, ["ก"], ["s"])
    assert out.shape == (1, 1, 32, 32)


def test_batched_and_per_target_memories_agree(gen):
    dm = gen.new_memory()
    gen.encode_glyphs(dm, [glyph(c, "s", i) for i, c in enumerate(["한", "가", "흑"])])
    with torch.no_grad():
        shared = gen.memory_features(dm, ["학", "가"], ["s", "s"])
        split = gen.memory_features([dm, dm], ["학", "가"], ["s", "s"])
    for a, b in zip(shared, split):
        assert torch.equal(a, b)


def test_no_dm_ablation(korean):
    g = Generator(korean, CFG, AblationConfig(dynamic_memory=False)).eval()
    high, mid = g.memory_features(g.new_memory(), ["한"], ["s"])
    assert torch.count_nonzero(mid) == 0
    assert torch.count_nonzero(high) > 0


def test_no_pm_ablation(korean):
    g = Generator(korean, CFG, AblationConfig(persistent_memory=False))
    assert g.pm is None
    assert not any(k.startswith("pm.") for k in g.state_dict())
    with pytest.raises(ValueError):
        AblationConfig(dynamic_memory=False, persistent_memory=False)


def test_non_compositional_variant(korean):
    g = Generator(korean, CFG, AblationConfig(compositional_generator=False))
    names = {type(m).__name__ for m in g.modules()}
    assert not names & {"SABlock", "GCBlock", "HGBlock"}


def test_mix_endpoints(gen):
    dm = gen.new_memory()
    gen.encode_glyphs(dm, [glyph("한", "a", 1), glyph("한", "b", 2)])
    with torch.no_grad():
        plain = gen.generate(dm, ["한"], ["a"])
        at0 = mix_components(gen, dm, "한", "a", "b", 1, 0.0)
        m = gen.mixed_memory(dm, "한", "a", "b", 1, 0.5)
    assert torch.equal(plain, at0)
    va, vb = dm.read((1, 0), "a")["high"], dm.read((1, 0), "b")["high"]
    assert torch.allclose(m["high"][0, 1], (va + vb) / 2, atol=1e-7)
    assert torch.equal(m["high"][0, 0], dm.read((0, 18), "a")["high"])
    with pytest.raises(LabelOutOfRange):
        gen.mixed_memory(dm, "한", "a", "b", 3, 0.5)
    with pytest.raises(ValueError):
        gen.mixed_memory(dm, "한", "a", "b", 0, 1.5)


def test_discriminator(korean):
    torch.manual_seed(0)
    d = Discriminator(3, 10, CFG)
    font, char, feats = d(torch.randn(2, 1, 32, 32), [0, 2], [9, 1])
    assert font.shape == char.shape == (2,)
    assert len(feats) == 3
    assert len(d.normalized_layers()) > 0
    assert all(hasattr(m, "parametrizations") for m in d.normalized_layers())
    with pytest.raises(LabelOutOfRange):
        d(torch.randn(1, 1, 32, 32), [3], [0])


def test_discriminator_heads_select_class():
    torch.manual_seed(0)
    d = Discriminator(3, 4, CFG).eval()
    x = torch.randn(1, 1, 32, 32).repeat(3, 1, 1, 1)
    font, _, _ = d(x, [0, 1, 2], [0, 0, 0])
    assert len(set(font.tolist())) == 3


def test_component_classifier(korean):
    clf = ComponentClassifier(korean, 16)
    logits = clf.type_logits(torch.randn(2, 3, 16, 4, 4))
    assert [l.shape[1] for l in logits] == [19, 21, 28]
    assert clf.classify(torch.randn(16, 4, 4), 2).shape == (28,)
    with pytest.raises(LabelOutOfRange):
        clf.classify(torch.randn(16, 4, 4), 3)
