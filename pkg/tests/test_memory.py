import pytest
import torch

from compfont.errors import LabelOutOfRange, MissingComponent, ShapeMismatch
from compfont.memory import DynamicMemory, MemoryAddressor, PersistentMemory, dm_read, dm_reset, dm_write
from compfont.scripts import ComponentLabel

SHAPES = {"high": (2, 2, 2), "mid": (1, 4, 4)}


def feats(v):
    return {lv: torch.full(s, float(v)) for lv, s in SHAPES.items()}


def test_write_read(korean):
    dm = DynamicMemory(SHAPES, schema=korean)
    dm_write(dm, (0, 18), "a", feats(1))
    out = dm_read(dm, ComponentLabel(0, 18), "a")
    assert torch.equal(out["high"], feats(1)["high"])
    assert (ComponentLabel(0, 18), "a") in dm and len(dm) == 1


def test_missing_names_component(korean):
    dm = DynamicMemory(SHAPES, schema=korean)
    dm_write(dm, (0, 18), "a", feats(1))
    with pytest.raises(MissingComponent) as err:
        dm.read((1, 0), "a")
    assert "ㅏ" in str(err.value) and err.value.code == "MissingComponent"
    with pytest.raises(MissingComponent):
        dm.read((0, 18), "b")


def test_average_and_overwrite():
    avg = DynamicMemory(SHAPES, "average")
    last = DynamicMemory(SHAPES, "overwrite-last")
    for v in (1, 2, 6):
        avg.write((0, 0), "s", feats(v))
        last.write((0, 0), "s", feats(v))
    assert torch.allclose(avg.read((0, 0), "s")["mid"], feats(3)["mid"])
    assert torch.equal(last.read((0, 0), "s")["mid"], feats(6)["mid"])
    with pytest.raises(ValueError):
        DynamicMemory(SHAPES, "max")


def test_shape_checks():
    dm = DynamicMemory(SHAPES)
    with pytest.raises(ShapeMismatch):
        dm.write((0, 0), "s", {"high": torch.zeros(2, 2, 2)})
    with pytest.raises(ShapeMismatch):
        dm.write((0, 0), "s", {"high": torch.zeros(2, 2, 3), "mid": torch.zeros(1, 4, 4)})
    assert len(dm) == 0


def test_reset_by_style():
    dm = DynamicMemory(SHAPES)
    dm.write((0, 0), "a", feats(1))
    dm.write((0, 0), "b", feats(2))
    dm_reset(dm, "a")
    assert dm.styles() == {"b"}
    dm_reset(dm)
    assert len(dm) == 0


def test_persistent_memory(korean):
    pm = PersistentMemory(korean, channels=4, size=4)
    assert len(pm) == 68
    out = pm.read(ComponentLabel(2, 27))
    assert out.shape == (4, 4, 4)
    assert torch.allclose(pm.read_flat([korean.flat_index((2, 27))])[0], out)
    with pytest.raises(LabelOutOfRange):
        pm.read_flat([68])
    with pytest.raises(LabelOutOfRange):
        pm.read((2, 28))


def test_pm_gradient_reaches_embedding(korean):
    pm = PersistentMemory(korean, channels=4, size=4)
    pm.read_flat([3, 40]).sum().backward()
    g = pm.embedding.grad
    assert g[3].abs().sum() > 0 and g[40].abs().sum() > 0
    assert g[4].abs().sum() == 0
    assert all(p.grad is not None for p in pm.refiner.parameters())


def test_addressor(korean, thai):
    assert [l.component_index for l in MemoryAddressor(korean)("한")] == [18, 0, 4]
    labels = MemoryAddressor(thai).address("ก")
    assert len(labels) == 4 and all(thai.is_null(l) for l in labels[1:])
