import numpy as np
import pytest
import torch

from compfont.config import TrainConfig
from compfont.data import DatasetSplit
from compfont.data.synthetic import compact_charset, make_corpus
from compfont.scripts import get_schema

torch.set_num_threads(1)

TINY_MODEL = dict(image_size=32, base_channels=4, enc_max_channels=16, dec_max_channels=16,
                  disc_max_channels=16, blocks_per_stage=1, attention_heads=2)


@pytest.fixture(scope="session")
def korean():
    return get_schema("korean")


@pytest.fixture(scope="session")
def thai():
    return get_schema("thai")


def tiny_config(**overrides):
    model = dict(TINY_MODEL, **overrides.pop("model", {}))
    return TrainConfig.preset("desk", batch_size=4, log_every=1, checkpoint_every=0,
                              model=model, **overrides)


@pytest.fixture
def tiny_cfg():
    return tiny_config()


@pytest.fixture(scope="session")
def tiny_corpus(korean):
    chars = compact_charset(korean, 30, seed=0)
    return make_corpus(korean, chars, n_fonts=4, image_size=32, seed=0)


@pytest.fixture(scope="session")
def tiny_split(tiny_corpus):
    chars = tiny_corpus.all_chars()
    fonts = tuple(tiny_corpus.fonts)
    return DatasetSplit(fonts[:3], fonts[3:], tuple(chars[:26]), tuple(chars[26:]))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


ACCEPTANCE = {}


def record(number, title, ok, detail=""):
    """Remember one acceptance verdict for the end-of-run summary, then assert it."""
    ACCEPTANCE[number] = (title, bool(ok), detail)
    assert ok, f"criterion {number} ({title}) failed: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")
