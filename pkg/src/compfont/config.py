"""Run configuration: model shape, training schedule, ablations and data.

A YAML file with the sections ``model``, ``ablation`` and ``data`` plus
top-level training keys fully determines a run.  ``profile`` picks the
preset that unspecified keys fall back to.
"""
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml


@dataclass
class ModelConfig:
    image_size: int = 128
    base_channels: int = 32
    enc_max_channels: int = 256
    dec_max_channels: int = 512
    disc_max_channels: int = 1024
    blocks_per_stage: int = 2
    attention_heads: int = 4

    def __post_init__(self):
        s = self.image_size
        if s < 8 or s & (s - 1):
            raise ValueError(f"image_size must be a power of two >= 8, got {s}")

    def enc_channels(self, k):
        return min(self.base_channels * 2 ** k, self.enc_max_channels)

    def dec_channels(self, k):
        """Decoder width ``k`` stages above the output resolution."""
        return max(min(self.base_channels * 2 ** k, self.dec_max_channels), 1)

    def disc_channels(self, k):
        return min(self.base_channels * 2 ** k, self.disc_max_channels)

    @property
    def high_size(self):
        return self.image_size // 8

    @property
    def mid_size(self):
        return self.image_size // 4

    @property
    def high_channels(self):
        return self.enc_channels(3)

    @property
    def mid_channels(self):
        return self.enc_channels(2)

    def level_shapes(self):
        return {"high": (self.high_channels, self.high_size, self.high_size),
                "mid": (self.mid_channels, self.mid_size, self.mid_size)}


@dataclass
class AblationConfig:
    dynamic_memory: bool = True
    persistent_memory: bool = True
    compositional_generator: bool = True
    loss_l1: bool = True
    loss_feat: bool = True
    loss_cls: bool = True

    def __post_init__(self):
        if not (self.dynamic_memory or self.persistent_memory):
            raise ValueError("at least one of dynamic_memory / persistent_memory must stay on")


@dataclass
class DataConfig:
    root: str = None
    script: str = "korean"
    split_file: str = None
    font_ratio: float = 0.8
    char_ratio: float = 0.9
    n_references: int = 30
    skip_unreadable: bool = False


@dataclass
class TrainConfig:
    profile: str = "korean"
    seed: int = 0
    iterations: int = 200_000
    batch_size: int = 16
    lambda_l1: float = 0.1
    lambda_feat: float = 1.0
    lambda_cls: float = 0.1
    lr_g: float = 2e-4
    lr_d: float = 8e-4
    betas: tuple = (0.0, 0.99)
    ema_decay: float = 0.999
    adv_form: str = "hinge"
    dm_policy: str = "average"
    log_every: int = 100
    checkpoint_every: int = 10_000
    sample_every: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)
    data: DataConfig = field(default_factory=DataConfig)

    # keys that may differ when resuming a run
    SCHEDULE_KEYS = ("iterations", "log_every", "checkpoint_every", "sample_every")

    def __post_init__(self):
        self.betas = tuple(self.betas)
        if min(self.lambda_l1, self.lambda_feat, self.lambda_cls) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.lr_g <= 0 or self.lr_d <= 0:
            raise ValueError("learning rates must be positive")
        if not 0.0 <= self.ema_decay <= 1.0:
            raise ValueError("ema_decay must lie in [0, 1]")
        if self.adv_form not in ("hinge", "log"):
            raise ValueError(f"adv_form must be 'hinge' or 'log', got {self.adv_form!r}")

    @classmethod
    def preset(cls, profile="korean", **overrides):
        if profile not in PROFILES:
            raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
        d = _merge(PROFILES[profile], {"profile": profile})
        return cls.from_dict(_merge(d, overrides))

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["betas"] = list(self.betas)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        _check_keys(cls, d, "")
        sections = {"model": ModelConfig, "ablation": AblationConfig, "data": DataConfig}
        for name, sub in sections.items():
            if name in d and not isinstance(d[name], sub):
                _check_keys(sub, d[name], name + ".")
                d[name] = sub(**d[name])
        return cls(**d)

    @classmethod
    def load(cls, path):
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        profile = raw.pop("profile", "korean")
        return cls.preset(profile, **raw)

    def save(self, path):
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False, allow_unicode=True),
                              encoding="utf-8")

    def comparable(self):
        d = self.to_dict()
        for k in self.SCHEDULE_KEYS:
            d.pop(k)
        return d


def _check_keys(cls, d, prefix):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(prefix + k for k in sorted(unknown))}")


def _merge(base, over):
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


PROFILES = {
    "korean": {},
    "thai": {"lr_g": 5e-5, "lr_d": 1e-4, "iterations": 250_000,
             "data": {"script": "thai", "n_references": 44}},
    "desk": {"iterations": 5_000, "batch_size": 8, "checkpoint_every": 1_000,
             "model": {"image_size": 64, "enc_max_channels": 128, "dec_max_channels": 128,
                       "disc_max_channels": 128}},
}
