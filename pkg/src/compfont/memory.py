"""Dual memory: dynamic (reference features) and persistent (learned per-component).

The dynamic memory is an ephemeral key-value store keyed by
``(component label, style)`` holding one feature map per level.  The
persistent memory is a trainable embedding table with one entry per
component label; entries are refined by a small convolution stack every
time they are read, so the refiner is trained along with them.
"""
import torch
from torch import nn

from .errors import LabelOutOfRange, MissingComponent, ShapeMismatch
from .layers import ConvBlock
from .scripts import ComponentLabel

POLICIES = ("average", "overwrite-last")


class DynamicMemory:
    """Per-level feature store addressed by (component, style).

    A second write to an existing key is averaged with the earlier ones
    (``policy="average"``) or replaces them (``"overwrite-last"``).
    """

    def __init__(self, level_shapes, policy="average", schema=None):
        if policy not in POLICIES:
            raise ValueError(f"unknown duplicate-write policy {policy!r}")
        self.level_shapes = {k: tuple(v) for k, v in level_shapes.items()}
        self.policy = policy
        self.schema = schema
        self._sum = {}
        self._count = {}

    @staticmethod
    def _key(component, style):
        return ComponentLabel(*component), style

    def write(self, component, style, features):
        if set(features) != set(self.level_shapes):
            raise ShapeMismatch(f"expected levels {sorted(self.level_shapes)}, got {sorted(features)}")
        for level, feat in features.items():
            if tuple(feat.shape) != self.level_shapes[level]:
                raise ShapeMismatch(f"level {level!r}: expected shape {self.level_shapes[level]}, "
                                    f"got {tuple(feat.shape)}")
        key = self._key(component, style)
        if self.policy == "average" and key in self._sum:
            old = self._sum[key]
            self._sum[key] = {lv: old[lv] + features[lv] for lv in old}
            self._count[key] += 1
        else:
            self._sum[key] = dict(features)
            self._count[key] = 1

    def read(self, component, style):
        key = self._key(component, style)
        if key not in self._sum:
            name = self.schema.name(key[0]) if self.schema is not None else None
            raise MissingComponent(key[0], style, name)
        stored, n = self._sum[key], self._count[key]
        if n == 1:
            return dict(stored)
        return {lv: t / n for lv, t in stored.items()}

    def reset(self, style=None):
        if style is None:
            self._sum.clear()
            self._count.clear()
            return
        for key in [k for k in self._sum if k[1] == style]:
            del self._sum[key]
            del self._count[key]

    def __contains__(self, key):
        return self._key(*key) in self._sum

    def __len__(self):
        return len(self._sum)

    def keys(self):
        return list(self._sum)

    def styles(self):
        return {k[1] for k in self._sum}


class PersistentMemory(nn.Module):
    """Learned component embeddings, one ``channels x size x size`` map per label."""

    def __init__(self, schema, channels, size, refiner_blocks=3):
        super().__init__()
        self.schema = schema
        self.embedding = nn.Parameter(torch.randn(schema.num_components, channels, size, size) * 0.1)
        self.refiner = nn.Sequential(*(ConvBlock(channels, channels, norm="none")
                                       for _ in range(refiner_blocks)))

    def __len__(self):
        return self.embedding.shape[0]

    def read_flat(self, flat_ids):
        """Refined entries for a LongTensor of flat component ids."""
        flat_ids = torch.as_tensor(flat_ids, dtype=torch.long, device=self.embedding.device)
        if flat_ids.numel() and (flat_ids.min() < 0 or flat_ids.max() >= len(self)):
            raise LabelOutOfRange(f"flat component id outside [0, {len(self)})")
        return self.refiner(self.embedding[flat_ids])

    def read(self, component):
        return self.read_flat([self.schema.flat_index(component)])[0]


class MemoryAddressor:
    """Rule-based map from a character to the component labels addressing both memories."""

    def __init__(self, schema):
        self.schema = schema

    def __call__(self, char):
        return self.schema.decompose(char)

    address = __call__


def dm_write(dm, component, style, features):
    dm.write(component, style, features)


def dm_read(dm, component, style):
    return dm.read(component, style)


def dm_reset(dm, style=None):
    dm.reset(style)


def pm_read(pm, component):
    return pm.read(component)
