"""The dual-memory generator: encode references into memory, decode targets from it."""
import numpy as np
import torch
from torch import nn

from ..data import GlyphImage
from ..errors import LabelOutOfRange
from ..memory import DynamicMemory, MemoryAddressor, PersistentMemory
from .networks import ComponentEncoder, Decoder


def glyph_tensor(glyphs, like=None):
    """Stack GlyphImages (or raw arrays) into a (B, 1, H, W) tensor."""
    arrs = [g.pixels if isinstance(g, GlyphImage) else g for g in glyphs]
    t = torch.from_numpy(np.stack(arrs).astype(np.float32))[:, None]
    if like is not None:
        t = t.to(device=like.device, dtype=like.dtype)
    return t


class Generator(nn.Module):
    """Encoder, decoder and persistent memory around a rule-based addressor.

    Ablations: without ``dynamic_memory`` the decoder sees persistent-memory
    features only (and zeros at the skip level); without
    ``persistent_memory`` the PM table is not built at all; without
    ``compositional_generator`` the attention, global-context and hourglass
    blocks are left out.
    """

    def __init__(self, schema, cfg, ablation, dm_policy="average"):
        super().__init__()
        self.schema = schema
        self.cfg = cfg
        self.use_dm = ablation.dynamic_memory
        self.dm_policy = dm_policy
        compositional = ablation.compositional_generator
        self.encoder = ComponentEncoder(schema.num_types, cfg, compositional)
        self.decoder = Decoder(schema.num_types, cfg, compositional)
        self.pm = (PersistentMemory(schema, cfg.high_channels, cfg.high_size)
                   if ablation.persistent_memory else None)
        self.addressor = MemoryAddressor(schema)

    @property
    def _ref(self):
        return next(self.parameters())

    def new_memory(self):
        return DynamicMemory(self.cfg.level_shapes(), self.dm_policy, self.schema)

    # -- encoding ------------------------------------------------------------

    def encode_reference(self, dm, images, chars, styles):
        """Encode reference glyphs and write each head's features to ``dm``.

        All characters are decomposed before anything is written, so a bad
        character leaves the memory untouched.  ``dm`` may also be a list
        holding one memory per image.
        """
        labels = [self.addressor(c) for c in chars]
        if isinstance(images, (list, tuple)):
            images = glyph_tensor(images, self._ref)
        feats = self.encoder(images)
        for b, (labs, style) in enumerate(zip(labels, styles)):
            mem = dm[b] if isinstance(dm, (list, tuple)) else dm
            for lab in labs:
                if self.schema.is_null(lab):
                    continue
                t = lab.type_index
                mem.write(lab, style, {"high": feats["high"][b, t], "mid": feats["mid"][b, t]})
        return feats

    def encode_glyphs(self, dm, glyphs):
        return self.encode_reference(dm, list(glyphs), [g.char for g in glyphs], [g.style for g in glyphs])

    # -- memory reads ----------------------------------------------------------

    def _dm_slots(self, dm, labels, styles, mix):
        ref = self._ref
        shapes = self.cfg.level_shapes()
        out = {lv: [] for lv in shapes}
        for b, (labs, style) in enumerate(zip(labels, styles)):
            mem = dm[b] if isinstance(dm, (list, tuple)) else dm
            for lab in labs:
                if not self.use_dm or self.schema.is_null(lab):
                    feats = {lv: ref.new_zeros(shape) for lv, shape in shapes.items()}
                else:
                    feats = mem.read(lab, style)
                    if mix is not None and lab.type_index == mix[0]:
                        other = mem.read(lab, mix[1])
                        alpha = mix[2]
                        # endpoints copied verbatim so they stay bit-identical
                        if alpha == 1.0:
                            feats = other
                        elif alpha != 0.0:
                            feats = {lv: feats[lv] * (1.0 - alpha) + other[lv] * alpha for lv in feats}
                for lv in shapes:
                    out[lv].append(feats[lv])
        b, t = len(labels), self.schema.num_types
        return {lv: torch.stack(v).view(b, t, *shapes[lv]) for lv, v in out.items()}

    def memory_features(self, dm, chars, styles, mix=None):
        """Decoder inputs for each target: ``(high, mid)`` with types concatenated.

        ``dm`` is one memory shared by all targets or a list with one memory
        per target.  ``mix=(type_index, style_b, alpha)`` interpolates the
        dynamic-memory features of one component type towards ``style_b``.
        """
        labels = [self.addressor(c) for c in chars]
        slots = self._dm_slots(dm, labels, styles, mix)
        high = slots["high"]
        if self.pm is not None:
            flat = [self.schema.flat_index(l) for labs in labels for l in labs]
            high = high + self.pm.read_flat(flat).view_as(high)
        return high.flatten(1, 2), slots["mid"].flatten(1, 2)

    # -- generation ------------------------------------------------------------

    def generate(self, dm, chars, styles):
        """Generate a (B, 1, S, S) batch of glyphs for ``chars`` in ``styles``."""
        return self.decoder(*self.memory_features(dm, chars, styles))

    def generate_glyph(self, dm, char, style):
        out = self.generate(dm, [char], [style])[0, 0]
        return GlyphImage(out.detach().cpu().numpy(), char, style)

    def mixed_memory(self, dm, char, style_a, style_b, type_index, alpha):
        """Raw dynamic-memory slots (B=1) with one component type interpolated."""
        if not 0 <= type_index < self.schema.num_types:
            raise LabelOutOfRange(f"type index {type_index} outside [0, {self.schema.num_types})")
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        labels = [self.addressor(char)]
        self._dm_slots(dm, labels, [style_b], None)  # style_b must cover the target too
        return self._dm_slots(dm, labels, [style_a], (type_index, style_b, alpha))

    def mix_components(self, dm, char, style_a, style_b, type_index, alpha):
        self.mixed_memory(dm, char, style_a, style_b, type_index, alpha)
        return self.decoder(*self.memory_features(dm, [char], [style_a], (type_index, style_b, alpha)))


def encode_reference(generator, glyph, dm):
    return generator.encode_glyphs(dm, [glyph])


def generate(generator, dm, target_char, style):
    return generator.generate_glyph(dm, target_char, style)


def mix_components(generator, dm, target_char, style_a, style_b, type_index, alpha):
    return generator.mix_components(dm, target_char, style_a, style_b, type_index, alpha)
