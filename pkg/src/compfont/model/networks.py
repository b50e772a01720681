"""Encoder, decoder, discriminator and component classifier."""
import math

import torch
import torch.nn.functional as F
from torch import mv, nn
from torch.nn.utils.parametrizations import spectral_norm

from ..errors import LabelOutOfRange
from ..layers import ConvBlock, GCBlock, HGBlock, ResBlock, SABlock


class ComponentEncoder(nn.Module):
    """Shared trunk with one head per component type.

    Returns ``{"mid": (B, T, C2, S/4, S/4), "high": (B, T, C3, S/8, S/8)}``.
    """

    def __init__(self, num_types, cfg, compositional=True):
        super().__init__()
        c = cfg.enc_channels
        extra = cfg.blocks_per_stage - 1
        mid = [ConvBlock(1, c(0), norm="none"),
               ConvBlock(c(0), c(1), stride=2),
               ResBlock(c(1), c(2), downsample=True)]
        mid += [ResBlock(c(2)) for _ in range(extra)]
        if compositional:
            mid.append(GCBlock(c(2)))
        high = [ResBlock(c(2), c(3), downsample=True)]
        high += [ResBlock(c(3)) for _ in range(extra)]
        if compositional:
            high.append(SABlock(c(3), cfg.high_size, cfg.attention_heads))
        self.trunk_mid = nn.Sequential(*mid)
        self.trunk_high = nn.Sequential(*high)
        self.mid_heads = nn.ModuleList(ConvBlock(c(2), c(2)) for _ in range(num_types))
        self.high_heads = nn.ModuleList(ResBlock(c(3)) for _ in range(num_types))

    def forward(self, x):
        m = self.trunk_mid(x)
        h = self.trunk_high(m)
        return {"mid": torch.stack([head(m) for head in self.mid_heads], dim=1),
                "high": torch.stack([head(h) for head in self.high_heads], dim=1)}


class Decoder(nn.Module):
    """Decode concatenated per-type memory features back to a glyph in [-1, 1]."""

    def __init__(self, num_types, cfg, compositional=True):
        super().__init__()
        d = cfg.dec_channels
        top = d(4)
        blocks = [ConvBlock(num_types * cfg.high_channels, top)]
        blocks += [ResBlock(top) for _ in range(cfg.blocks_per_stage)]
        blocks.append(HGBlock(top, cfg.high_size) if compositional else ResBlock(top))
        self.high = nn.Sequential(*blocks)
        self.mid = nn.Sequential(ConvBlock(top + num_types * cfg.mid_channels, d(3)), ResBlock(d(3)))
        self.up2 = ConvBlock(d(3), d(2))
        self.up1 = ConvBlock(d(2), d(1))
        self.out = nn.Conv2d(d(1), 1, 3, 1, 1)

    def forward(self, high, mid):
        x = self.high(high)
        x = self.mid(torch.cat([F.interpolate(x, scale_factor=2, mode="nearest"), mid], dim=1))
        x = self.up2(F.interpolate(x, scale_factor=2, mode="nearest"))
        x = self.up1(F.interpolate(x, scale_factor=2, mode="nearest"))
        return torch.tanh(self.out(x))


class Discriminator(nn.Module):
    """Shared residual backbone with multitask font and character heads.

    Each head has one realness output per class; ``forward`` picks the
    output of the given class and also returns every backbone block's
    features for feature matching.  All weights are spectrally normalized.
    """

    def __init__(self, n_fonts, n_chars, cfg):
        super().__init__()
        c = cfg.disc_channels
        n_down = max(int(math.log2(cfg.image_size)) - 2, 1)
        self.stem = nn.Conv2d(1, c(0), 3, 1, 1)
        self.blocks = nn.ModuleList(ResBlock(c(k), c(k + 1), downsample=True, norm="none", preact=True)
                                    for k in range(n_down))
        self.font_head = nn.Linear(c(n_down), n_fonts)
        self.char_head = nn.Linear(c(n_down), n_chars)
        self.n_fonts, self.n_chars = n_fonts, n_chars
        for module in list(self.modules()):
            for name, child in list(module.named_children()):
                if isinstance(child, (nn.Conv2d, nn.Linear)):
                    setattr(module, name, spectral_norm(child))

    def normalized_layers(self):
        return [m for m in self.modules() if isinstance(m, (nn.Conv2d, nn.Linear))]

    @torch.no_grad()
    def refresh_spectral_norm(self, tol=1e-7, max_iterations=2000):
        """Run warm-started power iterations on every weight until sigma settles.

        One iteration per forward lags behind weights that just moved, and
        freshly initialized weights have nearly tied top singular values, so
        a fixed small count can leave the normalized weight's top singular
        value visibly above 1.  Called after each discriminator update.
        """
        for layer in self.normalized_layers():
            sn = layer.parametrizations.weight[0]
            mat = sn._reshape_weight_to_matrix(layer.parametrizations.weight.original)
            sigma = torch.vdot(sn._u, mv(mat, sn._v))
            for _ in range(0, max_iterations, 5):
                sn._power_method(mat, 5)
                new = torch.vdot(sn._u, mv(mat, sn._v))
                if abs(new - sigma) <= tol * abs(new):
                    break
                sigma = new

    def forward(self, x, font_index, char_index):
        font_index = torch.as_tensor(font_index, dtype=torch.long, device=x.device)
        char_index = torch.as_tensor(char_index, dtype=torch.long, device=x.device)
        for idx, n, what in ((font_index, self.n_fonts, "font"), (char_index, self.n_chars, "character")):
            if idx.numel() and (idx.min() < 0 or idx.max() >= n):
                raise LabelOutOfRange(f"{what} index outside [0, {n})")
        h = self.stem(x)
        feats = []
        for block in self.blocks:
            h = block(h)
            feats.append(h)
        pooled = F.relu(h).mean(dim=(2, 3))
        font = self.font_head(pooled).gather(1, font_index[:, None])[:, 0]
        char = self.char_head(pooled).gather(1, char_index[:, None])[:, 0]
        return font, char, feats


class ComponentClassifier(nn.Module):
    """Two residual blocks and a linear layer over high-level component features."""

    def __init__(self, schema, channels):
        super().__init__()
        self.schema = schema
        self.blocks = nn.Sequential(ResBlock(channels, norm="none"), ResBlock(channels, norm="none"))
        self.fc = nn.Linear(channels, schema.num_components)

    def forward(self, feat):
        return self.fc(F.relu(self.blocks(feat)).mean(dim=(2, 3)))

    def classify(self, feat, type_index):
        if not 0 <= type_index < self.schema.num_types:
            raise LabelOutOfRange(f"type index {type_index} outside [0, {self.schema.num_types})")
        squeeze = feat.dim() == 3
        logits = self(feat[None] if squeeze else feat)
        off, n = self.schema.offsets[type_index], self.schema.type_sizes[type_index]
        logits = logits[:, off:off + n]
        return logits[0] if squeeze else logits

    def type_logits(self, feats):
        """Per-type logits for stacked head outputs of shape (B, T, C, h, w)."""
        b, t = feats.shape[:2]
        logits = self(feats.flatten(0, 1)).view(b, t, -1)
        return [logits[:, i, off:off + n]
                for i, (off, n) in enumerate(zip(self.schema.offsets, self.schema.type_sizes))]
