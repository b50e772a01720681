"""Building blocks shared by the generator, memories and discriminator."""
import math

import torch
import torch.nn.functional as F
from torch import nn


class InstanceNorm(nn.InstanceNorm2d):
    """Affine instance norm that passes 1x1 maps through unchanged."""

    def __init__(self, channels):
        super().__init__(channels, affine=True)

    def forward(self, x):
        if x.shape[-1] * x.shape[-2] == 1:
            return x
        return super().forward(x)


def _norm(kind, channels):
    if kind == "in":
        return InstanceNorm(channels)
    if kind == "none":
        return nn.Identity()
    raise ValueError(f"unknown norm {kind!r}")


def _activ(kind):
    return {"relu": nn.ReLU(), "lrelu": nn.LeakyReLU(0.2), "none": nn.Identity()}[kind]


class ConvBlock(nn.Module):
    def __init__(self, in_ch, out_ch, kernel=3, stride=1, norm="in", activ="relu"):
        super().__init__()
        self.conv = nn.Conv2d(in_ch, out_ch, kernel, stride, kernel // 2)
        self.norm = _norm(norm, out_ch)
        self.activ = _activ(activ)

    def forward(self, x):
        return self.activ(self.norm(self.conv(x)))


class ResBlock(nn.Module):
    """Two 3x3 convolutions with an identity (or 1x1) shortcut.

    ``downsample`` halves the resolution with average pooling at the end;
    ``preact`` selects the discriminator-style pre-activation ordering.
    """

    def __init__(self, in_ch, out_ch=None, downsample=False, norm="in", preact=False):
        super().__init__()
        out_ch = out_ch or in_ch
        self.preact = preact
        self.downsample = downsample
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, 1, 1)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, 1, 1)
        self.norm1 = _norm(norm, in_ch if preact else out_ch)
        self.norm2 = _norm(norm, out_ch)
        self.shortcut = nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else None

    def forward(self, x):
        if self.preact:
            h = self.conv1(F.relu(self.norm1(x)))
            h = self.conv2(F.relu(self.norm2(h)))
        else:
            h = F.relu(self.norm1(self.conv1(x)))
            h = self.norm2(self.conv2(h))
        s = x if self.shortcut is None else self.shortcut(x)
        out = h + s
        if not self.preact:
            out = F.relu(out)
        if self.downsample:
            out = F.avg_pool2d(out, 2)
        return out


class GCBlock(nn.Module):
    """Global-context block: attention pooling, bottleneck transform, broadcast add."""

    def __init__(self, channels, ratio=16, min_hidden=8):
        super().__init__()
        hidden = max(channels // ratio, min_hidden)
        self.mask = nn.Conv2d(channels, 1, 1)
        self.transform = nn.Sequential(
            nn.Conv2d(channels, hidden, 1),
            nn.LayerNorm([hidden, 1, 1]),
            nn.ReLU(),
            nn.Conv2d(hidden, channels, 1),
        )

    def forward(self, x):
        b, c, h, w = x.shape
        weights = self.mask(x).view(b, 1, h * w).softmax(dim=-1)           # B,1,N
        context = torch.bmm(x.view(b, c, h * w), weights.transpose(1, 2))  # B,C,1
        return x + self.transform(context.view(b, c, 1, 1))


class SABlock(nn.Module):
    """Transformer block (multi-head self-attention + feed-forward) on a 2-D map.

    Attention logits get a learned two-dimensional relative position term:
    for query ``i`` and key ``j`` the query is dotted with the sum of a row
    embedding for ``row_j - row_i`` and a column embedding for ``col_j - col_i``.
    """

    def __init__(self, channels, size, heads=4, ffn_mult=2):
        super().__init__()
        heads = heads if channels % heads == 0 else 1
        self.heads = heads
        self.dim = channels // heads
        self.size = size
        self.norm1 = nn.LayerNorm(channels)
        self.qkv = nn.Linear(channels, 3 * channels)
        self.proj = nn.Linear(channels, channels)
        self.rel_h = nn.Parameter(torch.randn(2 * size - 1, self.dim) * self.dim ** -0.5)
        self.rel_w = nn.Parameter(torch.randn(2 * size - 1, self.dim) * self.dim ** -0.5)
        self.norm2 = nn.LayerNorm(channels)
        self.ffn = nn.Sequential(nn.Linear(channels, ffn_mult * channels), nn.ReLU(),
                                 nn.Linear(ffn_mult * channels, channels))
        ys, xs = torch.meshgrid(torch.arange(size), torch.arange(size), indexing="ij")
        ys, xs = ys.flatten(), xs.flatten()
        self.register_buffer("idx_h", ys[None, :] - ys[:, None] + size - 1, persistent=False)
        self.register_buffer("idx_w", xs[None, :] - xs[:, None] + size - 1, persistent=False)

    def forward(self, x):
        b, c, h, w = x.shape
        if (h, w) != (self.size, self.size):
            raise ValueError(f"SABlock built for {self.size}x{self.size}, got {h}x{w}")
        tokens = x.flatten(2).transpose(1, 2)                               # B,N,C
        q, k, v = self.qkv(self.norm1(tokens)).chunk(3, dim=-1)
        q, k, v = (t.view(b, h * w, self.heads, self.dim).transpose(1, 2) for t in (q, k, v))
        logits = q @ k.transpose(-1, -2)
        rel = self.rel_h[self.idx_h] + self.rel_w[self.idx_w]               # N,N,d
        logits = (logits + torch.einsum("bhnd,nmd->bhnm", q, rel)) / math.sqrt(self.dim)
        attn = logits.softmax(dim=-1) @ v                                   # B,h,N,d
        tokens = tokens + self.proj(attn.transpose(1, 2).reshape(b, h * w, c))
        tokens = tokens + self.ffn(self.norm2(tokens))
        return tokens.transpose(1, 2).reshape(b, c, h, w)


class HGBlock(nn.Module):
    """Hourglass: convolve and halve down to 1x1, then upsample back with skips."""

    def __init__(self, channels, size):
        super().__init__()
        levels = int(math.log2(size))
        if 2 ** levels != size:
            raise ValueError(f"hourglass needs a power-of-two size, got {size}")
        self.downs = nn.ModuleList(ConvBlock(channels, channels, norm="none") for _ in range(levels))
        self.bottom = ConvBlock(channels, channels, norm="none")
        self.ups = nn.ModuleList(ConvBlock(channels, channels, norm="none") for _ in range(levels))

    def forward(self, x):
        skips = []
        for block in self.downs:
            x = block(x)
            skips.append(x)
            x = F.avg_pool2d(x, 2)
        x = self.bottom(x)
        for block, skip in zip(self.ups, reversed(skips)):
            x = block(F.interpolate(x, scale_factor=2, mode="nearest")) + skip
        return x
