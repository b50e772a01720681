"""Evaluation classifiers (content = character, style = font).

These are residual networks trained on every font and character of a
corpus, independently of any generator; their penultimate pooled features
define perceptual distance and mFID.
"""
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..errors import InsufficientAccuracy

logger = logging.getLogger(__name__)

CLASSIFIER_FORMAT = "compfont-eval-classifier"
FEATURE_LAYER = "penultimate (global-average-pooled last stage)"


class BasicBlock(nn.Module):
    expansion = 1

    def __init__(self, in_ch, ch, stride=1):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, ch, 3, stride, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(ch)
        self.conv2 = nn.Conv2d(ch, ch, 3, 1, 1, bias=False)
        self.bn2 = nn.BatchNorm2d(ch)
        self.shortcut = None
        if stride != 1 or in_ch != ch:
            self.shortcut = nn.Sequential(nn.Conv2d(in_ch, ch, 1, stride, bias=False), nn.BatchNorm2d(ch))

    def forward(self, x):
        h = F.relu(self.bn1(self.conv1(x)))
        h = self.bn2(self.conv2(h))
        return F.relu(h + (x if self.shortcut is None else self.shortcut(x)))


class Bottleneck(nn.Module):
    expansion = 4

    def __init__(self, in_ch, ch, stride=1):
        super().__init__()
        out = ch * self.expansion
        self.body = nn.Sequential(
            nn.Conv2d(in_ch, ch, 1, bias=False), nn.BatchNorm2d(ch), nn.ReLU(),
            nn.Conv2d(ch, ch, 3, stride, 1, bias=False), nn.BatchNorm2d(ch), nn.ReLU(),
            nn.Conv2d(ch, out, 1, bias=False), nn.BatchNorm2d(out))
        self.shortcut = None
        if stride != 1 or in_ch != out:
            self.shortcut = nn.Sequential(nn.Conv2d(in_ch, out, 1, stride, bias=False), nn.BatchNorm2d(out))

    def forward(self, x):
        return F.relu(self.body(x) + (x if self.shortcut is None else self.shortcut(x)))


ARCHS = {18: (BasicBlock, (2, 2, 2, 2)), 34: (BasicBlock, (3, 4, 6, 3)), 50: (Bottleneck, (3, 4, 6, 3))}


class ResNet(nn.Module):
    def __init__(self, num_classes, depth=18, width=64):
        super().__init__()
        block, layers = ARCHS[depth]
        self.stem = nn.Sequential(nn.Conv2d(1, width, 3, 2, 1, bias=False), nn.BatchNorm2d(width), nn.ReLU())
        stages, in_ch = [], width
        for i, n in enumerate(layers):
            ch = width * 2 ** i
            for j in range(n):
                stages.append(block(in_ch, ch, 2 if (j == 0 and i > 0) else 1))
                in_ch = ch * block.expansion
        self.stages = nn.Sequential(*stages)
        self.fc = nn.Linear(in_ch, num_classes)
        self.feature_dim = in_ch

    def features(self, x):
        return self.stages(self.stem(x)).mean(dim=(2, 3))

    def forward(self, x):
        return self.fc(self.features(x))


@dataclass
class ClassifierConfig:
    depth: int = 18
    width: int = 16
    epochs: int = 20
    batch_size: int = 32
    lr: float = 1e-3
    val_fraction: float = 0.15
    accuracy_floor: float = 0.9
    seed: int = 0


class EvalClassifier:
    """A trained content or style classifier plus its label list."""

    def __init__(self, net, target, labels, val_accuracy, config, image_size):
        self.net = net.eval()
        self.target = target
        self.labels = list(labels)
        self.index = {l: i for i, l in enumerate(self.labels)}
        self.val_accuracy = val_accuracy
        self.config = config
        self.image_size = image_size

    def require_accuracy(self):
        if self.val_accuracy < self.config.accuracy_floor:
            raise InsufficientAccuracy(
                f"{self.target} classifier validation accuracy {self.val_accuracy:.4f} "
                f"is below the floor {self.config.accuracy_floor}")

    def _batches(self, images):
        images = torch.as_tensor(np.asarray(images, dtype=np.float32))
        if images.dim() == 3:
            images = images[:, None]
        for i in range(0, len(images), 256):
            yield images[i:i + 256]

    @torch.no_grad()
    def features(self, images):
        """Penultimate pooled features, float64 numpy (N, D)."""
        self.require_accuracy()
        out = [self.net.features(b) for b in self._batches(images)]
        return torch.cat(out).double().numpy() if out else np.zeros((0, self.net.feature_dim))

    @torch.no_grad()
    def predict(self, images):
        self.require_accuracy()
        out = [self.net(b).argmax(dim=1) for b in self._batches(images)]
        return torch.cat(out).numpy() if out else np.zeros(0, dtype=np.int64)

    def save(self, path):
        torch.save({"format": CLASSIFIER_FORMAT, "target": self.target, "labels": self.labels,
                    "val_accuracy": self.val_accuracy, "config": asdict(self.config),
                    "image_size": self.image_size, "num_classes": len(self.labels),
                    "state": self.net.state_dict()}, path)

    @classmethod
    def load(cls, path):
        d = torch.load(path, map_location="cpu", weights_only=False)
        if d.get("format") != CLASSIFIER_FORMAT:
            raise ValueError(f"{path} is not an evaluation classifier")
        config = ClassifierConfig(**d["config"])
        net = ResNet(d["num_classes"], config.depth, config.width)
        net.load_state_dict(d["state"])
        return cls(net, d["target"], d["labels"], d["val_accuracy"], config, d["image_size"])


def train_eval_classifier(dataset, target, config=None):
    """Train a content ("content") or style ("style") classifier on every glyph.

    A random ``val_fraction`` of the glyphs is held out to report validation
    accuracy; the returned classifier refuses to produce features or
    predictions while that accuracy is below ``config.accuracy_floor``.
    """
    config = config or ClassifierConfig()
    if target not in ("content", "style"):
        raise ValueError(f"target must be 'content' or 'style', got {target!r}")
    labels = dataset.all_chars() if target == "content" else list(dataset.fonts)
    index = {l: i for i, l in enumerate(labels)}
    pairs = [(f, c) for f in dataset.fonts for c in dataset.chars(f)]
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(len(pairs))
    n_val = max(1, int(round(len(pairs) * config.val_fraction)))
    val, tr = perm[:n_val], perm[n_val:]
    x = torch.from_numpy(np.stack([dataset.pixels(f, c) for f, c in pairs]).astype(np.float32))[:, None]
    y = torch.tensor([index[c if target == "content" else f] for f, c in pairs])

    torch.manual_seed(config.seed)
    net = ResNet(len(labels), config.depth, config.width)
    opt = torch.optim.Adam(net.parameters(), config.lr)
    for epoch in range(config.epochs):
        net.train()
        order = tr[rng.permutation(len(tr))]
        for i in range(0, len(order), config.batch_size):
            idx = torch.as_tensor(order[i:i + config.batch_size])
            if len(idx) < 2:
                continue
            loss = F.cross_entropy(net(x[idx]), y[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
    net.eval()
    with torch.no_grad():
        pred = torch.cat([net(x[torch.as_tensor(val[i:i + 256])]).argmax(1) for i in range(0, len(val), 256)])
    acc = float((pred == y[torch.as_tensor(val)]).float().mean())
    logger.info("%s classifier: validation accuracy %.4f over %d glyphs", target, acc, len(val))
    return EvalClassifier(net, target, labels, acc, config, dataset.image_size)
