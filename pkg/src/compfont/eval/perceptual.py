"""Classifier-based metrics: accuracy, perceptual distance, mFID, style attribution."""
import logging
from collections import Counter

import numpy as np

from .metrics import fid

logger = logging.getLogger(__name__)


def accuracy(clf, images, labels):
    """Top-1 accuracy; ``labels`` are class names known to the classifier."""
    if len(images) == 0:
        raise ValueError("no images to score")
    pred = clf.predict(images)
    truth = np.array([clf.index[l] for l in labels])
    return float((pred == truth).mean())


def perceptual_distance(clf, generated, ground_truth):
    """Mean L2 distance between paired penultimate features."""
    if len(generated) != len(ground_truth):
        raise ValueError("generated and ground-truth sets must be paired")
    if len(generated) == 0:
        raise ValueError("no images to score")
    fa, fb = clf.features(generated), clf.features(ground_truth)
    return float(np.linalg.norm(fa - fb, axis=1).mean())


def mfid_from_features(gen_feats, real_feats, gen_classes, real_classes, min_count=2):
    """Mean over classes of the FID between generated and real members."""
    gen_classes, real_classes = np.asarray(gen_classes, dtype=object), np.asarray(real_classes, dtype=object)
    scores = []
    for cls in sorted(set(gen_classes) | set(real_classes), key=str):
        a, b = gen_feats[gen_classes == cls], real_feats[real_classes == cls]
        if len(a) < min_count or len(b) < min_count:
            logger.warning("mFID: skipping class %r (%d generated, %d real < %d)", cls, len(a), len(b), min_count)
            continue
        scores.append(fid(a, b))
    if not scores:
        raise ValueError("no class has enough samples for mFID")
    return float(np.mean(scores))


def mfid(clf, generated, real, gen_classes, real_classes=None, min_count=2):
    real_classes = gen_classes if real_classes is None else real_classes
    return mfid_from_features(clf.features(generated), clf.features(real), gen_classes, real_classes, min_count)


def style_attribution(style_clf, images):
    """Histogram of predicted training-style classes, ``{font: count}``."""
    if len(images) == 0:
        return {}
    counts = Counter(style_clf.predict(images).tolist())
    return {style_clf.labels[i]: n for i, n in sorted(counts.items())}
