"""Pixel-level similarity (SSIM, MS-SSIM) and the Fréchet distance."""
import logging

import numpy as np
from scipy.signal import convolve2d

from ..errors import ShapeMismatch

logger = logging.getLogger(__name__)
_warned_shapes = set()

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
K1, K2 = 0.01, 0.03
DATA_RANGE = 2.0  # images live in [-1, 1]
MS_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


def gaussian_window(size=WINDOW_SIZE, sigma=WINDOW_SIGMA):
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-x ** 2 / (2 * sigma ** 2))
    g /= g.sum()
    return np.outer(g, g)


def _as_image(x):
    x = np.asarray(getattr(x, "pixels", x), dtype=np.float64)
    while x.ndim > 2:
        if x.shape[0] != 1:
            raise ShapeMismatch(f"expected a single-channel image, got shape {x.shape}")
        x = x[0]
    return x


def _ssim_maps(a, b, data_range):
    win = gaussian_window(min(WINDOW_SIZE, *a.shape))
    filt = lambda z: convolve2d(z, win, mode="valid")  # noqa: E731 (symmetric window)
    c1, c2 = (K1 * data_range) ** 2, (K2 * data_range) ** 2
    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    cs = (2 * cov + c2) / (var_a + var_b + c2)
    lum = (2 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1)
    return lum * cs, cs


def ssim(a, b, data_range=DATA_RANGE):
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5), valid filtering."""
    a, b = _as_image(a), _as_image(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    s, _ = _ssim_maps(a, b, data_range)
    return float(s.mean())


def ms_ssim(a, b, data_range=DATA_RANGE, weights=MS_WEIGHTS):
    """Multi-scale SSIM; uses fewer scales (renormalized weights) for small images.

    Negative contrast-structure terms are clamped at zero before the
    weighted product so fractional powers stay real.
    """
    a, b = _as_image(a), _as_image(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    n = 1
    while n < len(weights) and min(a.shape) // 2 ** n >= WINDOW_SIZE:
        n += 1
    if n < len(weights) and (a.shape, len(weights)) not in _warned_shapes:
        _warned_shapes.add((a.shape, len(weights)))
        logger.warning("image %s too small for %d scales; using %d", a.shape, len(weights), n)
    w = np.asarray(weights[:n], dtype=np.float64)
    w /= w.sum()
    out = 1.0
    for j in range(n):
        s, cs = _ssim_maps(a, b, data_range)
        value = s.mean() if j == n - 1 else cs.mean()
        out *= max(float(value), 0.0) ** w[j]
        if j < n - 1:
            h, wd = (a.shape[0] // 2) * 2, (a.shape[1] // 2) * 2
            a = a[:h, :wd].reshape(h // 2, 2, wd // 2, 2).mean(axis=(1, 3))
            b = b[:h, :wd].reshape(h // 2, 2, wd // 2, 2).mean(axis=(1, 3))
    return float(out)


def _sqrtm_psd(m):
    vals, vecs = np.linalg.eigh((m + m.T) / 2)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def frechet_distance(mu1, sigma1, mu2, sigma2, eps=1e-6):
    """Fréchet distance between two Gaussians.

    The trace of sqrt(S1 S2) is computed as the trace of
    sqrt(S1^1/2 S2 S1^1/2), a symmetric PSD product whose eigenvalues are
    clipped at zero; ``eps * I`` is added to both covariances so singular
    estimates stay usable.
    """
    mu1, mu2 = np.asarray(mu1, np.float64), np.asarray(mu2, np.float64)
    s1 = np.atleast_2d(sigma1).astype(np.float64) + eps * np.eye(len(mu1))
    s2 = np.atleast_2d(sigma2).astype(np.float64) + eps * np.eye(len(mu2))
    r1 = _sqrtm_psd(s1)
    inner = r1 @ s2 @ r1
    tr_cross = np.sqrt(np.clip(np.linalg.eigvalsh((inner + inner.T) / 2), 0.0, None)).sum()
    diff = mu1 - mu2
    return float(max(diff @ diff + np.trace(s1) + np.trace(s2) - 2.0 * tr_cross, 0.0))


def gaussian_fit(features):
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2 or len(f) < 2:
        raise ValueError("need at least two feature vectors to fit a Gaussian")
    return f.mean(axis=0), np.cov(f, rowvar=False)


def fid(features_a, features_b, eps=1e-6):
    return frechet_distance(*gaussian_fit(features_a), *gaussian_fit(features_b), eps=eps)
