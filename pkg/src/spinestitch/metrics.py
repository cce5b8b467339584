"""Image quality metrics for the evaluation harness.

PSNR on the unit intensity scale and mean local SSIM with the canonical
parameters (11x11 Gaussian window with sigma 1.5, K1=0.01, K2=0.03, dynamic
range 1), so reported numbers are reproducible bit for bit. Both accept an
optional validity raster and then evaluate only where valid, which keeps
blank canvas padding out of panorama comparisons.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .exceptions import TooSmall
from .validation import check_image, check_same_extent

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass
class MetricReport:
    ssim: float
    psnr: float
    elapsed_ms: float = float("nan")

    def row(self):
        return f"ssim={self.ssim:.6f} psnr={self.psnr:.4f} elapsed_ms={self.elapsed_ms:.2f}"


def psnr(a, b, valid=None):
    """Peak signal-to-noise ratio in dB, with MAX = 1.

    Identical inputs return the +inf sentinel.
    """
    ia = check_image(a, "a")
    ib = check_image(b, "b")
    check_same_extent(ia, ib, "a", "b")
    sq = (ia - ib) ** 2
    if valid is not None:
        check_same_extent(ia, np.asarray(valid), "a", "valid")
        if not np.any(valid):
            raise ValueError("validity raster excludes every pixel")
        mse = float(np.mean(sq[np.asarray(valid, dtype=bool)]))
    else:
        mse = float(np.mean(sq))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def ssim(a, b, valid=None):
    """Mean local structural similarity over all fully covered windows.

    With a validity raster only windows whose pixels are all valid enter
    the mean. Symmetric in its arguments and exactly 1.0 for identical
    inputs.
    """
    ia = check_image(a, "a")
    ib = check_image(b, "b")
    check_same_extent(ia, ib, "a", "b")
    if min(ia.shape) < SSIM_WINDOW:
        raise TooSmall(f"inputs must be at least {SSIM_WINDOW} pixels per side")

    window = _gaussian_window()
    mu_a = fftconvolve(ia, window, mode="valid")
    mu_b = fftconvolve(ib, window, mode="valid")
    e_aa = fftconvolve(ia * ia, window, mode="valid")
    e_bb = fftconvolve(ib * ib, window, mode="valid")
    e_ab = fftconvolve(ia * ib, window, mode="valid")

    var_a = e_aa - mu_a**2
    var_b = e_bb - mu_b**2
    cov = e_ab - mu_a * mu_b

    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    lmap = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / (
        (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    )

    if valid is None:
        return float(np.mean(lmap))
    mask = np.asarray(valid, dtype=bool)
    check_same_extent(ia, mask, "a", "valid")
    counts = fftconvolve(mask.astype(np.float64), np.ones_like(window), mode="valid")
    full = counts > window.size - 0.5
    if not np.any(full):
        raise TooSmall("no window is fully covered by the validity raster")
    return float(np.mean(lmap[full]))
