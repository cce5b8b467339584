"""Hybrid seam energy and minimal-cost seam search.

The seam energy over an overlap region combines three per-pixel terms:
squared intensity difference, squared difference of gradient magnitudes
(structure), and squared difference of feature responses (content). The
optimal seam is the monotone 8-connected path through the energy map with
minimum total cost, found by dynamic programming with backtracking.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .exceptions import DegenerateExtent, FeatureMapMismatch
from .validation import check_image, check_same_extent

AXES = ("vertical", "horizontal")


@dataclass(frozen=True)
class SeamWeights:
    """Non-negative weights for the color, gradient and feature terms."""

    lambda_color: float = 1.0
    lambda_grad: float = 1.0
    lambda_feat: float = 0.5

    def __post_init__(self):
        ws = (self.lambda_color, self.lambda_grad, self.lambda_feat)
        if any(w < 0 for w in ws):
            raise ValueError("seam weights must be non-negative")
        if not any(w > 0 for w in ws):
            raise ValueError("at least one seam weight must be positive")


@dataclass
class SeamPath:
    """One cross-axis coordinate per step along the stitching axis.

    For a vertical seam, ``coords[r]`` is the seam column in row r;
    consecutive coordinates differ by at most one.
    """

    axis: str
    coords: np.ndarray

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        self.coords = np.asarray(self.coords, dtype=np.intp)


class OrientedGradientFeatures:
    """Default feature extractor: smoothed oriented gradient responses.

    Produces one channel per orientation, each the Gaussian-smoothed
    rectified directional derivative of the image. Deterministic and
    dependency-free; a stand-in for externally exported network features,
    which can be loaded from files instead (see :mod:`spinestitch.io`).
    """

    def __init__(self, n_orientations=8, sigma=2.0):
        self.n_orientations = n_orientations
        self.sigma = sigma

    def __call__(self, img):
        arr = check_image(img)
        gy, gx = np.gradient(arr)
        channels = []
        for k in range(self.n_orientations):
            theta = 2.0 * np.pi * k / self.n_orientations
            response = np.maximum(gx * np.cos(theta) + gy * np.sin(theta), 0.0)
            channels.append(ndimage.gaussian_filter(response, self.sigma))
        return np.stack(channels, axis=0)


class PrecomputedFeatures:
    """Adapts a fixed (C, H, W) feature stack to the extractor interface.

    The stack's spatial extent must match the image it stands in for;
    anything else raises :class:`FeatureMapMismatch`.
    """

    def __init__(self, feature_stack):
        stack = np.asarray(feature_stack, dtype=np.float64)
        if stack.ndim == 2:
            stack = stack[None, :, :]
        if stack.ndim != 3:
            raise ValueError("feature stack must be (C, H, W)")
        self.stack = stack

    def __call__(self, img):
        arr = np.asarray(img)
        if self.stack.shape[1:] != arr.shape:
            raise FeatureMapMismatch(
                f"feature extent {self.stack.shape[1:]} != image extent {arr.shape}"
            )
        return self.stack


def color_energy(a, b):
    """Per-pixel squared intensity difference."""
    ia = check_image(a, "a")
    ib = check_image(b, "b")
    check_same_extent(ia, ib, "a", "b")
    return (ia - ib) ** 2


def _grad_sqsum(img):
    gy, gx = np.gradient(img)
    return gx**2 + gy**2


def gradient_energy(a, b):
    """Squared difference of the gradient square-sums of the two images.

    Gradients use central differences in the interior and one-sided
    differences at the borders.
    """
    ia = check_image(a, "a")
    ib = check_image(b, "b")
    check_same_extent(ia, ib, "a", "b")
    return (_grad_sqsum(ia) - _grad_sqsum(ib)) ** 2


def feature_energy(a, b, extractor=None, features_a=None, features_b=None):
    """Squared feature-response difference, summed over channels.

    ``extractor`` maps an image to a (C, H, W) stack; coarser stacks are
    bilinearly upsampled to pixel resolution before differencing. Explicit
    per-side stacks (e.g. loaded from feature files) bypass the extractor;
    their extent must match the images.
    """
    ia = check_image(a, "a")
    ib = check_image(b, "b")
    check_same_extent(ia, ib, "a", "b")
    if features_a is not None or features_b is not None:
        if features_a is None or features_b is None:
            raise ValueError("provide feature stacks for both sides or neither")
        fa = PrecomputedFeatures(features_a)(ia)
        fb = PrecomputedFeatures(features_b)(ib)
    else:
        extractor = extractor or OrientedGradientFeatures()
        fa = np.asarray(extractor(ia), dtype=np.float64)
        fb = np.asarray(extractor(ib), dtype=np.float64)
    fa = _to_pixel_resolution(fa, ia.shape)
    fb = _to_pixel_resolution(fb, ib.shape)
    if fa.shape != fb.shape:
        raise FeatureMapMismatch(
            f"feature stacks disagree: {fa.shape} vs {fb.shape}"
        )
    return np.sum((fa - fb) ** 2, axis=0)


def _to_pixel_resolution(stack, shape):
    if stack.ndim == 2:
        stack = stack[None, :, :]
    if stack.shape[1:] == shape:
        return stack
    zoom = (1.0, shape[0] / stack.shape[1], shape[1] / stack.shape[2])
    return ndimage.zoom(stack, zoom, order=1, grid_mode=True, mode="nearest")


def hybrid_energy(a, b, weights=None, extractor=None, features_a=None, features_b=None):
    """Weighted sum of the color, gradient and feature energies.

    Zero-weight terms are skipped entirely, so e.g. weights (1, 0, 0)
    reproduce the color energy bit for bit.
    """
    w = weights or SeamWeights()
    total = np.zeros(np.asarray(a).shape, dtype=np.float64)
    if w.lambda_color > 0:
        total = total + w.lambda_color * color_energy(a, b)
    if w.lambda_grad > 0:
        total = total + w.lambda_grad * gradient_energy(a, b)
    if w.lambda_feat > 0:
        total = total + w.lambda_feat * feature_energy(
            a, b, extractor, features_a=features_a, features_b=features_b
        )
    return total


def find_seam(energy, axis="vertical"):
    """Minimum-cost monotone 8-connected seam through an energy map.

    Cumulative cost grows along the stitching axis; each step may move the
    cross-axis coordinate by -1, 0 or +1. Ties break toward the smaller
    coordinate, both during accumulation and when picking the endpoint.
    Returns the globally optimal path (verified against exhaustive search
    in the test suite).
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    e = np.asarray(energy, dtype=np.float64)
    if e.ndim != 2:
        raise ValueError("energy map must be 2-D")
    if axis == "horizontal":
        e = e.T
    rows, cols = e.shape
    if rows < 2:
        raise DegenerateExtent("overlap spans fewer than two steps along the stitching axis")

    cost = e[0].copy()
    step = np.zeros((rows, cols), dtype=np.int8)
    for r in range(1, rows):
        stacked = np.full((3, cols), np.inf)
        stacked[0, 1:] = cost[:-1]   # from c-1
        stacked[1, :] = cost         # from c
        stacked[2, :-1] = cost[1:]   # from c+1
        # argmin scans candidates in (c-1, c, c+1) order, so ties already
        # prefer the smaller source coordinate.
        choice = np.argmin(stacked, axis=0)
        cost = e[r] + stacked[choice, np.arange(cols)]
        step[r] = choice - 1

    coords = np.empty(rows, dtype=np.intp)
    coords[-1] = int(np.argmin(cost))
    for r in range(rows - 1, 0, -1):
        coords[r - 1] = coords[r] + step[r, coords[r]]
    return SeamPath(axis=axis, coords=coords)


def seam_cost(energy, path):
    """Total energy along a seam path (accumulated in path order)."""
    e = np.asarray(energy, dtype=np.float64)
    if path.axis == "horizontal":
        e = e.T
    total = 0.0
    for r, c in enumerate(path.coords):
        total += e[r, c]
    return total
