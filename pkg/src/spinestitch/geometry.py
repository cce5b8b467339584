"""Planar projective transforms and inverse-mapped image warping.

Conventions used throughout the package:

* points are (x, y) with x along columns and y along rows,
* integer coordinates are pixel centers,
* homographies are 3x3 float matrices normalized so ``m[2, 2] == 1`` and map
  source coordinates into destination coordinates,
* ``compose(a, b)`` applies ``b`` first, i.e. it equals the matrix product
  ``a @ b``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import NonInvertibleResult, ProjectiveDivideByZero, SingularMatrix
from .validation import check_homography, check_image, check_points


def identity():
    return np.eye(3)


def translation(tx, ty):
    m = np.eye(3)
    m[0, 2] = tx
    m[1, 2] = ty
    return m


def scaling(sx, sy=None):
    if sy is None:
        sy = sx
    return np.diag([float(sx), float(sy), 1.0])


def apply_homography(h, pts):
    """Map point(s) through a homography.

    Accepts a single (x, y) pair or an (n, 2) array and returns the same
    shape. Raises :class:`ProjectiveDivideByZero` if any point lands on the
    line at infinity (|w| < 1e-12).
    """
    m = check_homography(h)
    arr = check_points(pts)
    single = np.asarray(pts).ndim == 1
    ones = np.ones((arr.shape[0], 1))
    proj = np.hstack([arr, ones]) @ m.T
    w = proj[:, 2]
    if np.any(np.abs(w) < 1e-12):
        raise ProjectiveDivideByZero("point maps to the line at infinity")
    out = proj[:, :2] / w[:, None]
    return out[0] if single else out


def compose(h1, h2):
    """Composite transform applying ``h2`` first, then ``h1``."""
    a = check_homography(h1)
    b = check_homography(h2)
    m = a @ b
    if abs(m[2, 2]) < 1e-12 or abs(np.linalg.det(m)) < 1e-12:
        raise NonInvertibleResult("composed transform is singular")
    return m / m[2, 2]


def invert(h):
    m = check_homography(h)
    if abs(np.linalg.det(m)) < 1e-12:
        raise SingularMatrix("cannot invert a singular transform")
    inv = np.linalg.inv(m)
    if abs(inv[2, 2]) < 1e-12:
        raise SingularMatrix("inverse has a vanishing bottom-right entry")
    return inv / inv[2, 2]


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in canvas coordinates, inclusive pixel bounds."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError(f"degenerate bounding box {self}")

    @property
    def width(self):
        return int(round(self.x1 - self.x0)) + 1

    @property
    def height(self):
        return int(round(self.y1 - self.y0)) + 1

    @staticmethod
    def around_points(pts):
        """Smallest integer-pixel box containing all given points."""
        arr = check_points(pts)
        return BoundingBox(
            float(np.floor(arr[:, 0].min())),
            float(np.floor(arr[:, 1].min())),
            float(np.ceil(arr[:, 0].max())),
            float(np.ceil(arr[:, 1].max())),
        )


def image_corners(width, height):
    """Pixel-center corners of a width x height raster."""
    return np.array(
        [[0.0, 0.0], [width - 1.0, 0.0], [width - 1.0, height - 1.0], [0.0, height - 1.0]]
    )


def warp_image(src, h, canvas):
    """Inverse-map ``src`` through ``h`` onto an integer-pixel canvas.

    For each canvas pixel the source is sampled at ``invert(h)`` applied to
    the pixel's coordinates, with bilinear interpolation. Returns the warped
    image and a boolean validity raster that is True exactly where the
    inverse-mapped coordinate lies inside the source bounds; everything else
    is intensity 0 and invalid. Downstream code must consult the validity
    raster, never the zero fill.
    """
    return warp_raster(check_image(src, "src"), h, canvas)


def warp_raster(src, h, canvas):
    """Same as :func:`warp_image` but for rasters of any value range."""
    img = np.asarray(src, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("raster must be 2-D")
    hinv = invert(h)
    hgt, wid = img.shape

    xs = np.arange(canvas.x0, canvas.x0 + canvas.width, dtype=np.float64)
    ys = np.arange(canvas.y0, canvas.y0 + canvas.height, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)

    w = hinv[2, 0] * gx + hinv[2, 1] * gy + hinv[2, 2]
    finite = np.abs(w) > 1e-12
    w_safe = np.where(finite, w, 1.0)
    sx = (hinv[0, 0] * gx + hinv[0, 1] * gy + hinv[0, 2]) / w_safe
    sy = (hinv[1, 0] * gx + hinv[1, 1] * gy + hinv[1, 2]) / w_safe

    valid = finite & (sx >= 0) & (sx <= wid - 1) & (sy >= 0) & (sy <= hgt - 1)

    x0 = np.clip(np.floor(sx), 0, wid - 1).astype(np.intp)
    y0 = np.clip(np.floor(sy), 0, hgt - 1).astype(np.intp)
    x1 = np.minimum(x0 + 1, wid - 1)
    y1 = np.minimum(y0 + 1, hgt - 1)
    fx = np.clip(sx - x0, 0.0, 1.0)
    fy = np.clip(sy - y0, 0.0, 1.0)

    top = (1.0 - fx) * img[y0, x0] + fx * img[y0, x1]
    bottom = (1.0 - fx) * img[y1, x0] + fx * img[y1, x1]
    out = (1.0 - fy) * top + fy * bottom
    out[~valid] = 0.0
    return out, valid
