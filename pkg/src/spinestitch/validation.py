"""Input validation helpers.

All public entry points funnel their array arguments through these checks so
the rest of the code can assume well-formed inputs: images are 2-D float
arrays with intensities in [0, 1], masks are 2-D non-negative integer label
rasters, homographies are normalized invertible 3x3 matrices and point sets
are (n, 2) float arrays of finite (x, y) coordinates.
"""

import numpy as np

from .exceptions import ExtentMismatch, SingularMatrix


def check_image(img, name="image"):
    """Coerce to a float64 (H, W) array and verify intensities in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite intensities")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(
            f"{name} intensities must lie in [0, 1], got "
            f"[{arr.min():.4g}, {arr.max():.4g}]"
        )
    return arr


def check_mask(mask, name="mask"):
    """Coerce to an int (H, W) label raster with non-negative labels."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(np.asarray(arr, dtype=np.float64))
        if not np.allclose(arr, rounded):
            raise ValueError(f"{name} labels must be integers")
        arr = rounded
    arr = arr.astype(np.int64)
    if arr.size and arr.min() < 0:
        raise ValueError(f"{name} labels must be non-negative")
    return arr


def check_binary_mask(mask, name="mask"):
    arr = check_mask(mask, name)
    if arr.size and arr.max() > 1:
        raise ValueError(f"{name} must only contain labels 0 and 1")
    return arr


def check_homography(h, name="homography"):
    """Coerce to a normalized 3x3 matrix; reject singular or scale-free ones."""
    m = np.asarray(h, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    if abs(m[2, 2]) < 1e-12:
        raise SingularMatrix(f"{name} has a vanishing bottom-right entry")
    m = m / m[2, 2]
    if abs(np.linalg.det(m)) < 1e-12:
        raise SingularMatrix(f"{name} is singular")
    return m


def check_points(pts, name="points"):
    """Coerce to an (n, 2) float64 array of finite coordinates."""
    arr = np.asarray(pts, dtype=np.float64)
    if arr.ndim == 1 and arr.shape == (2,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr


def check_same_extent(a, b, name_a="first", name_b="second"):
    if a.shape != b.shape:
        raise ExtentMismatch(
            f"{name_a} extent {a.shape} != {name_b} extent {b.shape}"
        )
