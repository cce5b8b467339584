"""Instance masks and screw-centroid extraction.

Masks are integer label rasters: 0 is background, k > 0 the k-th screw
instance. Labels are kept contiguous (1..K, assigned in row-major scan order
of each component's first pixel) so a mask's centroid list can be indexed by
label directly.
"""

import numpy as np
from scipy import ndimage

from .validation import check_binary_mask, check_image, check_mask

# 8-connectivity: screw blobs are compact and diagonal necks must not split.
_EIGHT = np.ones((3, 3), dtype=int)

DEFAULT_MIN_AREA = 20  # pixels at 512x512; scale by (resolution / 512)**2


def scaled_min_area(resolution, base=DEFAULT_MIN_AREA):
    return max(1, int(round(base * (resolution / 512.0) ** 2)))


def connected_components(binary, min_area=1):
    """Label 8-connected foreground components 1..K in scan order.

    Components smaller than ``min_area`` pixels are removed. An empty
    foreground yields an all-zero mask.
    """
    arr = check_binary_mask(binary)
    labeled, count = ndimage.label(arr, structure=_EIGHT)
    if count == 0:
        return labeled.astype(np.int64)
    if min_area > 1:
        areas = np.bincount(labeled.ravel(), minlength=count + 1)
        keep = areas >= min_area
        keep[0] = False
    else:
        keep = np.ones(count + 1, dtype=bool)
        keep[0] = False

    # Relabel survivors 1..K by first occurrence in row-major order.
    flat = labeled.ravel()
    remap = np.zeros(count + 1, dtype=np.int64)
    nxt = 1
    for lbl in flat[flat != 0]:
        if keep[lbl] and remap[lbl] == 0:
            remap[lbl] = nxt
            nxt += 1
            if nxt > count:
                break
    return remap[labeled]


def extract_centroids(mask):
    """Arithmetic-mean (x, y) centroid per label, ordered by label.

    Pixel centers sit at integer coordinates; the centroid of label k is the
    unweighted mean of its member pixels' coordinates. Returns an (K, 2)
    float array, empty for a background-only mask.
    """
    arr = check_mask(mask)
    k = int(arr.max())
    if k == 0:
        return np.zeros((0, 2))
    labels = np.arange(1, k + 1)
    present = np.bincount(arr.ravel(), minlength=k + 1)[1:]
    if np.any(present == 0):
        raise ValueError("mask labels are not contiguous")
    # ndimage returns (row, col); points are (x, y).
    rc = np.asarray(ndimage.center_of_mass(np.ones_like(arr), arr, labels))
    return rc[:, ::-1].copy()


def fallback_segment(img, threshold=0.7, min_area=DEFAULT_MIN_AREA):
    """Threshold-and-label stand-in segmenter for synthetic imagery.

    Screws render bright in the synthetic data, so a plain intensity
    threshold followed by component labeling recovers their instances. Not
    intended for clinical input, where masks come from a dedicated
    segmentation stage and are ingested as files.
    """
    arr = check_image(img)
    binary = (arr >= threshold).astype(np.int64)
    return connected_components(binary, min_area=min_area)
