"""File formats: PNG rasters, feature-map binaries, manifests and reports.

Images load as float64 in [0, 1] regardless of source bit depth (8- or
16-bit grayscale; RGB is converted by averaging the channels). Masks are
single-channel PNGs whose pixel value is the instance label (0 background).
Feature maps use a small binary container documented in FORMATS.md: the
magic ``SSFM``, three little-endian uint32 fields (width, height, channels)
and then float32 little-endian samples, row-major and channel-interleaved.
"""

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .exceptions import FeatureMapMismatch
from .validation import check_image, check_mask

FEATURE_MAGIC = b"SSFM"


def load_image(path):
    with PILImage.open(path) as im:
        if im.mode in ("RGB", "RGBA"):
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
            return arr.mean(axis=2) / 255.0
        if im.mode == "I;16":
            return np.asarray(im, dtype=np.float64) / 65535.0
        if im.mode == "I":
            arr = np.asarray(im, dtype=np.float64)
            return arr / 65535.0 if arr.max() > 255 else arr / 255.0
        if im.mode in ("L", "P"):
            return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
        if im.mode == "F":
            return np.clip(np.asarray(im, dtype=np.float64), 0.0, 1.0)
        raise OSError(f"unsupported image mode {im.mode!r} in {path}")


def save_image(path, img):
    """Write a [0, 1] intensity raster as 16-bit grayscale PNG."""
    arr = check_image(img)
    data = np.round(arr * 65535.0).astype(np.uint16)
    PILImage.fromarray(data).save(path, format="PNG")


def load_mask(path):
    with PILImage.open(path) as im:
        if im.mode in ("L", "P"):
            arr = np.asarray(im.convert("L"), dtype=np.int64)
        elif im.mode in ("I;16", "I"):
            arr = np.asarray(im, dtype=np.int64)
        else:
            raise OSError(f"mask {path} must be single-channel, got mode {im.mode!r}")
    return check_mask(arr)


def save_mask(path, mask):
    arr = check_mask(mask)
    if arr.max() > 65535:
        raise ValueError("more than 65535 instances cannot be stored as PNG")
    if arr.max() <= 255:
        PILImage.fromarray(arr.astype(np.uint8), mode="L").save(path, format="PNG")
    else:
        PILImage.fromarray(arr.astype(np.uint16)).save(path, format="PNG")


def save_feature_map(path, stack):
    """Write a (C, H, W) float stack in the documented binary layout."""
    arr = np.asarray(stack, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3:
        raise ValueError("feature stack must be (C, H, W)")
    c, h, w = arr.shape
    interleaved = np.transpose(arr, (1, 2, 0))  # (H, W, C)
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<III", w, h, c))
        fh.write(interleaved.astype("<f4").tobytes())


def load_feature_map(path, expect_shape=None):
    """Read a feature file back into a (C, H, W) float64 stack.

    ``expect_shape`` (H, W) enforces agreement with the image the features
    describe; a mismatch raises :class:`FeatureMapMismatch`.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FEATURE_MAGIC:
            raise OSError(f"{path} is not a feature-map file (bad magic {magic!r})")
        w, h, c = struct.unpack("<III", fh.read(12))
        payload = fh.read()
    expected = w * h * c * 4
    if len(payload) != expected:
        raise OSError(f"{path} payload is {len(payload)} bytes, expected {expected}")
    flat = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    stack = np.transpose(flat, (2, 0, 1)).astype(np.float64)
    if expect_shape is not None and stack.shape[1:] != tuple(expect_shape):
        raise FeatureMapMismatch(
            f"feature extent {stack.shape[1:]} != image extent {tuple(expect_shape)}"
        )
    return stack


def save_report(path, report):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(path):
    with open(path) as fh:
        return json.load(fh)


def write_truth(directory, truth):
    """Write a generated sequence to the documented directory layout."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    slice_names = []
    mask_names = []
    for i, (img, mask) in enumerate(zip(truth.slices, truth.masks)):
        sname = f"slice_{i:03d}.png"
        mname = f"mask_{i:03d}.png"
        save_image(out / sname, img)
        save_mask(out / mname, mask)
        slice_names.append(sname)
        mask_names.append(mname)
    save_image(out / "panorama.png", truth.panorama)
    manifest = {
        "resolution": truth.spec.resolution,
        "n_slices": truth.spec.n_slices,
        "overlap_fraction": truth.spec.overlap_fraction,
        "n_screws_per_slice": truth.spec.n_screws_per_slice,
        "warp_kind": truth.spec.warp_kind,
        "noise_sigma": truth.spec.noise_sigma,
        "seed": truth.spec.seed,
        "stride": truth.stride,
        "true_order": truth.true_order,
        "homographies": [h.tolist() for h in truth.true_h],
        "panorama": "panorama.png",
        "slices": slice_names,
        "masks": mask_names,
    }
    save_report(out / "truth.json", manifest)
    return out / "truth.json"


def read_truth(directory):
    """Load a synthetic directory back into memory (manifest dict plus rasters)."""
    root = Path(directory)
    manifest = load_report(root / "truth.json")
    panorama = load_image(root / manifest["panorama"])
    slices = [load_image(root / n) for n in manifest["slices"]]
    masks = [load_mask(root / n) for n in manifest["masks"]]
    homographies = [np.asarray(h, dtype=np.float64) for h in manifest["homographies"]]
    return manifest, panorama, slices, masks, homographies
