"""Panorama assembly: canvas extent, seam-guided blending, full pipeline.

Composition proceeds pairwise along the recovered chain: the running
panorama is fused with the next warped image across the optimal seam of
their overlap, using a sigmoid cross-fade of the signed distance to the
seam so the transition is progressive on both sides.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import geometry, seam as seam_mod
from .exceptions import DegenerateExtent, EmptyOverlap, FeatureMapMismatch
from .masks import extract_centroids
from .ordering import (
    build_energy_matrix,
    order_exact,
    order_greedy,
    pick_reference_and_chain,
)
from .register import RegistrationConfig
from .seam import SeamPath, SeamWeights, find_seam
from .validation import check_image, check_same_extent


@dataclass(frozen=True)
class Canvas:
    """Integer-pixel output extent in reference-frame coordinates."""

    bbox: geometry.BoundingBox

    @property
    def width(self):
        return self.bbox.width

    @property
    def height(self):
        return self.bbox.height

    @property
    def offset(self):
        """Translation from reference-frame coordinates to canvas indices."""
        return (-self.bbox.x0, -self.bbox.y0)


@dataclass(frozen=True)
class BlendConfig:
    """Sigmoid cross-fade parameters.

    ``k`` is the sigmoid steepness per pixel of signed seam distance;
    ``band`` the half-width beyond which the weights saturate to exactly
    0 and 1 (pixels farther than ``band`` from the seam are copied
    unchanged from their side's image).
    """

    k: float = 0.5
    band: float = 32.0

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("amplification factor k must be positive")
        if self.band <= 0:
            raise ValueError("band must be positive")


def compute_canvas(plan, extents):
    """Bounding box of every image's warped corners, on integer pixels."""
    corners = []
    for idx, (w, h) in enumerate(extents):
        corners.append(
            geometry.apply_homography(plan.chained[idx], geometry.image_corners(w, h))
        )
    return Canvas(bbox=geometry.BoundingBox.around_points(np.vstack(corners)))


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def blend_weights(signed_distance, config):
    """Cross-fade weight of the positive side at a signed seam distance."""
    d = np.asarray(signed_distance, dtype=np.float64)
    w = _sigmoid(config.k * d)
    w = np.where(d > config.band, 1.0, w)
    w = np.where(d < -config.band, 0.0, w)
    return w


def blend_pair(a, valid_a, b, valid_b, seam, config=None):
    """Fuse two equally sized images across a seam.

    ``a`` owns the smaller-coordinate side of the seam (left of a vertical
    seam, above a horizontal one). Where both images are valid the output is
    ``weight * a + (1 - weight) * b`` with the sigmoid weight of the signed
    cross-axis distance to the seam; where only one is valid it is copied;
    elsewhere the output is invalid. ``seam.coords`` must span the full
    extent along the stitching axis.
    """
    ia = check_image(a, "a")
    ib = check_image(b, "b")
    check_same_extent(ia, ib, "a", "b")
    cfg = config or BlendConfig()
    rows, cols = ia.shape

    if seam.axis == "vertical":
        if len(seam.coords) != rows:
            raise DegenerateExtent("seam length must match the image height")
        d = seam.coords[:, None].astype(np.float64) - np.arange(cols)[None, :]
    else:
        if len(seam.coords) != cols:
            raise DegenerateExtent("seam length must match the image width")
        d = seam.coords[None, :].astype(np.float64) - np.arange(rows)[:, None]

    w = blend_weights(d, cfg)
    both = valid_a & valid_b
    # b + w * (a - b) keeps every blended value inside [min(a,b), max(a,b)]
    # in floating point (rounding is monotone), unlike w*a + (1-w)*b.
    out = np.where(both, ib + w * (ia - ib), 0.0)
    out = np.where(valid_a & ~valid_b, ia, out)
    out = np.where(valid_b & ~valid_a, ib, out)
    return out, valid_a | valid_b


def _extend_seam(path, lo, length):
    """Embed a seam found on an overlap crop into the full extent.

    Rows (or columns) outside the overlap reuse the nearest seam
    coordinate, which only matters where a single image is valid anyway.
    """
    coords = np.empty(length, dtype=np.intp)
    coords[:lo] = path.coords[0]
    coords[lo : lo + len(path.coords)] = path.coords
    coords[lo + len(path.coords) :] = path.coords[-1]
    return SeamPath(axis=path.axis, coords=coords)


def _fuse_step(
    pano, pano_valid, img, img_valid, pair, weights, extractor, blend_cfg, axis,
    crop_features=None,
):
    both = pano_valid & img_valid
    if not both.any():
        raise EmptyOverlap(
            f"warped images {pair[0]} and {pair[1]} share no valid pixels", pair=pair
        )
    rows = np.flatnonzero(both.any(axis=1))
    cols = np.flatnonzero(both.any(axis=0))
    r0, r1 = int(rows[0]), int(rows[-1])
    c0, c1 = int(cols[0]), int(cols[-1])

    crop_a = pano[r0 : r1 + 1, c0 : c1 + 1]
    crop_b = img[r0 : r1 + 1, c0 : c1 + 1]
    crop_both = both[r0 : r1 + 1, c0 : c1 + 1]
    if crop_features is not None:
        fa, fb = crop_features(pair, (r0, c0, r1, c1))
        energy = seam_mod.hybrid_energy(
            crop_a, crop_b, weights, features_a=fa, features_b=fb
        )
    else:
        energy = seam_mod.hybrid_energy(crop_a, crop_b, weights, extractor)
    # Keep the seam inside the true overlap: non-shared pixels get a cost
    # strictly above anything achievable inside it.
    penalty = energy.max() * (energy.shape[0] + 1) + 1.0
    energy = np.where(crop_both, energy, penalty)

    try:
        path = find_seam(energy, axis=axis)
    except DegenerateExtent as exc:
        raise DegenerateExtent(f"pair {pair}: {exc}") from exc
    cost = seam_mod.seam_cost(energy, path)

    if axis == "vertical":
        shifted = SeamPath(axis=axis, coords=path.coords + c0)
        full = _extend_seam(shifted, r0, pano.shape[0])
    else:
        shifted = SeamPath(axis=axis, coords=path.coords + r0)
        full = _extend_seam(shifted, c0, pano.shape[1])

    fused, fused_valid = blend_pair(pano, pano_valid, img, img_valid, full, blend_cfg)
    return fused, fused_valid, float(cost), int(len(path.coords))


@dataclass
class StitchResult:
    panorama: np.ndarray
    validity: np.ndarray
    plan: object
    canvas: Canvas
    report: dict


def stitch_all(
    images,
    masks,
    registration=None,
    weights=None,
    extractor=None,
    blend=None,
    seam_axis="vertical",
    exact_order=False,
    reference_override=None,
    feature_stacks=None,
):
    """Run the full pipeline on an unordered image set with per-image masks.

    Steps: screw centroids from the masks, all-pairs registration, chain
    ordering, transform accumulation into the reference frame, global
    canvas, then sequential warp + seam + blend along the chain. Returns the
    panorama with its validity raster and a machine-readable report (chain
    order, per-pair energies and model kinds, per-step seam costs, wall
    time of the pipeline excluding any file I/O).

    ``feature_stacks`` optionally supplies one precomputed (C, H, W) feature
    stack per input image (extents matching the images); the seam's feature
    term then compares the warped stacks of the two images being fused
    instead of running ``extractor`` on the warped crops.
    """
    if len(images) < 2:
        raise ValueError("need at least two images to stitch")
    if len(masks) != len(images):
        raise ValueError("need exactly one mask per image")
    if feature_stacks is not None and len(feature_stacks) != len(images):
        raise ValueError("need exactly one feature stack per image")
    t0 = time.perf_counter()

    imgs = [check_image(im, f"image {i}") for i, im in enumerate(images)]
    reg_cfg = registration or RegistrationConfig()
    centroid_sets = [extract_centroids(m) for m in masks]
    for i, pts in enumerate(centroid_sets):
        if len(pts) == 0:
            raise ValueError(f"mask {i} contains no screw instances")

    hgt, wid = imgs[0].shape
    matrix = build_energy_matrix(centroid_sets, bounds=(wid, hgt), config=reg_cfg)
    _raise_if_isolated(matrix)
    order = order_exact(matrix) if exact_order else order_greedy(matrix)
    plan = pick_reference_and_chain(matrix, order, reference_override=reference_override)

    extents = [(im.shape[1], im.shape[0]) for im in imgs]
    canvas = compute_canvas(plan, extents)

    warped = {}
    for idx in plan.order:
        warped[idx] = geometry.warp_image(imgs[idx], plan.chained[idx], canvas.bbox)

    crop_features = None
    if feature_stacks is not None:
        stacks = [np.asarray(s, dtype=np.float64) for s in feature_stacks]
        for i, (stack, im) in enumerate(zip(stacks, imgs)):
            if stack.ndim != 3 or stack.shape[1:] != im.shape:
                raise FeatureMapMismatch(
                    f"feature stack {i} extent {stack.shape} does not match image {im.shape}"
                )

        def crop_features(pair, box):
            # Warp each side's feature channels onto the overlap crop; the
            # panorama side reuses the features of the chain predecessor,
            # whose content dominates that band.
            r0, c0, r1, c1 = box
            bbox = geometry.BoundingBox(
                canvas.bbox.x0 + c0, canvas.bbox.y0 + r0,
                canvas.bbox.x0 + c1, canvas.bbox.y0 + r1,
            )
            out = []
            for idx in pair:
                chans = [
                    geometry.warp_raster(ch, plan.chained[idx], bbox)[0]
                    for ch in stacks[idx]
                ]
                out.append(np.stack(chans, axis=0))
            return out[0], out[1]

    blend_cfg = blend or BlendConfig()
    pano, pano_valid = warped[plan.order[0]]
    seams = []
    for prev, nxt in zip(plan.order, plan.order[1:]):
        img, img_valid = warped[nxt]
        pano, pano_valid, cost, length = _fuse_step(
            pano,
            pano_valid,
            img,
            img_valid,
            (prev, nxt),
            weights or SeamWeights(),
            extractor,
            blend_cfg,
            seam_axis,
            crop_features=crop_features,
        )
        seams.append({"pair": [int(prev), int(nxt)], "cost": cost, "length": length})

    elapsed_ms = (time.perf_counter() - t0) * 1e3
    report = {
        "order": [int(i) for i in plan.order],
        "reference": int(plan.reference),
        "pairs": [
            {
                "from": int(a),
                "to": int(b),
                "energy": float(matrix.energy[a, b]),
                "model_kind": matrix.results[a][b].model_kind,
                "iterations": int(matrix.results[a][b].iterations),
            }
            for a, b in zip(plan.order, plan.order[1:])
        ],
        "seams": seams,
        "canvas": {
            "x0": int(canvas.bbox.x0),
            "y0": int(canvas.bbox.y0),
            "x1": int(canvas.bbox.x1),
            "y1": int(canvas.bbox.y1),
        },
        "homographies": [h.tolist() if h is not None else None for h in plan.chained],
        "elapsed_ms": elapsed_ms,
    }
    return StitchResult(
        panorama=pano, validity=pano_valid, plan=plan, canvas=canvas, report=report
    )


def _raise_if_isolated(matrix):
    """Surface the recorded registration failure for fully isolated images."""
    for i in range(matrix.n):
        row_ok = any(np.isfinite(matrix.energy[i, j]) for j in range(matrix.n) if j != i)
        col_ok = any(np.isfinite(matrix.energy[j, i]) for j in range(matrix.n) if j != i)
        if row_ok or col_ok:
            continue
        for (a, b), exc in matrix.failures.items():
            if a == i or b == i:
                exc.pair = (a, b)
                raise exc
