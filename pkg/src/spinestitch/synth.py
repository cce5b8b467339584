"""Synthetic spine-like image sequences with exact ground truth.

The generator renders a procedural panorama scene (smooth background, a
curved bright spine column with periodic vertebra-like bands, mid-frequency
texture, and bright elliptical screw blobs placed in bilateral pairs along
the column), then cuts overlapping slice windows out of it. Every slice is
rendered analytically by evaluating the scene at its warped coordinates, so
slices never pass through the package's own warping code and stay a fully
independent oracle. Screw positions, per-slice instance masks, the true
slice order and the true slice-to-panorama transforms are all emitted.

Screw placement is stride-periodic: screw rows repeat with the slice stride
(with bounded per-instance jitter that cannot cross window boundaries), so
every slice window contains exactly the requested number of screw
instances. Requests that admit no such layout raise
:class:`InfeasibleSpec`.

All randomness comes from a single ``numpy.random.default_rng`` (PCG64)
stream consumed in a fixed, documented order: scene constants, screw
layout, per-slice warps, the shuffle permutation, then per-slice noise in
top-to-bottom slice order. A fixed seed therefore reproduces every output
bit for bit.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .exceptions import InfeasibleSpec
from .register import estimate_transform

WARP_KINDS = ("translation", "similarity", "affine", "projective")


@dataclass(frozen=True)
class SynthSpec:
    resolution: int = 512
    n_slices: int = 5
    overlap_fraction: float = 0.5
    n_screws_per_slice: int = 6
    warp_kind: str = "translation"
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.resolution < 64:
            raise InfeasibleSpec("resolution below 64 pixels")
        if self.n_slices < 1:
            raise InfeasibleSpec("need at least one slice")
        if not 0.2 <= self.overlap_fraction <= 0.9:
            raise InfeasibleSpec("overlap_fraction must lie in [0.2, 0.9]")
        if self.n_screws_per_slice < 1:
            raise InfeasibleSpec("need at least one screw per slice")
        if self.warp_kind not in WARP_KINDS:
            raise InfeasibleSpec(f"warp_kind must be one of {WARP_KINDS}")
        if self.noise_sigma < 0:
            raise InfeasibleSpec("noise_sigma must be non-negative")


@dataclass
class GroundTruth:
    """Everything a test needs to check the pipeline end to end.

    ``slices``/``masks``/``true_h``/``screw_centers`` are aligned with each
    other in the shuffled output order; ``true_order`` lists the output
    indices in top-to-bottom scene order; ``true_h[i]`` maps slice i's
    coordinates into the panorama frame.
    """

    spec: SynthSpec
    panorama: np.ndarray
    slices: list
    masks: list
    true_order: list
    true_h: list
    screw_centers: list = field(default_factory=list)
    stride: int = 0
    pad: int = 0
    scene: object = None

    def render_in_frame(self, frame_to_panorama, bbox):
        """Evaluate the clean scene on a canvas grid, resampling-free.

        ``frame_to_panorama`` maps the canvas frame's coordinates into the
        panorama frame; the scene is analytic so the rendered raster is an
        exact oracle rather than an interpolated one. Returns the raster
        and a validity mask limited to the panorama extent.
        """
        xs = np.arange(bbox.x0, bbox.x0 + bbox.width, dtype=np.float64)
        ys = np.arange(bbox.y0, bbox.y0 + bbox.height, dtype=np.float64)
        gx, gy = np.meshgrid(xs, ys)
        h = np.asarray(frame_to_panorama, dtype=np.float64)
        pw = h[2, 0] * gx + h[2, 1] * gy + h[2, 2]
        px = (h[0, 0] * gx + h[0, 1] * gy + h[0, 2]) / pw
        py = (h[1, 0] * gx + h[1, 1] * gy + h[1, 2]) / pw
        hgt, wid = self.panorama.shape
        valid = (px >= 0) & (px <= wid - 1) & (py >= 0) & (py <= hgt - 1)
        return self.scene.intensity(px, py), valid


# --------------------------------------------------------------------------
# screw layout


@dataclass(frozen=True)
class _Slot:
    offset: float      # vertical position within the stride period
    bilateral: bool    # pair of screws vs a single one


def _solve_slots(n_screws, m, r, s, margin, min_gap):
    """Pick pair/single slots in the two period regions for exact counts.

    A slot at period offset o contributes ``m + (o < r)`` instances to every
    slice window; the solver searches small slot mixes whose contributions
    sum to ``n_screws``, preferring layouts that share more screws between
    consecutive windows and favour bilateral pairs.
    """
    part_room = r - 2 * margin
    rest_room = (s - r) - 2 * margin
    part_cap = 0 if part_room < 0 else int(part_room // min_gap) + 1
    rest_cap = 0 if rest_room < 0 else int(rest_room // min_gap) + 1

    best = None
    for a2 in range(0, 4):          # pairs in the shared (partial) region
        for a1 in range(0, 4):      # singles there
            if a2 + a1 > part_cap:
                continue
            for b2 in range(0, 5):  # pairs in the remainder region
                for b1 in range(0, 5):
                    if b2 + b1 > rest_cap:
                        continue
                    count = (m + 1) * (2 * a2 + a1) + m * (2 * b2 + b1)
                    if count != n_screws:
                        continue
                    shared = (m - 1) * (2 * a2 + a1 + 2 * b2 + b1) + (2 * a2 + a1)
                    if shared < 2:
                        continue
                    key = (min(shared, 8), a2 + b2, -(a1 + b1))
                    if best is None or key > best[0]:
                        best = (key, (a2, a1, b2, b1))
    if best is None:
        return None
    a2, a1, b2, b1 = best[1]

    slots = []
    slots += _spread_slots(margin, r - margin, a2, a1)
    slots += _spread_slots(r + margin, s - margin, b2, b1)
    return slots


def _layout_params(scale):
    # Margin keeps a screw's footprint plus the worst-case slice warp and
    # jitter strictly inside both its period strip and every slice window.
    margin = max(40.0 * scale, 30.0)
    return margin, 1.45 * margin


def feasible_screw_count(resolution, overlap_fraction, preferred=6, search=12):
    """First per-slice screw count near ``preferred`` with an exact layout.

    High overlap shortens the slice stride, so each screw recurs in many
    windows and only certain counts admit an exact-per-slice layout; sweep
    cells use this to adapt the count per overlap bucket.
    """
    scale = resolution / 512.0
    stride = int(round(resolution * (1.0 - overlap_fraction)))
    if stride < 8:
        raise InfeasibleSpec("overlap too high for this resolution")
    m, r = divmod(resolution, stride)
    margin, min_gap = _layout_params(scale)
    for delta in range(search + 1):
        for n in (preferred + delta, preferred - delta):
            if n < 2:
                continue
            if _solve_slots(n, m, r, stride, margin, min_gap) is not None:
                return n
    raise InfeasibleSpec(
        f"no feasible screw count within {search} of {preferred} at overlap {overlap_fraction}"
    )


def _spread_slots(lo, hi, n_pairs, n_singles):
    total = n_pairs + n_singles
    if total == 0:
        return []
    if total == 1:
        centers = [0.5 * (lo + hi)]
    else:
        # Endpoints included: matches the capacity bound span // gap + 1.
        centers = np.linspace(lo, hi, total)
    out = []
    for i, c in enumerate(centers):
        out.append(_Slot(offset=float(c), bilateral=i < n_pairs))
    return out


# --------------------------------------------------------------------------
# scene


class _Scene:
    """Procedural panorama: analytic intensity function plus screw list.

    The non-screw intensity stays below 0.7 and screw interiors above it,
    so a 0.7 threshold separates the instances cleanly. Mid-frequency
    texture rides everywhere so local windows keep enough variance for
    structural metrics to stay informative under additive noise.
    """

    def __init__(self, rng, width, height, scale, pad):
        self.width = width
        self.height = height
        self.scale = scale
        self.pad = pad
        self.phi1, self.phi2, self.phis, self.phis2, self.phiv = rng.uniform(
            0, 2 * np.pi, size=5
        )
        angles = rng.uniform(0, np.pi, size=3)
        self.tex_dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        # Mid wavelengths dominate: long enough that sub-pixel panorama
        # misalignment barely decorrelates a metric window, short enough
        # that windows keep real variance under additive noise.
        self.tex_lams = np.array(
            [rng.uniform(14.0, 18.0), rng.uniform(22.0, 28.0), rng.uniform(9.0, 11.0)]
        ) * scale
        self.tex_phases = rng.uniform(0, 2 * np.pi, size=3)
        self.tex_amps = np.array([0.12, 0.06, 0.025])
        self.band_period = 66.0 * scale
        self.screws = []  # (cx, cy, tilt) in panorama coordinates

    def spine_x(self, y):
        w, h = self.width, self.height
        return (
            0.5 * w
            + 0.10 * w * np.sin(2 * np.pi * y / (2.3 * h) + self.phis)
            + 0.05 * w * np.sin(2 * np.pi * y / (0.57 * h) + self.phis2)
        )

    def base(self, x, y):
        w, h = self.width, self.height
        val = (
            0.32
            + 0.025 * np.sin(2 * np.pi * x / (1.7 * w) + self.phi1)
            + 0.025 * np.cos(2 * np.pi * y / (2.2 * h) + self.phi2)
        )
        for amp, lam, (cx, sx), ph in zip(
            self.tex_amps, self.tex_lams, self.tex_dirs, self.tex_phases
        ):
            val = val + amp * np.cos(2 * np.pi * (x * cx + y * sx) / lam + ph)
        g = np.exp(-((x - self.spine_x(y)) ** 2) / (2 * (0.085 * w) ** 2))
        val = val + 0.09 * g
        bands = (0.5 + 0.5 * np.cos(2 * np.pi * y / self.band_period + self.phiv)) ** 3
        val = val + 0.04 * g * bands
        return val

    def screw_field(self, x, y):
        level = np.zeros_like(x)
        a_len = 18.0 * self.scale
        b_wid = 7.0 * self.scale
        for cx, cy, tilt in self.screws:
            u = np.cos(tilt) * (x - cx) + np.sin(tilt) * (y - cy)
            v = -np.sin(tilt) * (x - cx) + np.cos(tilt) * (y - cy)
            q = (u / b_wid) ** 2 + (v / a_len) ** 2
            level = np.maximum(level, 0.86 * np.clip((1.0 - q) * 3.0, 0.0, 1.0))
        return level

    def screw_labels(self, x, y, screw_indices):
        """Instance labels at the given coordinates, first-come ordering."""
        labels = np.zeros(x.shape, dtype=np.int64)
        a_len = 18.0 * self.scale
        b_wid = 7.0 * self.scale
        for lbl, idx in enumerate(screw_indices, start=1):
            cx, cy, tilt = self.screws[idx]
            u = np.cos(tilt) * (x - cx) + np.sin(tilt) * (y - cy)
            v = -np.sin(tilt) * (x - cx) + np.cos(tilt) * (y - cy)
            q = (u / b_wid) ** 2 + (v / a_len) ** 2
            labels[(q <= 1.0) & (labels == 0)] = lbl
        return labels

    def intensity(self, x, y):
        # Screws render as saturated metal: brighter than any soft tissue,
        # so a fixed 0.7 threshold always separates them.
        return np.clip(np.maximum(self.base(x, y), self.screw_field(x, y)), 0.0, 1.0)


# --------------------------------------------------------------------------
# per-slice warps


def _slice_warp(rng, kind, size, rot_deg=1.2, scale_lo=0.985, shift=1.5, corner_frac=0.012):
    """Small perturbation mapping slice coordinates onto its nominal crop."""
    c = (size - 1) / 2.0
    if kind == "translation":
        return geometry.identity()
    if kind in ("similarity", "affine"):
        theta = math.radians(rng.uniform(-rot_deg, rot_deg))
        s = rng.uniform(scale_lo, 1.0)
        tx, ty = rng.uniform(-shift, shift, size=2)
        m = np.eye(3)
        m[0, 0] = s * math.cos(theta)
        m[0, 1] = -s * math.sin(theta)
        m[1, 0] = s * math.sin(theta)
        m[1, 1] = s * math.cos(theta)
        if kind == "affine":
            shear = rng.uniform(-0.008, 0.008)
            m[:2, :2] = m[:2, :2] @ np.array([[1.0, shear], [0.0, 1.0]])
        # Perturb about the slice center, then add the small shift.
        center = geometry.translation(c, c)
        uncenter = geometry.translation(-c, -c)
        return geometry.compose(
            geometry.translation(tx, ty), geometry.compose(center, geometry.compose(m, uncenter))
        )
    # projective: jitter the corners inward-biased and fit the exact map
    corners = geometry.image_corners(size, size)
    amp = corner_frac * size
    pulled = corners + 0.4 * amp * (np.array([[c, c]]) - corners) / (size / 2.0)
    jitter = rng.uniform(-amp, amp, size=(4, 2))
    return estimate_transform(corners, pulled + jitter, "projective")


def _shrink_until_inside(rng_draw, width, height, size, offset, attempts=6):
    """Redraw-with-shrink loop keeping warped slice corners inside the scene."""
    factor = 1.0
    for _ in range(attempts):
        p = rng_draw(factor)
        h = geometry.compose(geometry.translation(offset[0], offset[1]), p)
        corners = geometry.apply_homography(h, geometry.image_corners(size, size))
        if (
            corners[:, 0].min() >= 0
            and corners[:, 0].max() <= width - 1
            and corners[:, 1].min() >= 0
            and corners[:, 1].max() <= height - 1
        ):
            return h
        factor *= 0.5
    return geometry.translation(offset[0], offset[1])


# --------------------------------------------------------------------------
# generation


def generate(spec):
    """Render a seeded ground-truth sequence for the given request."""
    rng = np.random.default_rng(spec.seed)
    size = spec.resolution
    scale = size / 512.0
    stride = int(round(size * (1.0 - spec.overlap_fraction)))
    if stride < 8:
        raise InfeasibleSpec("overlap too high for this resolution")
    # Padding border keeps perturbed slice corners inside the panorama.
    pad = int(round(16.0 * scale))
    height = size + (spec.n_slices - 1) * stride + 2 * pad
    width = size + 2 * pad

    m, r = divmod(size, stride)
    margin, min_gap = _layout_params(scale)
    slots = _solve_slots(spec.n_screws_per_slice, m, r, stride, margin, min_gap)
    if slots is None:
        raise InfeasibleSpec(
            f"no screw layout yields exactly {spec.n_screws_per_slice} instances per "
            f"slice at overlap {spec.overlap_fraction} (stride {stride})"
        )

    scene = _Scene(rng, width, height, scale, pad)

    jit = min(6.0 * scale, 0.3 * margin)
    single_side = 1
    for slot in slots:
        j = 0
        while j * stride + slot.offset < height - 2 * pad:
            y0 = pad + j * stride + slot.offset
            if slot.bilateral:
                sides = (-1, 1)
            else:
                sides = (single_side,)
                single_side = -single_side
            for side in sides:
                # Stagger the two screws of a pair vertically so every slot
                # contributes two distinct rows; registration conditioning
                # improves with the number of row levels.
                stagger = 14.0 * scale * side if slot.bilateral else 0.0
                dy = stagger + rng.uniform(-jit, jit)
                # Lateral offset varies per screw so the cloud spans several
                # distinct columns; two fixed columns condition the
                # perspective terms of downstream fits poorly.
                dx = rng.uniform(0.11, 0.20) * size
                tilt = math.radians(rng.uniform(-12.0, 12.0)) * side
                cy = y0 + dy
                cx = float(scene.spine_x(np.array(cy))) + side * dx
                scene.screws.append((cx, cy, tilt))
            j += 1

    # Per-slice transforms, drawn top to bottom.
    true_h_seq = []
    for k in range(spec.n_slices):
        offset = (pad, pad + k * stride)
        h = _shrink_until_inside(
            lambda f: _slice_warp(
                rng,
                spec.warp_kind,
                size,
                rot_deg=0.35 * f,
                scale_lo=1.0 - 0.004 * f,
                shift=1.0 * f,
                corner_frac=0.0025 * f,
            ),
            width,
            height,
            size,
            offset,
        )
        true_h_seq.append(h)

    perm = rng.permutation(spec.n_slices)

    # Render the panorama and each slice analytically.
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    panorama = scene.intensity(xs, ys)

    gx, gy = np.meshgrid(np.arange(size, dtype=np.float64), np.arange(size, dtype=np.float64))
    ones = np.ones_like(gx)
    slice_seq = []
    mask_seq = []
    centers_seq = []
    screw_ys = np.array([s[1] for s in scene.screws])
    for k in range(spec.n_slices):
        h = true_h_seq[k]
        px = h[0, 0] * gx + h[0, 1] * gy + h[0, 2] * ones
        py = h[1, 0] * gx + h[1, 1] * gy + h[1, 2] * ones
        pw = h[2, 0] * gx + h[2, 1] * gy + h[2, 2] * ones
        px, py = px / pw, py / pw
        slice_seq.append(scene.intensity(px, py))

        lo = pad + k * stride
        hi = lo + size
        visible = np.flatnonzero((screw_ys >= lo) & (screw_ys < hi))
        # Label in scan order of the slice-frame centers.
        hinv = geometry.invert(h)
        local = geometry.apply_homography(hinv, np.array([scene.screws[i][:2] for i in visible]))
        rank = np.lexsort((local[:, 0], local[:, 1]))
        ordered = [int(visible[i]) for i in rank]
        if len(ordered) != spec.n_screws_per_slice:
            raise InfeasibleSpec(
                f"slice {k} sees {len(ordered)} screws instead of {spec.n_screws_per_slice}"
            )
        mask_seq.append(scene.screw_labels(px, py, ordered))
        centers_seq.append(local[rank])

    if spec.noise_sigma > 0:
        for k in range(spec.n_slices):
            noise = rng.normal(0.0, spec.noise_sigma, size=slice_seq[k].shape)
            slice_seq[k] = np.clip(slice_seq[k] + noise, 0.0, 1.0)

    slices = [slice_seq[perm[i]] for i in range(spec.n_slices)]
    masks = [mask_seq[perm[i]] for i in range(spec.n_slices)]
    true_h = [true_h_seq[perm[i]] for i in range(spec.n_slices)]
    centers = [centers_seq[perm[i]] for i in range(spec.n_slices)]
    true_order = [int(i) for i in np.argsort(perm)]

    return GroundTruth(
        spec=spec,
        panorama=panorama,
        slices=slices,
        masks=masks,
        true_order=true_order,
        true_h=true_h,
        screw_centers=centers,
        stride=stride,
        pad=pad,
        scene=scene,
    )


# --------------------------------------------------------------------------
# registration battery


def make_centroid_pair(
    warp_kind,
    seed,
    resolution=512,
    n_shared_pairs=4,
    n_exclusive=2,
    offset_fraction=0.45,
):
    """Exact centroid sets for the pairwise-registration battery.

    Builds a screw-like shared layout visible in both frames, applies a
    bounded random transform of the requested kind (the true vertical shot
    offset plus a small perturbation), and appends unshared screws that fall
    outside the other frame's field of view. Returns ``(c1, c2, true_h,
    bounds)`` with ``true_h`` warping c2 onto c1 and all points inside the
    ``resolution``-square image bounds.
    """
    if warp_kind not in WARP_KINDS:
        raise InfeasibleSpec(f"warp_kind must be one of {WARP_KINDS}")
    rng = np.random.default_rng(seed)
    size = float(resolution)
    s_off = offset_fraction * size

    # Shared screws live in the overlap band of frame 1.
    ys = np.linspace(s_off + 0.06 * size, 0.85 * size, n_shared_pairs)
    ys = ys + rng.uniform(-0.015 * size, 0.015 * size, size=n_shared_pairs)
    center_x = 0.5 * size + 0.08 * size * np.sin(ys / size * 3.0)
    dx = 0.12 * size
    c1 = []
    for y, cx in zip(ys, center_x):
        c1.append((cx - dx + rng.uniform(-3, 3), y + rng.uniform(-3, 3)))
        c1.append((cx + dx + rng.uniform(-3, 3), y + rng.uniform(-3, 3)))
    c1 = np.array(c1)

    base = geometry.translation(rng.uniform(-6.0, 6.0), s_off)
    if warp_kind == "translation":
        pert = geometry.identity()
    else:
        pert = _slice_warp(
            rng, warp_kind, resolution, rot_deg=5.0, scale_lo=0.97, shift=4.0, corner_frac=0.02
        )
    true_h = geometry.compose(base, pert)

    c2 = geometry.apply_homography(geometry.invert(true_h), c1)
    # Unshared screws of frame 2 sit near its bottom; under the true
    # transform they land well below frame 1, outside its bounds and
    # beyond the gate radius of every shared screw.
    extras = []
    for i in range(n_exclusive):
        ey = size * (0.90 + 0.04 * i)
        ex = 0.5 * size + (-1) ** i * dx + rng.uniform(-4, 4)
        extras.append((ex, ey))
    if extras:
        c2 = np.vstack([c2, np.array(extras)])

    inside = lambda pts: np.all((pts >= 0) & (pts <= size - 1))
    if not (inside(c1) and inside(c2)):
        # A rare extreme draw can push a jittered screw out; redraw.
        return make_centroid_pair(
            warp_kind,
            seed + 104729,
            resolution=resolution,
            n_shared_pairs=n_shared_pairs,
            n_exclusive=n_exclusive,
            offset_fraction=offset_fraction,
        )
    return c1, c2, true_h, (resolution, resolution)
