"""Screw-centroid registration by alignment-energy minimization.

The alignment energy between two centroid sets is the sum of squared
distances from each warped source centroid to its nearest destination
centroid, optionally restricted to warped centroids that land inside the
destination image bounds (screws visible in only one image then drop out of
the sum).

The energy is minimized with a gated iterative-closest-point loop: match
warped source centroids to their nearest destination centroids, reject
matches beyond a gate radius, re-estimate the transform from the survivors
at the richest model the match count supports, and repeat while the energy
improves. Because the screw pattern repeats along the spine, a single start
can settle into a shifted overlay of non-corresponding screws; the solver
therefore seeds the loop from the mean-alignment translation plus every
distinct single-correspondence translation hypothesis and keeps the
candidate whose converged transform best explains both point sets.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .exceptions import (
    DegenerateConfiguration,
    EmptyOverlap,
    NoValidMatches,
    ProjectiveDivideByZero,
    SingularMatrix,
)
from .validation import check_points

MODEL_KINDS = ("translation", "similarity", "affine", "projective")
_MIN_PAIRS = {"translation": 1, "similarity": 2, "affine": 3, "projective": 4}


@dataclass(frozen=True)
class RegistrationConfig:
    """Knobs for :func:`register_pair`, all exposed through the CLI config."""

    tol_energy: float = 1e-6      # pixels^2; stop when improvement drops below
    max_iters: int = 100
    gate_radius_fraction: float = 0.25   # of the image diagonal
    allow_projective: bool = True

    def __post_init__(self):
        if self.tol_energy <= 0:
            raise ValueError("tol_energy must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.gate_radius_fraction <= 2.0:
            raise ValueError("gate_radius_fraction out of range")


@dataclass
class RegistrationResult:
    """Outcome of a pairwise registration.

    ``h`` warps source (second-image) coordinates into the destination
    (first-image) frame. ``energy_history`` lists the alignment energy at
    every accepted iterate and is non-increasing by construction.
    """

    h: np.ndarray
    energy: float
    iterations: int
    model_kind: str
    energy_history: list = field(default_factory=list)


def _nearest(points, targets):
    """Index into ``targets`` of each point's nearest target, plus distance."""
    diff = points[:, None, :] - targets[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    idx = np.argmin(d2, axis=1)
    return idx, np.sqrt(d2[np.arange(len(points)), idx])


def _inside(points, bounds):
    w, h = bounds
    return (
        (points[:, 0] >= 0)
        & (points[:, 0] <= w - 1)
        & (points[:, 1] >= 0)
        & (points[:, 1] <= h - 1)
    )


def align_energy(c1, c2, h, bounds=None, overlap_only=False):
    """Sum of squared nearest-neighbor distances from warped c2 to c1.

    With ``overlap_only`` the sum runs only over warped centroids inside the
    destination image bounds (``bounds`` = (width, height) of the first
    image); raises :class:`EmptyOverlap` when none lands inside.
    """
    dst = check_points(c1, "c1")
    src = check_points(c2, "c2")
    if dst.shape[0] == 0:
        raise ValueError("destination centroid set is empty")
    warped = geometry.apply_homography(h, src)
    if overlap_only:
        if bounds is None:
            raise ValueError("overlap_only requires destination bounds")
        keep = _inside(warped, bounds)
        if not np.any(keep):
            raise EmptyOverlap("no warped centroid lands inside the destination bounds")
        warped = warped[keep]
    _, dist = _nearest(warped, dst)
    return float(np.sum(dist**2))


def estimate_transform(src, dst, kind):
    """Least-squares transform of ``kind`` mapping ``src`` onto ``dst``.

    Exact (residual at machine precision) on noiseless non-degenerate pairs.
    Raises :class:`DegenerateConfiguration` when the configuration is
    rank-deficient for the requested model, e.g. collinear points for a
    projective fit; callers are expected to retry with a lower kind.
    """
    s = check_points(src, "src")
    d = check_points(dst, "dst")
    if s.shape != d.shape:
        raise ValueError("source and destination pair counts differ")
    n = s.shape[0]
    if kind not in _MIN_PAIRS:
        raise ValueError(f"unknown model kind {kind!r}")
    if n < _MIN_PAIRS[kind]:
        raise DegenerateConfiguration(
            f"{kind} needs at least {_MIN_PAIRS[kind]} pairs, got {n}"
        )
    if kind == "translation":
        t = d.mean(axis=0) - s.mean(axis=0)
        return geometry.translation(t[0], t[1])
    if kind == "similarity":
        return _fit_similarity(s, d)
    if kind == "affine":
        return _fit_affine(s, d)
    return _fit_projective(s, d)


def _fit_similarity(s, d):
    mu_s = s.mean(axis=0)
    mu_d = d.mean(axis=0)
    sc = s - mu_s
    dc = d - mu_d
    var_s = np.sum(sc**2) / len(s)
    if var_s < 1e-12:
        raise DegenerateConfiguration("source points are coincident")
    cov = dc.T @ sc / len(s)
    u, sig, vt = np.linalg.svd(cov)
    sign = np.sign(np.linalg.det(u @ vt))
    dsel = np.array([1.0, sign])
    rot = u @ np.diag(dsel) @ vt
    scale = np.sum(sig * dsel) / var_s
    if abs(scale) < 1e-6:
        raise DegenerateConfiguration("similarity fit collapsed to zero scale")
    m = np.eye(3)
    m[:2, :2] = scale * rot
    m[:2, 2] = mu_d - scale * rot @ mu_s
    return m


def _fit_affine(s, d):
    a = np.hstack([s, np.ones((len(s), 1))])
    sol, _, rank, _ = np.linalg.lstsq(a, d, rcond=None)
    if rank < 3:
        raise DegenerateConfiguration("points are collinear; affine fit is rank-deficient")
    m = np.eye(3)
    m[:2, :] = sol.T
    return m


def _hartley_normalization(pts):
    mu = pts.mean(axis=0)
    rms = np.sqrt(np.mean(np.sum((pts - mu) ** 2, axis=1)))
    if rms < 1e-12:
        raise DegenerateConfiguration("points are coincident")
    s = np.sqrt(2.0) / rms
    t = np.array([[s, 0, -s * mu[0]], [0, s, -s * mu[1]], [0, 0, 1.0]])
    return t


def _fit_projective(s, d):
    # Normalized direct linear transform: condition both sets, solve the
    # stacked 2n x 9 system by SVD, then undo the normalization.
    ts = _hartley_normalization(s)
    td = _hartley_normalization(d)
    sn = geometry.apply_homography(ts, s)
    dn = geometry.apply_homography(td, d)
    rows = []
    for (x, y), (u, v) in zip(sn, dn):
        rows.append([-x, -y, -1, 0, 0, 0, u * x, u * y, u])
        rows.append([0, 0, 0, -x, -y, -1, v * x, v * y, v])
    a = np.asarray(rows)
    _, sig, vt = np.linalg.svd(a)
    # Rank must be exactly 8 for a unique solution; collinear or repeated
    # points leave a nullspace of dimension >= 2.
    if sig[-2] < 1e-9 * sig[0]:
        raise DegenerateConfiguration("projective fit is rank-deficient")
    hn = vt[-1].reshape(3, 3)
    if abs(hn[2, 2]) < 1e-12:
        # Affine-infinite solution; treat as degenerate for this model.
        raise DegenerateConfiguration("projective fit has no finite normalization")
    m = np.linalg.inv(td) @ hn @ ts
    return m / m[2, 2]


def _model_ladder(n_matches, allow_projective):
    ladder = []
    for kind in reversed(MODEL_KINDS):
        if kind == "projective" and not allow_projective:
            continue
        if n_matches >= _MIN_PAIRS[kind]:
            ladder.append(kind)
    return ladder


def _gate_radius(dst, src, bounds, cfg):
    if bounds is not None:
        w, h = bounds
        diag = float(np.hypot(w, h))
    else:
        both = np.vstack([dst, src])
        span = both.max(axis=0) - both.min(axis=0)
        diag = float(np.hypot(span[0], span[1]))
        if diag < 1e-9:
            diag = 1.0
    return cfg.gate_radius_fraction * diag


def _fit_score(dst, src, h, bounds, tau):
    """Rank key for converged candidates: consensus first, then residual.

    Returns ``(-inliers, residual)``. Inliers are two-sided matches within
    the tight radius ``tau``: warped source centroids inside the
    destination bounds matched to a destination centroid, plus destination
    centroids inside the source's field of view matched to a warped
    centroid. The residual is the same two-sided sum of squared
    nearest-neighbor distances. Counting both directions stops a transform
    from winning by pushing all screws but a lucky couple out of the
    compared regions, and the consensus count stops few-point coincidences
    from beating an alignment that explains every shared screw.
    """
    warped = geometry.apply_homography(h, src)
    if bounds is not None:
        fwd_keep = _inside(warped, bounds)
        try:
            back_keep = _inside(geometry.apply_homography(geometry.invert(h), dst), bounds)
        except SingularMatrix:
            return (0, np.inf)
        if not np.any(fwd_keep):
            return (0, np.inf)
    else:
        fwd_keep = np.ones(len(warped), dtype=bool)
        back_keep = np.ones(len(dst), dtype=bool)
    inliers = 0
    total = 0.0
    if np.any(fwd_keep):
        _, fd = _nearest(warped[fwd_keep], dst)
        inliers += int(np.sum(fd <= tau))
        total += float(np.sum(fd**2))
    if np.any(back_keep):
        _, bd = _nearest(dst[back_keep], warped)
        inliers += int(np.sum(bd <= tau))
        total += float(np.sum(bd**2))
    return (-inliers, total)


def _plausible(h, dst, src, bounds):
    """Cheap geometric sanity check against non-C-arm-like transforms.

    Consecutive shots of a patient on a table are near-translations with
    mild rotation/scale/perspective; a candidate whose corner motion
    deviates from its own best translation by more than a tenth of the
    diagonal is a registration artifact, not a plausible acquisition.
    """
    if bounds is not None:
        w, hgt = bounds
        corners = geometry.image_corners(w, hgt)
        diag = float(np.hypot(w, hgt))
    else:
        both = np.vstack([dst, src])
        lo = both.min(axis=0)
        hi = both.max(axis=0)
        corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
        diag = float(np.hypot(*(hi - lo))) or 1.0
    try:
        moved = geometry.apply_homography(h, corners)
    except (SingularMatrix, ProjectiveDivideByZero):
        return False
    disp = moved - corners
    residual = disp - disp.mean(axis=0)
    return float(np.linalg.norm(residual, axis=1).max()) <= 0.10 * diag


def _energy_or_inf(dst, src, h, bounds):
    try:
        return align_energy(dst, src, h, bounds=bounds, overlap_only=bounds is not None)
    except EmptyOverlap:
        return np.inf


def _gated_matches(dst, src, h, gate, bounds):
    warped = geometry.apply_homography(h, src)
    idx, dist = _nearest(warped, dst)
    keep = dist <= gate
    if bounds is not None:
        # Screws mapping outside the destination are visible in one image
        # only; they have no partner and must not steer the fit.
        keep &= _inside(warped, bounds)
    return keep, idx


def _icp_from(dst, src, h0, gate, bounds, cfg):
    """Run the gated ICP loop from one starting transform.

    The model is annealed: the loop converges translation-only first,
    which cannot contort on partially wrong correspondences, then
    escalates kind by kind as far as the match count allows, re-converging
    at each stage. Steps are only accepted while the alignment energy does
    not increase, so the recorded history is non-increasing by
    construction.
    """
    h = h0
    energy = _energy_or_inf(dst, src, h, bounds)
    if not np.isfinite(energy):
        return None
    # A transform supported by a single gated match explains nothing: with
    # the overlap restriction it can zero the energy of any pair by pushing
    # every other screw out of bounds. Demand two matches whenever both
    # sets have two screws to give.
    min_support = min(2, len(src), len(dst))
    keep0, _ = _gated_matches(dst, src, h, gate, bounds)
    if int(keep0.sum()) < min_support:
        return None
    history = [energy]
    budget = cfg.max_iters
    kinds = [k for k in MODEL_KINDS if cfg.allow_projective or k != "projective"]
    kind_used = "translation"
    for kind in kinds:
        # Escalate only to over-determined fits: a model fitted on exactly
        # its defining point count interpolates any correspondence with
        # zero residual, which lets coincidental matches masquerade as
        # perfect registrations of non-overlapping pairs.
        required = max(_MIN_PAIRS[kind] + (1 if kind != "translation" else 0), min_support)
        stepped = False
        while budget > 0:
            keep, idx = _gated_matches(dst, src, h, gate, bounds)
            if int(keep.sum()) < required:
                break
            try:
                h_new = estimate_transform(src[keep], dst[idx[keep]], kind)
                e_new = _energy_or_inf(dst, src, h_new, bounds)
            except (DegenerateConfiguration, SingularMatrix):
                break
            if not np.isfinite(e_new) or e_new > energy:
                break
            improvement = energy - e_new
            h, energy = h_new, e_new
            stepped = True
            history.append(energy)
            budget -= 1
            if improvement < cfg.tol_energy:
                break
        if stepped:
            kind_used = kind

    return RegistrationResult(
        h=h,
        energy=energy,
        iterations=len(history) - 1,
        model_kind=kind_used,
        energy_history=history,
    )


def _candidate_translations(dst, src, gate, cfg, max_starts=16):
    """Starting translations: mean alignment plus correspondence hypotheses.

    Every (i, j) pairing votes for the translation putting src[j] onto
    dst[i]. Correct correspondences all vote within a small ball around the
    true inter-image shift (spread only by jitter and mild rotation), so
    hypotheses are clustered at that scale and cluster means explored
    densest-first; the true basin is then among the starts without running
    the loop from every hypothesis. A coarser radius would merge unrelated
    coincidence votes into fat clusters and crowd the true one out.
    """
    mean_t = dst.mean(axis=0) - src.mean(axis=0)
    hyp = (dst[None, :, :] - src[:, None, :]).reshape(-1, 2)
    diag = gate / cfg.gate_radius_fraction
    radius = max(10.0, 0.02 * diag)

    diff = hyp[:, None, :] - hyp[None, :, :]
    close = np.einsum("ijk,ijk->ij", diff, diff) <= radius**2
    alive = np.ones(len(hyp), dtype=bool)
    starts = [mean_t]
    while len(starts) < max_starts + 1 and alive.any():
        votes = np.where(alive, close[:, alive].sum(axis=1), -1)
        pick = int(np.argmax(votes))
        members = close[pick] & alive
        starts.append(hyp[members].mean(axis=0))
        alive &= ~members
    return starts


def register_pair(c1, c2, bounds=None, config=None):
    """Estimate the transform warping centroid set ``c2`` onto ``c1``.

    ``bounds`` is the (width, height) of the destination image; when given,
    the alignment energy is restricted to warped centroids inside those
    bounds. Raises :class:`NoValidMatches` when, at the mean-alignment
    initialization, every correspondence exceeds the gate radius (the sets
    do not plausibly overlap).
    """
    dst = check_points(c1, "c1")
    src = check_points(c2, "c2")
    if dst.shape[0] == 0 or src.shape[0] == 0:
        raise ValueError("both centroid sets must be nonempty")
    cfg = config or RegistrationConfig()
    gate = _gate_radius(dst, src, bounds, cfg)
    # Tight consensus radius: a match this close counts as the same screw.
    tau = max(3.0, 0.004 * gate / cfg.gate_radius_fraction)

    mean_t = dst.mean(axis=0) - src.mean(axis=0)
    warped0 = src + mean_t
    _, dist0 = _nearest(warped0, dst)
    if np.all(dist0 > gate):
        raise NoValidMatches(
            "every correspondence exceeds the gate radius at initialization"
        )

    best = None
    best_key = None
    fallback = None
    fallback_key = None
    for t in _candidate_translations(dst, src, gate, cfg):
        result = _icp_from(dst, src, geometry.translation(t[0], t[1]), gate, bounds, cfg)
        if result is None:
            continue
        key = _fit_score(dst, src, result.h, bounds, tau)
        if not np.isfinite(key[1]):
            continue
        if fallback_key is None or key < fallback_key:
            fallback, fallback_key = result, key
        if not _plausible(result.h, dst, src, bounds):
            continue
        if best_key is None or key < best_key:
            best, best_key = result, key
    if best is None:
        best = fallback
    if best is None:
        raise EmptyOverlap("no starting transform produced an in-bounds overlap")
    return best


def timed_register_pair(c1, c2, bounds=None, config=None):
    """register_pair plus wall-clock milliseconds, for the benchmark harness."""
    start = time.perf_counter()
    result = register_pair(c1, c2, bounds=bounds, config=config)
    elapsed_ms = (time.perf_counter() - start) * 1e3
    return result, elapsed_ms
