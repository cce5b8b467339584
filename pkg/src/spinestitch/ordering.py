"""Recover the stitching order of an unordered image set.

Each image is a node; the pairwise registration energy is the directed edge
weight. A correctly ordered sequence minimizes the cumulative energy along
consecutive pairs, so ordering reduces to a minimum-weight open path: the
greedy builder (default) grows the path from the cheapest edge, the
exhaustive builder guarantees the optimum for small sets and doubles as the
greedy's test oracle.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .exceptions import (
    AmbiguousOrientation,
    DisconnectedSet,
    OrderingError,
    RegistrationError,
    TooManyImages,
)
from .register import RegistrationConfig, register_pair

EXACT_ORDER_LIMIT = 10


@dataclass
class PairwiseEnergyMatrix:
    """Directed pairwise registration outcomes for n images.

    ``energy[i, j]`` is the alignment energy of registering image j onto
    image i (+inf for pairs whose registration failed), ``homographies[i][j]``
    the corresponding transform (None on failure), ``results`` the full
    registration records and ``failures`` the caught registration errors.
    """

    n: int
    energy: np.ndarray
    homographies: list
    results: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)


@dataclass
class StitchPlan:
    """Chain order plus per-image transforms into the reference frame."""

    order: list
    reference: int
    chained: list  # indexed by image index; identity for the reference

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError("order is not a permutation of image indices")
        if self.order[0] != self.reference:
            raise ValueError("reference must lead the order")


def build_energy_matrix(centroid_sets, bounds=None, config=None):
    """All-pairs registration; failed pairs become +inf sentinel entries."""
    n = len(centroid_sets)
    if n < 2:
        raise ValueError("need at least two images to order")
    cfg = config or RegistrationConfig()
    energy = np.full((n, n), np.inf)
    homographies = [[None] * n for _ in range(n)]
    results = [[None] * n for _ in range(n)]
    failures = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            try:
                res = register_pair(centroid_sets[i], centroid_sets[j], bounds=bounds, config=cfg)
            except RegistrationError as exc:
                failures[(i, j)] = exc
                continue
            energy[i, j] = res.energy
            homographies[i][j] = res.h
            results[i][j] = res
    return PairwiseEnergyMatrix(
        n=n, energy=energy, homographies=homographies, results=results, failures=failures
    )


def order_greedy(matrix):
    """Grow an open path greedily from the globally cheapest edge.

    The path starts at the ordered pair with minimum energy and is extended
    one node at a time from whichever end currently offers the cheapest
    outgoing edge to an unvisited node (edge direction follows the
    traversal). Sentinel edges are never taken; if both ends see only
    sentinels the set does not form a single chain.
    """
    e = matrix.energy
    n = matrix.n
    if n < 2:
        raise ValueError("need at least two images")
    masked = e.copy()
    np.fill_diagonal(masked, np.inf)
    if not np.isfinite(masked).any():
        raise DisconnectedSet("no image pair registered successfully")
    start = np.unravel_index(np.argmin(masked), masked.shape)
    path = [int(start[0]), int(start[1])]
    visited = set(path)
    while len(path) < n:
        head, tail = path[0], path[-1]
        best = None  # (energy, at_tail, node)
        for node in range(n):
            if node in visited:
                continue
            if np.isfinite(e[tail, node]):
                cand = (float(e[tail, node]), True, node)
                if best is None or cand < best:
                    best = cand
            if np.isfinite(e[node, head]):
                # Extending at the head means traversing node -> head.
                cand = (float(e[node, head]), False, node)
                if best is None or cand < best:
                    best = cand
        if best is None:
            raise DisconnectedSet(
                f"chain stuck at {{{path[0]}, {path[-1]}}} with only failed pairs remaining"
            )
        _, at_tail, node = best
        if at_tail:
            path.append(node)
        else:
            path.insert(0, node)
        visited.add(node)
    return path


def order_exact(matrix):
    """Exhaustive minimum-cumulative-energy order (n <= 10).

    Ties break toward the lexicographically smallest permutation, which
    falls out of scanning permutations in lexicographic order with a strict
    improvement test.
    """
    n = matrix.n
    if n > EXACT_ORDER_LIMIT:
        raise TooManyImages(f"exhaustive ordering supports n <= {EXACT_ORDER_LIMIT}, got {n}")
    if n < 2:
        raise ValueError("need at least two images")
    e = matrix.energy
    best_perm = None
    best_cost = np.inf
    for perm in itertools.permutations(range(n)):
        cost = 0.0
        feasible = True
        for a, b in zip(perm, perm[1:]):
            step = e[a, b]
            if not np.isfinite(step):
                feasible = False
                break
            cost += step
            if cost >= best_cost:
                feasible = False
                break
        if feasible and cost < best_cost:
            best_cost = cost
            best_perm = list(perm)
    if best_perm is None:
        raise DisconnectedSet("no permutation traverses only registered pairs")
    return best_perm


def path_cost(matrix, order):
    """Cumulative directed energy along consecutive pairs of ``order``."""
    return float(sum(matrix.energy[a, b] for a, b in zip(order, order[1:])))


def pick_reference_and_chain(matrix, order, reference_override=None):
    """Orient the chain, pick the topmost image and accumulate transforms.

    The reference is the chain end from which subsequent images move
    downward on average (positive mean vertical translation of the
    consecutive pairwise transforms, image y growing downward). If the mean
    vertical motion is under one pixel the orientation is ambiguous and the
    caller must supply ``reference_override`` (one of the chain ends).
    """
    order = list(order)
    if reference_override is not None:
        if reference_override == order[0]:
            pass
        elif reference_override == order[-1]:
            order = order[::-1]
        else:
            raise OrderingError(
                f"reference override {reference_override} is not an endpoint of the chain {order}"
            )
    else:
        dys = []
        for a, b in zip(order, order[1:]):
            h = matrix.homographies[a][b]
            if h is None:
                raise DisconnectedSet(f"consecutive pair ({a}, {b}) has no registration")
            dys.append(h[1, 2] / h[2, 2])
        mean_dy = float(np.mean(dys))
        if abs(mean_dy) < 1.0:
            raise AmbiguousOrientation(
                "mean vertical displacement below one pixel; pass an explicit reference"
            )
        if mean_dy < 0:
            order = order[::-1]

    chained = [None] * matrix.n
    chained[order[0]] = geometry.identity()
    for a, b in zip(order, order[1:]):
        h = matrix.homographies[a][b]
        if h is None:
            raise DisconnectedSet(f"consecutive pair ({a}, {b}) has no registration")
        chained[b] = geometry.compose(chained[a], h)
    return StitchPlan(order=order, reference=order[0], chained=chained)
