import itertools

import numpy as np
import pytest

from spinestitch import (
    AmbiguousOrientation,
    DisconnectedSet,
    SynthSpec,
    TooManyImages,
    build_energy_matrix,
    compose,
    extract_centroids,
    generate,
    order_exact,
    order_greedy,
    pick_reference_and_chain,
    translation,
)
from spinestitch.ordering import PairwiseEnergyMatrix, path_cost


def matrix_from_energies(e, homographies=None):
    n = e.shape[0]
    if homographies is None:
        homographies = [[None if i == j else np.eye(3) for j in range(n)] for i in range(n)]
    return PairwiseEnergyMatrix(n=n, energy=e, homographies=homographies)


def random_matrix(rng, n):
    e = rng.uniform(1.0, 100.0, (n, n))
    np.fill_diagonal(e, np.inf)
    return matrix_from_energies(e)


def brute_force_best(e):
    n = e.shape[0]
    best, cost = None, np.inf
    for perm in itertools.permutations(range(n)):
        c = sum(e[a, b] for a, b in zip(perm, perm[1:]))
        if c < cost:
            best, cost = list(perm), c
    return best, cost


class TestGreedy:
    def test_two_images(self):
        e = np.array([[np.inf, 3.0], [5.0, np.inf]])
        assert order_greedy(matrix_from_energies(e)) == [0, 1]

    def test_chain_with_clear_adjacency(self):
        # 5 nodes in a line: adjacent cost 1, distance-k cost k*10
        n = 5
        e = np.full((n, n), np.inf)
        for i in range(n):
            for j in range(n):
                if i != j:
                    d = abs(i - j)
                    e[i, j] = 1.0 if d == 1 else 10.0 * d
        order = order_greedy(matrix_from_energies(e))
        assert order in ([0, 1, 2, 3, 4], [4, 3, 2, 1, 0])

    def test_all_sentinel_raises(self):
        e = np.full((3, 3), np.inf)
        with pytest.raises(DisconnectedSet):
            order_greedy(matrix_from_energies(e))

    def test_disconnected_blocks_raise(self):
        e = np.full((4, 4), np.inf)
        e[0, 1] = e[1, 0] = 1.0
        e[2, 3] = e[3, 2] = 1.0
        with pytest.raises(DisconnectedSet):
            order_greedy(matrix_from_energies(e))

    def test_cost_invariant_under_relabeling(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            m = random_matrix(rng, 6)
            base = path_cost(m, order_greedy(m))
            perm = rng.permutation(6)
            shuffled = matrix_from_energies(m.energy[np.ix_(perm, perm)])
            cost = path_cost(shuffled, order_greedy(shuffled))
            assert cost == pytest.approx(base)


class TestExact:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        for n in (3, 4, 5, 6):
            m = random_matrix(rng, n)
            expected, cost = brute_force_best(m.energy)
            got = order_exact(m)
            assert path_cost(m, got) == pytest.approx(cost)
            assert got == expected

    def test_tie_breaks_lexicographically(self):
        e = np.ones((3, 3))
        np.fill_diagonal(e, np.inf)
        assert order_exact(matrix_from_energies(e)) == [0, 1, 2]

    def test_never_worse_than_greedy(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            m = random_matrix(rng, 6)
            assert path_cost(m, order_exact(m)) <= path_cost(m, order_greedy(m)) + 1e-12

    def test_rejects_large_sets(self):
        m = random_matrix(np.random.default_rng(0), 11)
        with pytest.raises(TooManyImages):
            order_exact(m)


class TestReferenceAndChain:
    def two_image_matrix(self, dy):
        h01 = translation(0.0, dy)   # image 1 -> image 0 frame
        h10 = translation(0.0, -dy)
        e = np.array([[np.inf, 1.0], [1.0, np.inf]])
        return matrix_from_energies(e, [[None, h01], [h10, None]])

    def test_downward_neighbor_selects_first_as_reference(self):
        m = self.two_image_matrix(40.0)
        plan = pick_reference_and_chain(m, [0, 1])
        assert plan.reference == 0
        assert np.allclose(plan.chained[1], translation(0, 40))

    def test_orientation_flips_when_motion_is_upward(self):
        m = self.two_image_matrix(-40.0)
        plan = pick_reference_and_chain(m, [0, 1])
        assert plan.reference == 1
        assert plan.order == [1, 0]

    def test_identity_homographies_ambiguous(self):
        m = self.two_image_matrix(0.0)
        with pytest.raises(AmbiguousOrientation):
            pick_reference_and_chain(m, [0, 1])

    def test_override_resolves_ambiguity(self):
        m = self.two_image_matrix(0.0)
        plan = pick_reference_and_chain(m, [0, 1], reference_override=1)
        assert plan.reference == 1 and plan.order == [1, 0]

    def test_chain_satisfies_cocycle(self):
        rng = np.random.default_rng(9)
        n = 4
        hs = [[None] * n for _ in range(n)]
        e = np.full((n, n), np.inf)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                h = np.eye(3)
                h[:2, 2] = rng.uniform(5, 40, 2)
                hs[i][j] = h
                e[i, j] = 1.0
        m = matrix_from_energies(e, hs)
        order = [2, 0, 3, 1]
        plan = pick_reference_and_chain(m, order)
        o = plan.order
        for prev, nxt in zip(o, o[1:]):
            expected = compose(plan.chained[prev], m.homographies[prev][nxt])
            assert np.allclose(plan.chained[nxt], expected, atol=1e-9)


class TestOnSyntheticChains:
    def test_energy_matrix_separates_adjacency(self):
        spec = SynthSpec(resolution=256, n_slices=3, overlap_fraction=0.5,
                         n_screws_per_slice=6, warp_kind="translation", seed=3)
        truth = generate(spec)
        sets = [extract_centroids(m) for m in truth.masks]
        m = build_energy_matrix(sets, bounds=(256, 256))
        ranks = {img: truth.true_order.index(img) for img in range(3)}
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                if abs(ranks[i] - ranks[j]) == 1:
                    assert m.energy[i, j] < 1e-6
                else:
                    assert m.energy[i, j] > 1.0 or not np.isfinite(m.energy[i, j])

    def test_recovers_generated_order(self):
        hits = 0
        for seed in range(10):
            spec = SynthSpec(resolution=256, n_slices=5, overlap_fraction=0.5,
                             n_screws_per_slice=6, warp_kind="translation", seed=seed)
            truth = generate(spec)
            sets = [extract_centroids(m) for m in truth.masks]
            m = build_energy_matrix(sets, bounds=(256, 256))
            greedy = order_greedy(m)
            exact = order_exact(m)
            assert path_cost(m, exact) <= path_cost(m, greedy) + 1e-12
            if greedy in (truth.true_order, truth.true_order[::-1]):
                hits += 1
        assert hits >= 9
