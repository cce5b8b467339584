import numpy as np
import pytest

from spinestitch import (
    DegenerateConfiguration,
    EmptyOverlap,
    NoValidMatches,
    RegistrationConfig,
    align_energy,
    apply_homography,
    compose,
    estimate_transform,
    identity,
    invert,
    make_centroid_pair,
    register_pair,
    translation,
)

CORNERS = np.array([[0, 0], [511, 0], [511, 511], [0, 511]], dtype=float)


class TestAlignEnergy:
    def test_identical_sets_zero(self):
        pts = np.array([[10.0, 20.0], [30.0, 40.0], [52.0, 7.0]])
        assert align_energy(pts, pts, identity()) == 0.0

    def test_single_three_four_five(self):
        assert align_energy([[0.0, 0.0]], [[3.0, 4.0]], identity()) == pytest.approx(25.0)

    def test_two_point_nearest_neighbor_sum(self):
        c1 = [[0.0, 0.0], [10.0, 0.0]]
        c2 = [[1.0, 0.0], [9.0, 0.0]]
        assert align_energy(c1, c2, identity()) == pytest.approx(2.0)

    def test_exhaustive_nearest_neighbor_agreement(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            c1 = rng.uniform(0, 100, (6, 2))
            c2 = rng.uniform(0, 100, (5, 2))
            expected = sum(min(np.sum((q - p) ** 2) for p in c1) for q in c2)
            assert align_energy(c1, c2, identity()) == pytest.approx(expected)

    def test_overlap_only_excludes_outsiders(self):
        c1 = [[5.0, 5.0]]
        c2 = [[5.0, 5.0], [500.0, 500.0]]
        full = align_energy(c1, c2, identity())
        only = align_energy(c1, c2, identity(), bounds=(64, 64), overlap_only=True)
        assert only == pytest.approx(0.0)
        assert full > only

    def test_empty_overlap_raises(self):
        with pytest.raises(EmptyOverlap):
            align_energy([[5.0, 5.0]], [[900.0, 900.0]], identity(), bounds=(64, 64), overlap_only=True)

    def test_nonnegative_and_zero_iff_coincident(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            c1 = rng.uniform(0, 50, (4, 2))
            energy = align_energy(c1, c1 + rng.uniform(0.1, 1.0, (4, 2)), identity())
            assert energy > 0.0


class TestEstimateTransform:
    def test_translation_exact(self):
        src = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]])
        dst = src + [5.0, -2.0]
        assert np.allclose(estimate_transform(src, dst, "translation"), translation(5, -2))

    def test_projective_recovers_known_h(self):
        h_true = np.array([[1.02, 0.01, 3.0], [-0.03, 0.98, -4.0], [1e-4, -5e-5, 1.0]])
        src = np.array([[0.0, 0.0], [100.0, 0.0], [100.0, 100.0], [0.0, 100.0], [37.0, 62.0]])
        dst = apply_homography(h_true, src)
        h = estimate_transform(src, dst, "projective")
        assert np.allclose(h, h_true, atol=1e-6)

    def test_collinear_points_degenerate_for_projective(self):
        src = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        with pytest.raises(DegenerateConfiguration):
            estimate_transform(src, src + [1.0, 0.0], "projective")

    def test_collinear_points_degenerate_for_affine(self):
        src = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        with pytest.raises(DegenerateConfiguration):
            estimate_transform(src, src + [1.0, 2.0], "affine")

    def test_too_few_pairs_rejected(self):
        src = np.array([[0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(DegenerateConfiguration):
            estimate_transform(src, src, "affine")

    @pytest.mark.parametrize("kind", ["translation", "similarity", "affine", "projective"])
    def test_exact_on_noiseless_pairs(self, kind):
        rng = np.random.default_rng(5)
        theta = 0.04
        h_true = {
            "translation": translation(7.0, -3.0),
            "similarity": np.array(
                [
                    [1.05 * np.cos(theta), -1.05 * np.sin(theta), 4.0],
                    [1.05 * np.sin(theta), 1.05 * np.cos(theta), -2.0],
                    [0.0, 0.0, 1.0],
                ]
            ),
            "affine": np.array([[1.1, 0.08, 3.0], [-0.02, 0.95, 5.0], [0.0, 0.0, 1.0]]),
            "projective": np.array([[1.02, 0.03, 2.0], [0.01, 0.99, -1.0], [1e-4, 2e-4, 1.0]]),
        }[kind]
        src = rng.uniform(0, 200, (8, 2))
        dst = apply_homography(h_true, src)
        h = estimate_transform(src, dst, kind)
        residual = apply_homography(h, src) - dst
        assert np.abs(residual).max() < 1e-9


class TestRegisterPair:
    def test_identical_single_centroid(self):
        pts = np.array([[25.0, 30.0]])
        res = register_pair(pts, pts)
        assert res.model_kind == "translation"
        assert res.energy == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(res.h, identity(), atol=1e-9)

    def test_recovers_pure_translation(self):
        rng = np.random.default_rng(2)
        c1 = rng.uniform(50, 450, (6, 2))
        c2 = c1 - [0.0, 40.0]
        res = register_pair(c1, c2, bounds=(512, 512))
        assert np.abs(res.h - translation(0, 40)).max() < 1e-6
        assert res.energy < 1e-9

    @pytest.mark.parametrize("kind", ["translation", "similarity", "affine", "projective"])
    def test_recovers_battery_transforms(self, kind):
        tol = 1.0 if kind == "projective" else 0.5
        for seed in range(5):
            c1, c2, h_true, bounds = make_centroid_pair(kind, seed)
            res = register_pair(c1, c2, bounds=bounds)
            err = np.abs(
                apply_homography(res.h, CORNERS) - apply_homography(h_true, CORNERS)
            ).max()
            assert err < tol

    def test_energy_history_non_increasing(self):
        for seed in range(8):
            c1, c2, _, bounds = make_centroid_pair("affine", seed)
            res = register_pair(c1, c2, bounds=bounds)
            hist = np.asarray(res.energy_history)
            assert np.all(np.diff(hist) <= 0)
            assert res.energy == hist[-1]

    def test_no_valid_matches_far_apart(self):
        c1 = np.array([[256.0, 256.0]])
        c2 = np.array([[50.0, 50.0], [462.0, 462.0]])
        with pytest.raises(NoValidMatches):
            register_pair(c1, c2, bounds=(512, 512))

    def test_translation_equivariance(self):
        c1, c2, _, _ = make_centroid_pair("similarity", 11)
        base = register_pair(c1, c2)
        offset = np.array([37.5, -12.25])
        moved = register_pair(c1 + offset, c2 + offset)
        assert abs(base.energy - moved.energy) < 1e-9

    def test_allow_projective_false_caps_model(self):
        c1, c2, _, bounds = make_centroid_pair("projective", 3)
        res = register_pair(c1, c2, bounds=bounds, config=RegistrationConfig(allow_projective=False))
        assert res.model_kind in ("translation", "similarity", "affine")

    def test_empty_sets_rejected(self):
        with pytest.raises(ValueError):
            register_pair(np.zeros((0, 2)), np.array([[1.0, 2.0]]))


def test_battery_true_transform_consistency():
    # make_centroid_pair's own contract: c1 equals true_h applied to the
    # shared part of c2, all inside bounds.
    c1, c2, h_true, bounds = make_centroid_pair("projective", 21)
    shared = apply_homography(h_true, c2[: len(c1)])
    assert np.allclose(shared, c1, atol=1e-9)
    assert (c1 >= 0).all() and (c1 <= bounds[0] - 1).all()
    back = apply_homography(invert(h_true), c1)
    assert np.allclose(compose(h_true, invert(h_true)), np.eye(3), atol=1e-9)
    assert (back >= 0).all()
