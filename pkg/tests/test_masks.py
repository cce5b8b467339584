import numpy as np
import pytest

from spinestitch import connected_components, extract_centroids, fallback_segment


def test_all_zero_mask_stays_empty():
    out = connected_components(np.zeros((10, 10), dtype=int))
    assert out.max() == 0


def test_two_squares_get_two_labels():
    binary = np.zeros((20, 20), dtype=int)
    binary[2:7, 2:7] = 1
    binary[10:15, 12:17] = 1
    out = connected_components(binary)
    assert sorted(np.unique(out)) == [0, 1, 2]
    assert (out == 1).sum() == 25 and (out == 2).sum() == 25


def test_min_area_removes_small_components():
    binary = np.zeros((10, 10), dtype=int)
    binary[1, 1:4] = 1
    out = connected_components(binary, min_area=10)
    assert out.max() == 0


def test_labels_follow_scan_order():
    binary = np.zeros((10, 10), dtype=int)
    binary[6:8, 1:3] = 1   # lower-left, later in scan order
    binary[0:2, 5:7] = 1   # top, first in scan order
    out = connected_components(binary)
    assert out[0, 5] == 1
    assert out[6, 1] == 2


def test_diagonal_neck_stays_one_component():
    binary = np.zeros((5, 5), dtype=int)
    binary[0, 0] = binary[1, 1] = binary[2, 2] = 1
    out = connected_components(binary)
    assert out.max() == 1


def test_idempotent_after_rebinarization():
    rng = np.random.default_rng(0)
    binary = (rng.uniform(0, 1, (30, 30)) > 0.7).astype(int)
    once = connected_components(binary, min_area=3)
    twice = connected_components((once > 0).astype(int), min_area=3)
    assert np.array_equal(once, twice)


def test_component_count_monotone_in_min_area():
    rng = np.random.default_rng(1)
    binary = (rng.uniform(0, 1, (40, 40)) > 0.65).astype(int)
    counts = [connected_components(binary, min_area=a).max() for a in (1, 2, 4, 8, 16)]
    assert all(c1 >= c2 for c1, c2 in zip(counts, counts[1:]))


def test_single_pixel_centroid():
    mask = np.zeros((12, 12), dtype=int)
    mask[9, 7] = 1
    assert np.allclose(extract_centroids(mask), [[7.0, 9.0]])


def test_square_centroid_by_symmetry():
    mask = np.zeros((6, 6), dtype=int)
    mask[0:3, 0:3] = 1
    assert np.allclose(extract_centroids(mask), [[1.0, 1.0]])


def test_l_shape_centroid():
    # pixels (0,0), (1,0), (0,1): mean x = 1/3, mean y = 1/3
    mask = np.zeros((4, 4), dtype=int)
    mask[0, 0] = mask[0, 1] = mask[1, 0] = 1
    assert np.allclose(extract_centroids(mask), [[1 / 3, 1 / 3]])


def test_centroids_translate_with_mask():
    rng = np.random.default_rng(2)
    mask = np.zeros((40, 40), dtype=int)
    mask[4:9, 6:12] = 1
    mask[20:26, 25:30] = 2
    base = extract_centroids(mask)
    dx, dy = 7, 5
    shifted = np.zeros_like(mask)
    shifted[dy:, dx:] = mask[:-dy, :-dx]
    moved = extract_centroids(shifted)
    assert np.allclose(moved - base, [[dx, dy], [dx, dy]])


def test_non_contiguous_labels_rejected():
    mask = np.zeros((5, 5), dtype=int)
    mask[0, 0] = 2
    with pytest.raises(ValueError):
        extract_centroids(mask)


def test_fallback_segment_uniform_below_threshold():
    img = np.full((16, 16), 0.2)
    assert fallback_segment(img, threshold=0.5, min_area=1).max() == 0


def test_fallback_segment_zero_threshold_is_one_component():
    rng = np.random.default_rng(3)
    img = rng.uniform(0.1, 0.9, (16, 16))
    out = fallback_segment(img, threshold=0.0, min_area=1)
    assert out.max() == 1
    assert (out == 1).all()


def test_fallback_segment_finds_bright_blobs():
    img = np.full((40, 40), 0.3)
    ys, xs = np.mgrid[0:40, 0:40]
    img[(xs - 10) ** 2 + (ys - 10) ** 2 <= 16] = 0.95
    img[(xs - 30) ** 2 + (ys - 28) ** 2 <= 16] = 0.9
    out = fallback_segment(img, threshold=0.7, min_area=5)
    assert out.max() == 2
