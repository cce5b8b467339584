import numpy as np
import pytest

from spinestitch import ConfigError, FeatureMapMismatch, parse_config
from spinestitch import io as sio
from spinestitch.config import PipelineConfig


class TestImageIO:
    def test_sixteen_bit_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.uniform(0, 1, (20, 24))
        path = tmp_path / "img.png"
        sio.save_image(path, img)
        back = sio.load_image(path)
        assert back.shape == img.shape
        assert np.abs(back - img).max() <= 0.5 / 65535 + 1e-9

    def test_eight_bit_png_loads_normalized(self, tmp_path):
        from PIL import Image as PILImage

        arr = np.arange(0, 256, dtype=np.uint8).reshape(16, 16)
        path = tmp_path / "gray8.png"
        PILImage.fromarray(arr, mode="L").save(path)
        img = sio.load_image(path)
        assert img.min() == 0.0 and img.max() == 1.0

    def test_rgb_converted_by_channel_average(self, tmp_path):
        from PIL import Image as PILImage

        rgb = np.zeros((4, 4, 3), dtype=np.uint8)
        rgb[..., 0] = 30
        rgb[..., 1] = 60
        rgb[..., 2] = 90
        path = tmp_path / "rgb.png"
        PILImage.fromarray(rgb, mode="RGB").save(path)
        img = sio.load_image(path)
        assert np.allclose(img, 60.0 / 255.0)

    def test_mask_round_trip_small_and_large_labels(self, tmp_path):
        mask = np.zeros((10, 10), dtype=np.int64)
        mask[2:4, 2:4] = 1
        mask[6:8, 6:8] = 2
        p = tmp_path / "m.png"
        sio.save_mask(p, mask)
        assert np.array_equal(sio.load_mask(p), mask)

        big = np.zeros((6, 6), dtype=np.int64)
        big[0, 0] = 300
        p2 = tmp_path / "m16.png"
        sio.save_mask(p2, big)
        assert np.array_equal(sio.load_mask(p2), big)


class TestFeatureMapFile:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        stack = rng.normal(0, 3, (5, 9, 7)).astype(np.float32).astype(np.float64)
        path = tmp_path / "f.ssfm"
        sio.save_feature_map(path, stack)
        back = sio.load_feature_map(path)
        assert back.shape == (5, 9, 7)
        assert np.array_equal(back, stack)

    def test_extent_check(self, tmp_path):
        path = tmp_path / "f.ssfm"
        sio.save_feature_map(path, np.zeros((2, 8, 8)))
        with pytest.raises(FeatureMapMismatch):
            sio.load_feature_map(path, expect_shape=(9, 9))

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ssfm"
        path.write_bytes(b"NOPE" + b"\x00" * 20)
        with pytest.raises(OSError):
            sio.load_feature_map(path)


class TestConfig:
    def test_defaults(self):
        cfg = parse_config("")
        assert cfg == PipelineConfig()

    def test_parses_all_keys(self):
        text = """
        # registration
        tol_energy = 1e-5
        max_iters = 50
        gate_radius_fraction = 0.3
        allow_projective = false
        lambda_color = 2.0
        lambda_grad = 0.5
        lambda_feat = 0
        seam_axis = horizontal
        feature_source = builtin
        k = 1.5
        band = 16
        exact_order = true
        reference_override = 2
        """
        cfg = parse_config(text)
        assert cfg.tol_energy == 1e-5
        assert cfg.max_iters == 50
        assert cfg.allow_projective is False
        assert cfg.lambda_feat == 0.0
        assert cfg.seam_axis == "horizontal"
        assert cfg.blend_k == 1.5 and cfg.blend_band == 16.0
        assert cfg.exact_order is True
        assert cfg.reference_override == 2

    def test_unknown_key_is_error(self):
        with pytest.raises(ConfigError):
            parse_config("lambda_colour = 1.0")

    def test_malformed_line_is_error(self):
        with pytest.raises(ConfigError):
            parse_config("tol_energy")

    def test_bad_value_type_is_error(self):
        with pytest.raises(ConfigError):
            parse_config("max_iters = soon")

    def test_all_zero_weights_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("lambda_color = 0\nlambda_grad = 0\nlambda_feat = 0")

    def test_config_round_trips_to_pipeline_pieces(self):
        cfg = parse_config("k = 2.0\nband = 8\nmax_iters = 7")
        assert cfg.blend().k == 2.0
        assert cfg.registration().max_iters == 7
        assert cfg.weights().lambda_color == 1.0


class TestTruthDirectory:
    def test_write_and_read_back(self, tmp_path):
        from spinestitch import SynthSpec, generate

        spec = SynthSpec(resolution=256, n_slices=2, overlap_fraction=0.5,
                         n_screws_per_slice=6, warp_kind="translation", seed=20)
        truth = generate(spec)
        sio.write_truth(tmp_path / "out", truth)
        manifest, pano, slices, masks, hs = sio.read_truth(tmp_path / "out")
        assert manifest["true_order"] == truth.true_order
        assert len(slices) == 2 and len(masks) == 2
        assert pano.shape == truth.panorama.shape
        assert np.abs(pano - truth.panorama).max() <= 0.5 / 65535 + 1e-9
        for a, b in zip(hs, truth.true_h):
            assert np.allclose(a, b)
        for m_read, m_true in zip(masks, truth.masks):
            assert np.array_equal(m_read, m_true)
