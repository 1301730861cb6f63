import numpy as np
import pytest

import grvs


def test_depth_schedule_is_uniform_in_inverse_depth():
    assert grvs.depth_schedule(1.0, 3.0, 3) == pytest.approx([1.0, 1.5, 3.0], abs=1e-12)
    with pytest.raises(grvs.GeometryError):
        grvs.depth_schedule(1.0, 1.0, 3)


def test_project_backproject_round_trip():
    cam = grvs.look_at([4.0, 1.0, 2.0], [0.0, 0.0, 0.5], 64.0, 64, 48)
    x = grvs.backproject(cam, 10.5, 20.25, 3.0)
    u, v, z = grvs.project(cam, x)
    assert (u, v, z) == pytest.approx((10.5, 20.25, 3.0), abs=1e-9)


def test_identity_warp():
    cam = grvs.look_at([4.0, 0.0, 1.0], [0.0, 0.0, 0.5], 32.0, 16, 12)
    u, v = grvs.plane_warp_grid(cam, cam, 2.5)
    assert u.shape == (12, 16)
    np.testing.assert_allclose(u, np.tile(np.arange(16.0), (12, 1)), atol=1e-9)
    np.testing.assert_allclose(v, np.tile(np.arange(12.0)[:, None], (1, 16)), atol=1e-9)


def test_metrics():
    a = np.full((3, 16, 16), 0.6, np.float32)
    b = np.full((3, 16, 16), 0.5, np.float32)
    assert grvs.psnr(a, b) == pytest.approx(20.0, abs=1e-5)
    rng = np.random.default_rng(0)
    c = rng.random((3, 20, 20), dtype=np.float32)
    assert grvs.ssim(c, c) == 1.0
    mask = np.zeros((20, 20), np.uint8)
    mask[5:15, 5:15] = 1
    assert grvs.psnr(c, c, mask) == 99.0


def test_render_scene():
    cfg = grvs.default_scene_config(width=24, height=24, frames=5, supersample=1)
    cams = grvs.scene_cameras(3, cfg)
    assert len(cams) == 5
    out = grvs.render(3, cams[0], 1, cfg)
    assert out["frame"].shape == (3, 24, 24)
    assert out["depth"].shape == (24, 24)
    assert 0.0 <= out["frame"].min() and out["frame"].max() <= 1.0
    assert (out["depth"] > 0).all()
    assert out["dyn_mask"].dtype == np.uint8


def test_model_parameter_count_grows_with_channels():
    small = grvs.parameter_count(grvs.default_model_config(C=4))
    large = grvs.parameter_count(grvs.default_model_config(C=8))
    assert 0 < small < large


def test_cli_gen_data(tmp_path):
    code, out, err = grvs.run_cli("gen-data", "--out", tmp_path / "d", "--scenes", "1",
                                  "--frames", "3", "--set", "scene.width=16",
                                  "--set", "scene.height=16")
    assert code == 0, err
    assert (tmp_path / "d" / "manifest.json").exists()
    code, _, _ = grvs.run_cli("train", "--data", tmp_path / "missing", "--out", tmp_path / "m")
    assert code == 3
