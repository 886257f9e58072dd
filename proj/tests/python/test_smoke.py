# Copyright 2026 The vawm Authors
# SPDX-License-Identifier: Apache-2.0

import math

import numpy as np
import pytest

import vawm


def test_pdms_formula():
    assert vawm.pdms(1, 1, 1, 1, 1) == 1.0
    assert vawm.pdms(0, 1, 1, 1, 1) == 0.0
    assert vawm.pdms(1, 1, 0, 1, 0.5) == pytest.approx((2.5 + 2) / 12)
    with pytest.raises(ValueError):
        vawm.pdms(0.5, 1, 1, 1, 1)


def test_interpolate_endpoints():
    y0 = np.array([1.0, -2.0, 3.0])
    eps = np.array([0.5, 0.5, -1.0])
    ys, v = vawm.interpolate(y0, eps, 0.0)
    np.testing.assert_array_equal(ys, eps)
    np.testing.assert_array_equal(v, y0 - eps)
    ys, _ = vawm.interpolate(y0, eps, 1.0)
    np.testing.assert_array_equal(ys, y0)


def test_umeyama_recovers_similarity():
    rng = np.random.default_rng(0)
    src = rng.normal(size=(9, 2))
    th = 0.4
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    dst = 2.5 * src @ rot.T + np.array([1.0, -3.0])
    r = vawm.umeyama_align(src, dst)
    assert r["scale"] == pytest.approx(2.5, abs=1e-9)
    assert r["rotation"] == pytest.approx(th, abs=1e-9)
    assert r["rms"] < 1e-9
    assert vawm.avg_l2(r["aligned"], dst) < 1e-9
    with pytest.raises(ValueError):
        vawm.avg_l2(src, dst[:3])


def test_episode_layout_and_registration():
    ep = vawm.simulate_episode("A", seed=3, duration=3.0)
    frames = ep["frames"]
    assert frames.shape[1:] == (32, 32)
    assert frames.shape[0] == ep["states"].shape[0] == len(ep["commands"])
    assert ep["expert_actions"].shape[1:] == (8, 3)
    dx, dy, dyaw = vawm.register_pair(frames[0], frames[0])
    assert (dx, dy, dyaw) == (0.0, 0.0, 0.0)


def test_expert_fleet_and_config_hash():
    r = vawm.eval_expert("A", n=3, duration=4.0)
    assert r["scenarios"] + r["skipped"] == 3
    assert r["nc"] == 1.0
    cfg = vawm.default_config()
    assert len(vawm.config_hash(cfg)) == 16


def test_tiny_training_roundtrip(tmp_path):
    cfg = vawm.default_config()
    cfg["model"].update({"d": 16, "layers": 1, "heads": 2, "time_features": 8, "ff_mult": 2})
    cfg["codec"]["epochs"] = 1
    cfg["train"].update({"steps": 5, "batch": 4, "warmup_steps": 1})
    cfg["data"]["duration"] = 4.0
    model, curve = vawm.train(cfg, episodes=2)
    assert len(curve) == 5 and all(math.isfinite(x) for x in curve)
    path = tmp_path / "m.dvck"
    model.save(str(path))
    again = vawm.Model(str(path))
    assert again.parameter_hash == model.parameter_hash
    ol = again.eval_open("A", episodes=1, inject_gt=True)
    assert ol["l2_avg"] == 0.0
    rec = again.reconstruct(np.zeros((32, 32), dtype=np.float32))
    assert rec.shape == (32, 32)
