import numpy as np
import pytest

from splatstego.attacks import AttackConfig, add_sh_noise, apply, prune_random, prune_sequential
from splatstego.scene import GaussianScene, logit

from conftest import random_scene


def _with_opacity(alpha):
    s = random_scene(len(alpha), 1)
    return s.with_opacities(logit(np.asarray(alpha)))


def test_sequential_removes_lowest_opacity():
    s = _with_opacity([0.9, 0.1, 0.5, 0.7])
    out = prune_sequential(s, 0.25)
    assert out.count == 3
    np.testing.assert_array_equal(out.positions, s.positions[[0, 2, 3]])


def test_sequential_ties_break_by_index():
    s = _with_opacity([0.3, 0.3, 0.3, 0.3])
    out = prune_sequential(s, 0.5)
    np.testing.assert_array_equal(out.positions, s.positions[[2, 3]])


@pytest.mark.parametrize("ratio", [0.05, 0.10, 0.15, 0.25])
def test_sequential_ratios_preserve_order(ratio):
    s = random_scene(200, 2)
    out = prune_sequential(s, ratio)
    assert out.count == 200 - int(np.floor(ratio * 200))
    idx = [int(np.flatnonzero((s.positions == p).all(1))[0]) for p in out.positions]
    assert idx == sorted(idx)
    dropped = np.setdiff1d(np.arange(200), idx)
    assert s.raw_opacities[dropped].max() <= s.raw_opacities[idx].min()


def test_zero_ratio_is_identity(scene):
    assert prune_sequential(scene, 0.0) == scene
    assert prune_random(scene, 0.0, 3) == scene


def test_ratio_must_be_below_one(scene):
    with pytest.raises(ValueError):
        prune_sequential(scene, 1.0)
    with pytest.raises(ValueError):
        prune_random(scene, 1.5)


def test_random_prune_is_seeded(scene):
    a = prune_random(scene, 0.3, seed=4)
    assert a == prune_random(scene, 0.3, seed=4)
    assert a.count == scene.count - int(np.floor(0.3 * scene.count))
    assert not a == prune_random(scene, 0.3, seed=5)


def test_noise_touches_only_sh(scene):
    out = add_sh_noise(scene, 0.01, seed=0)
    for name in ("positions", "rotations", "log_scales", "raw_opacities", "normals"):
        assert getattr(out, name).tobytes() == getattr(scene, name).tobytes()
    assert not np.array_equal(out.sh, scene.sh)


def test_noise_statistics():
    n = 10**6 // 48 + 1
    s = GaussianScene(np.zeros((n, 3)), np.ones((n, 4)), np.zeros((n, 3)), np.zeros(n), np.zeros((n, 16, 3)))
    sigma = 0.01
    noise = add_sh_noise(s, sigma, seed=1).sh.astype(np.float64)
    assert noise.size >= 10**6
    assert abs(noise.mean()) <= 3 * sigma / 1e3
    assert noise.std() == pytest.approx(sigma, rel=0.01)


def test_noise_requires_positive_sigma(scene):
    with pytest.raises(ValueError):
        add_sh_noise(scene, 0.0)


def test_attack_config_validation():
    with pytest.raises(ValueError):
        AttackConfig("seq-prune")
    with pytest.raises(ValueError):
        AttackConfig("seq-prune", ratio=0.1, sigma=0.1)
    with pytest.raises(ValueError):
        AttackConfig("sh-noise", ratio=0.1)
    with pytest.raises(ValueError):
        AttackConfig("blur", ratio=0.1)


def test_apply_dispatch(scene):
    assert apply(scene, AttackConfig("seq-prune", ratio=0.25)) == prune_sequential(scene, 0.25)
    assert apply(scene, AttackConfig("random-prune", ratio=0.25, seed=2)) == prune_random(scene, 0.25, 2)
    assert apply(scene, AttackConfig("sh-noise", sigma=0.001, seed=2)) == add_sh_noise(scene, 0.001, 2)
