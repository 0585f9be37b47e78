import json

import numpy as np
import pytest

from splatstego.scene import sigmoid
from splatstego.synth import SynthConfig, gen_scene_pair, hidden_for_cover, reference_hidden_scene


def test_single_primitive():
    cover, hidden = gen_scene_pair(SynthConfig(count=1, seed=9))
    assert cover.count == 1 and hidden.count == 1
    assert cover.sh.shape == (1, 16, 3)


def test_seed_determinism():
    a = gen_scene_pair(SynthConfig(count=300, seed=4))
    b = gen_scene_pair(SynthConfig(count=300, seed=4))
    c = gen_scene_pair(SynthConfig(count=300, seed=5))
    assert a[0] == b[0] and np.array_equal(a[1].sh, b[1].sh) and np.array_equal(a[1].opacity, b[1].opacity)
    assert not a[0] == c[0]


def test_order_rms_follows_decay_law():
    cfg = SynthConfig(count=10_000, decay=0.5, seed=1)
    cover, hidden = gen_scene_pair(cfg)
    for sh in (cover.sh.astype(np.float64), hidden.sh):
        rms0 = np.sqrt(np.mean(sh[:, 0] ** 2))
        rms3 = np.sqrt(np.mean(sh[:, 9:16] ** 2))
        assert rms3 == pytest.approx(cfg.decay**3 * rms0, rel=0.10)


def test_opacity_populations():
    cfg = SynthConfig(count=5000, seed=2)
    cover, hidden = gen_scene_pair(cfg)
    cover_op = sigmoid(cover.raw_opacities.astype(np.float64))
    sig = hidden.opacity > cfg.noise_floor
    assert sig.mean() == pytest.approx(cfg.significant_fraction, abs=0.03)
    assert hidden.opacity[~sig].max() <= cfg.noise_floor
    assert hidden.opacity[sig].min() >= 0.3 - 1e-12
    # Hidden opacity decreases with cover opacity on the significant population.
    assert np.corrcoef(cover_op[sig], hidden.opacity[sig])[0, 1] < -0.999


def test_reference_drops_noise_floor():
    cfg = SynthConfig(count=800, seed=3)
    cover, hidden = gen_scene_pair(cfg)
    ref = reference_hidden_scene(cover, hidden, cfg)
    assert ref.count == int(np.sum(hidden.opacity > cfg.noise_floor))


def test_hidden_for_cover_shapes():
    cover, _ = gen_scene_pair(SynthConfig(count=200, seed=0))
    h = hidden_for_cover(cover, SynthConfig(seed=7))
    assert h.count == 200 and h.sh.shape == (200, 16, 3)


def test_json_round_trip():
    cfg = SynthConfig(count=123, decay=0.7, bounds=(-2.0, 2.0))
    assert SynthConfig.from_json(cfg.to_json()) == cfg
    assert SynthConfig.from_json(cfg.to_json(), seed=5, count=None).seed == 5
    with pytest.raises(ValueError, match="unknown"):
        SynthConfig.from_json(json.dumps({"colour": 1}))


@pytest.mark.parametrize("bad", [{"count": 0}, {"decay": 0.0}, {"noise_floor": 0.4}, {"bounds": (1.0, 0.0)}])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SynthConfig(**bad)
