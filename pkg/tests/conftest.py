import numpy as np
import pytest

from splatstego.scene import SH_COEFFS, GaussianScene
from splatstego.synth import SynthConfig, gen_scene_pair


def random_scene(n, seed=0):
    rng = np.random.default_rng(seed)
    return GaussianScene(
        positions=rng.uniform(-1, 1, (n, 3)),
        rotations=rng.normal(size=(n, 4)),
        log_scales=rng.uniform(-6, -2, (n, 3)),
        raw_opacities=rng.normal(size=n),
        sh=rng.normal(scale=0.3, size=(n, SH_COEFFS, 3)),
        normals=rng.normal(size=(n, 3)),
    )


@pytest.fixture
def scene():
    return random_scene(64)


@pytest.fixture(scope="session")
def small_pair():
    cfg = SynthConfig(count=1500, seed=3)
    cover, hidden = gen_scene_pair(cfg)
    return cfg, cover, hidden


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.VERDICTS, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)
