import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import numpy as np
import pytest

from lpwpd.pipeline import write_wav
from lpwpd.scene import make_scene
from lpwpd.stft import synthesize


@pytest.fixture(scope="session")
def scene_wavs(tmp_path_factory):
    """A 2-mic synthetic scene written as WAV: (mixture path, clean reference path, sample count)."""
    d = tmp_path_factory.mktemp("scene")
    Y, parts, _ = make_scene(260, num_channels=2, seed=3)
    mix = synthesize(Y)
    clean = synthesize(parts.clean)
    peak = np.max(np.abs(mix))
    write_wav(d / "mix.wav", mix / (2 * peak), 16000)
    write_wav(d / "clean.wav", clean / (2 * peak), 16000)
    return d / "mix.wav", d / "clean.wav", mix.shape[0]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
