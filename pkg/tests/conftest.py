import sys

import numpy as np
import pytest

from contactwav.episode import load_episode
from contactwav.synthetic import write_episode


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def episode_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("episode")
    write_episode(str(d), episode_id="ep0", duration_s=4.0)
    return d


@pytest.fixture(scope="session")
def episode(episode_dir):
    return load_episode(str(episode_dir / "ep0.json"))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
