import numpy as np
import pytest

from qiup import Camera, ObjectMap, OpticalConfig


@pytest.fixture
def cfg():
    return OpticalConfig()


@pytest.fixture
def small_camera():
    return Camera.square(8, 2e-4)


def random_object(rng, shape=(12, 12), pitch=1e-4, kind="complex") -> ObjectMap:
    mag = rng.uniform(0.0, 1.0, shape)
    phase = rng.uniform(-np.pi, np.pi, shape) if kind == "complex" else np.zeros(shape)
    return ObjectMap(mag * np.exp(1j * phase), pitch)


# one PASS/FAIL line per acceptance criterion, repeated at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
