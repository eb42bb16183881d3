import numpy as np
import pytest

from natstego import NoiseModel, Raster16, diff_model

ISO1 = NoiseModel(8.36e-5, 1.11e-6, "1000")
ISO2 = NoiseModel(10.46e-5, 1.95e-6, "1250")


@pytest.fixture(scope="session")
def params():
    return diff_model(ISO1, ISO2)


@pytest.fixture(scope="session")
def uniform_cover():
    # same construction as the acceptance cover, smaller
    return Raster16(np.random.default_rng(0).integers(0, 65536, (128, 128)).astype(np.uint16))


def flat(value, shape=(64, 64)):
    return Raster16(np.full(shape, value, dtype=np.uint16))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
