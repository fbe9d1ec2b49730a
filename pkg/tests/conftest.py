import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qgnodal import build_interval, build_ladder, build_star, scan_spectrum


@pytest.fixture(scope="session")
def interval_spectrum():
    return scan_spectrum(build_interval(), 10)


@pytest.fixture(scope="session")
def star3_spectrum():
    return scan_spectrum(build_star(3, 1.0 / 32.0), 5)


@pytest.fixture(scope="session")
def ladder3_spectrum():
    return scan_spectrum(build_ladder(3, 1.0 / 32.0), 5)
