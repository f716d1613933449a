import shutil
from pathlib import Path

import pytest

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def convergence_csv(tmp_path):
    dst = tmp_path / "convergence_heat1d-sin.csv"
    shutil.copy(GOLDEN / "convergence_heat1d-sin.csv", dst)
    return dst


@pytest.fixture
def errorfield_1d_csv(tmp_path):
    dst = tmp_path / "errorfield_1d.csv"
    shutil.copy(GOLDEN / "errorfield_1d.csv", dst)
    return dst


@pytest.fixture
def errorfield_2d_csv(tmp_path):
    dst = tmp_path / "errorfield_2d.csv"
    shutil.copy(GOLDEN / "errorfield_2d.csv", dst)
    return dst
