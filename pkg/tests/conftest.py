import pytest

from utils.channels import ChannelFamily, ChannelKind
from utils.load_data import load_ensemble
from utils.measure_core import GridSpec


@pytest.fixture(scope="session")
def grid():
    return GridSpec(64)


@pytest.fixture(scope="session")
def bec_grid():
    # Las medidas BEC son atómicas: la grilla sólo fija el largo del vector
    return GridSpec(16)


@pytest.fixture(scope="session")
def ldpc36():
    return load_ensemble("configs/ldpc36.json")


@pytest.fixture(scope="session")
def ldgm_t8():
    return load_ensemble("configs/ldgm_t8.json")


@pytest.fixture(scope="session")
def ldpc_irregular():
    return load_ensemble("configs/ldpc_irregular.json")


@pytest.fixture(scope="session")
def bec(bec_grid):
    return ChannelFamily(ChannelKind.BEC, bec_grid)


@pytest.fixture(scope="session")
def bsc(grid):
    return ChannelFamily(ChannelKind.BSC, grid)
