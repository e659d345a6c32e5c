import pytest

from hourglass_sorter import fastsim


@pytest.fixture(scope="session")
def fast_kernels():
    """Compile the bulk kernels once so timed tests stay honest."""
    fastsim.warmup()
    return fastsim
