import pytest

from fedkmeans import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile numba kernels once so timed tests exclude JIT cost."""
    kernels.warmup()
