import pytest

from rawseq import kernels


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run the test once per available kernel backend, restoring after."""
    previous = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)
