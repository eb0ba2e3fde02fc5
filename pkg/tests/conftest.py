import pytest

from levelquad import accel


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    if request.param == "numba" and accel.numba is None:
        pytest.skip("numba not installed")
    prev = accel.set_backend(request.param)
    yield request.param
    accel.set_backend(prev)
