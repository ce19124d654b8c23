import warnings

import pytest

from fcqkd import _backend
from fcqkd.config import paper_config

# quad reports round-off on the flat tails of the overlap integrand
warnings.filterwarnings("ignore", message=".*roundoff error.*")

BACKENDS = ["numpy"] + (["numba"] if _backend.HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def cfg():
    """Published system, lossless 100 km fiber, 10^4 rounds."""
    return paper_config(length=100e3, master_seed=7)
