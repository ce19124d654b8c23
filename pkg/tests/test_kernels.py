"""The numba and numpy kernels must be interchangeable."""

import numpy as np
import pytest

from fcqkd import _backend, _kernels, protocol
from fcqkd.config import paper_config

pytestmark = pytest.mark.skipif(not _backend.HAVE_NUMBA, reason="numba not installed")


@pytest.mark.parametrize("eve", [False, True])
@pytest.mark.parametrize("loss", [0.0, 0.35])
def test_round_kernels_identical(eve, loss):
    cfg = paper_config(length=50e3, loss_db_per_km=loss).with_eve(eve, x_e=10e3,
                                                                 intercept_probability=0.7)
    a = protocol.simulate(cfg, 50_000, seed=5, backend="numba")
    b = protocol.simulate(cfg, 50_000, seed=5, backend="numpy")
    for name in ("alice", "bob", "eve_kind", "clicked"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name
    assert np.array_equal(a.t_b, b.t_b, equal_nan=True)


def test_sessions_identical():
    cfg = paper_config().with_eve(True)
    assert (protocol.run_session(cfg, 20_000, seed=1, backend="numba")
            == protocol.run_session(cfg, 20_000, seed=1, backend="numpy"))


def test_moment_kernels():
    rng = np.random.default_rng(0)
    w = rng.random(10_001)
    a = _kernels.trapezoid_moments(w, -3.0, 1e-3, backend="numba")
    b = _kernels.trapezoid_moments(w, -3.0, 1e-3, backend="numpy")
    assert a == pytest.approx(b, rel=1e-12)


def test_env_selects_backend(monkeypatch):
    monkeypatch.setenv("FCQKD_BACKEND", "numpy")
    assert _backend.resolve(None) == "numpy"
    monkeypatch.setenv("FCQKD_BACKEND", "numba")
    assert _backend.resolve(None) == "numba"
    assert _backend.resolve("numpy") == "numpy"
    monkeypatch.setenv("FCQKD_BACKEND", "fortran")
    with pytest.raises(ValueError):
        _backend.resolve(None)
