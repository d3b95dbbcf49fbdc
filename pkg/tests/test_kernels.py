import numpy as np
import pytest

from helpers import rk4
from sepoc import kernels
from sepoc.control import eval_mu
from sepoc.errors import IntegrationFailureError
from sepoc.kernels.dp45 import dp45
from sepoc.models import (adn_initial_state, adn_system, default_graph,
                          kuramoto_system, oa_initial_state, oa_system,
                          power_law_distribution, splay_state)
from sepoc.validate import random_positive_control

CASES = [
    (kuramoto_system(default_graph()), splay_state(10)),
    (oa_system(power_law_distribution(np.arange(1.0, 11.0), 2.2)), oa_initial_state(10, 0.1)),
    (adn_system(power_law_distribution(0.2 + 0.4 * np.arange(5.0), 2.2)), adn_initial_state(5, 0.02)),
]

needs_ext = pytest.mark.skipif(not kernels.HAVE_COMPILED, reason="extension not built")


@needs_ext
@pytest.mark.parametrize("sys_,z0", CASES, ids=["kuramoto", "oa", "adn"])
def test_backend_parity_controlled(sys_, z0):
    c = random_positive_control(np.random.default_rng(1), 7, 3.0)
    te = np.linspace(0.0, 3.0, 17)
    out = {}
    for backend in ("compiled", "python"):
        out[backend] = kernels.solve_model(sys_.kernel, z0, c.chebyshev_coeffs(),
                                           3.0, 1e-10, te, True, backend=backend)
    Yc, Sc, zc = out["compiled"]
    Yp, Sp, zp = out["python"]
    assert np.max(np.abs(Yc - Yp)) <= 1e-9
    assert np.max(np.abs(zc - zp)) <= 1e-9
    assert np.max(np.abs(Sc - Sp)) <= 1e-9


@needs_ext
@pytest.mark.parametrize("sys_,z0", CASES, ids=["kuramoto", "oa", "adn"])
def test_backend_parity_rescaled(sys_, z0):
    te = np.linspace(0.0, 5.0, 11)
    Yc, _, zc = kernels.solve_model(sys_.kernel, z0, None, 5.0, 1e-10, te, False,
                                    backend="compiled")
    Yp, _, zp = kernels.solve_model(sys_.kernel, z0, None, 5.0, 1e-10, te, False,
                                    backend="python")
    assert np.max(np.abs(Yc - Yp)) <= 1e-9
    assert np.max(np.abs(zc - zp)) <= 1e-9


@pytest.mark.parametrize("backend", ["compiled", "python"])
def test_dense_output_matches_fine_rk4(backend):
    if backend == "compiled" and not kernels.HAVE_COMPILED:
        pytest.skip("extension not built")
    sys_, z0 = CASES[2]
    c = random_positive_control(np.random.default_rng(2), 5, 2.0)
    te = np.linspace(0.0, 2.0, 41)
    Y, _, _ = kernels.solve_model(sys_.kernel, z0, c.chebyshev_coeffs(), 2.0,
                                  1e-11, te, False, backend=backend)
    for tau, row in zip(te[1:], Y[1:]):
        oracle = rk4(lambda t, y: eval_mu(c, t) * sys_.rhs(y), z0, tau, tau / 4000.0)
        assert np.max(np.abs(row - oracle)) <= 1e-8


def test_generic_dp45_interpolant_order():
    # quartic dense output: halving the tolerance must not degrade samples
    f = lambda t, y: np.array([np.cos(t) * y[0]])
    te = np.linspace(0.0, 3.0, 29)
    Y, _ = dp45(f, np.array([1.0]), 3.0, 1e-11, te)
    exact = np.exp(np.sin(te))
    assert np.max(np.abs(Y[:, 0] - exact)) <= 1e-9


def test_generic_dp45_underflow():
    f = lambda t, y: y * y
    with pytest.raises(IntegrationFailureError) as err:
        dp45(f, np.array([1.0]), 2.0, 1e-10, None)
    assert err.value.t_fail == pytest.approx(1.0, abs=0.1)


def test_backend_selection_respects_env():
    import os

    forced = os.environ.get("SEPOC_PURE_PYTHON", "").strip() not in ("", "0")
    if forced or not kernels.HAVE_COMPILED:
        assert kernels.active_backend() == "python"
    else:
        assert kernels.active_backend() == "compiled"
