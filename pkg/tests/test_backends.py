import numpy as np
import pytest

from nonlocal_lwr import backend

HAVE_CYTHON = "cython" in backend.available_backends()

needs_cython = pytest.mark.skipif(not HAVE_CYTHON, reason="compiled core not built")


def test_python_backend_always_available():
    assert "python" in backend.available_backends()
    assert backend.get_kernels("python").NAME == "python"


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        backend.get_kernels("fortran")


def test_env_override(monkeypatch):
    monkeypatch.setenv("NONLOCAL_LWR_BACKEND", "python")
    assert backend.get_kernels().NAME == "python"


@needs_cython
def test_backends_agree():
    py = backend.get_kernels("python")
    cy = backend.get_kernels("cython")
    rng = np.random.default_rng(42)
    for _ in range(25):
        n = int(rng.integers(5, 1500))
        k = int(rng.integers(1, 150))
        rho = rng.uniform(0.0, 1.0, n)
        gamma = rng.uniform(0.0, 1.0, k)
        gamma /= gamma.sum()
        v = rng.uniform(0.3, 2.5, n + 1)
        lam = float(rng.uniform(0.0, 0.45))
        d = float(rng.uniform(0.0, 0.4))

        conv_p = py.conv_boundaries(rho, gamma)
        conv_c = cy.conv_boundaries(rho, gamma)
        assert np.abs(conv_p - conv_c).max() < 1e-13

        up_p = py.upwind_step(rho, conv_p, v, lam, d)
        up_c = cy.upwind_step(rho, conv_p, v, lam, d)
        assert np.abs(up_p - up_c).max() < 1e-13

        go_p = py.godunov_step(rho, v, v, lam)
        go_c = cy.godunov_step(rho, v, v, lam)
        assert np.abs(go_p - go_c).max() < 1e-13


@needs_cython
def test_compiled_accepts_readonly_arrays():
    cy = backend.get_kernels("cython")
    rho = np.linspace(0.1, 0.9, 50)
    rho.setflags(write=False)
    gamma = np.asarray([0.7, 0.3])
    gamma.setflags(write=False)
    out = cy.conv_boundaries(rho, gamma)
    assert out.shape == (51,)


def test_upwind_step_zero_dt_identity():
    k = backend.kernels
    rho = np.linspace(0.0, 1.0, 30)
    conv = np.zeros(31)
    v = np.ones(31)
    out = k.upwind_step(rho, conv, v, 0.0, 0.0)
    assert np.array_equal(out, rho)
