import os
import subprocess
import sys

import numpy as np
import pytest

from gtft import kernels

BACKENDS = kernels.available_backends()
pytestmark = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")


@pytest.fixture
def data():
    rng = np.random.default_rng(7)
    n, m, d = 6, 9, 4
    A = rng.standard_normal((n, m, d))
    b = rng.standard_normal((n, m))
    W = rng.dirichlet(np.ones(n), size=n)
    W[W < 0.1] = 0.0  # exercise the zero-skip path
    X, G, F, S = rng.standard_normal((4, n, d))
    return A, b, W, X, G, F, S


def close(a, b, tol=1e-12):
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b)) <= tol * max(1.0, np.max(np.abs(b)))


def test_local_gradients(data):
    A, b, W, X, *_ = data
    c, p = BACKENDS["cython"], BACKENDS["python"]
    assert close(c.local_gradients(A, b, 0.3, X), p.local_gradients(A, b, 0.3, X))


def test_mix(data):
    _, _, W, X, *_ = data
    assert close(BACKENDS["cython"].mix(W, X), W.T @ X)


@pytest.mark.parametrize("noisy", [False, True])
def test_gt_round(data, noisy):
    A, b, W, X, G, F, S = data
    args = (W, X, G, F, A, b, 0.1, 0.01, S if noisy else None)
    for a, e in zip(BACKENDS["cython"].gt_round(*args), BACKENDS["python"].gt_round(*args)):
        assert close(a, e)


@pytest.mark.parametrize("noisy", [False, True])
def test_dgd_round(data, noisy):
    A, b, W, X, G, F, S = data
    args = (W, X, F, A, b, 0.1, 0.01, S if noisy else None)
    for a, e in zip(BACKENDS["cython"].dgd_round(*args), BACKENDS["python"].dgd_round(*args)):
        assert close(a, e)


def test_metrics_row(data):
    A, b, W, X, G, *_ = data
    a = BACKENDS["cython"].metrics_row(A, b, 0.1, X, G)
    e = BACKENDS["python"].metrics_row(A, b, 0.1, X, G)
    assert close(a, e)


def test_objective_and_gradient(data):
    A, b, _, X, *_ = data
    fa, ga = BACKENDS["cython"].objective_and_gradient(A, b, 0.1, X[0])
    fe, ge = BACKENDS["python"].objective_and_gradient(A, b, 0.1, X[0])
    assert close(fa, fe) and close(ga, ge)


def test_env_forces_python():
    env = dict(os.environ, GTFT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import gtft; print(gtft.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
