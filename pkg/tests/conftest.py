import numpy as np
import pytest

from vrlite import LossModel, SyntheticSpec, gen_gaussian_classification, gen_linear_regression


@pytest.fixture(scope="session")
def tiny_ridge():
    """Small regression problem for fast unit tests."""
    ds, x_star = gen_linear_regression(
        SyntheticSpec(n=60, d=5, task="regression", noise_sigma=0.5, seed=11))
    return ds, LossModel("ridge", 1e-4), x_star


@pytest.fixture(scope="session")
def tiny_class():
    ds = gen_gaussian_classification(
        SyntheticSpec(n=80, d=4, task="classification", seed=12))
    return ds, LossModel("logistic", 1e-4)


@pytest.fixture(scope="session")
def toy_ridge():
    """Benchmark-sized regression toy (n=5000, d=20)."""
    ds, x_star = gen_linear_regression(
        SyntheticSpec(n=5000, d=20, task="regression", seed=0))
    return ds, LossModel("ridge", 1e-4), x_star


@pytest.fixture(scope="session")
def toy_class():
    ds = gen_gaussian_classification(
        SyntheticSpec(n=5000, d=20, task="classification", seed=0))
    return ds, LossModel("logistic", 1e-4)


def finite_difference_gradient(f, x, h=1e-6):
    """Central-difference gradient of a scalar function, one coordinate
    at a time. Kept independent of the library's gradient code."""
    g = np.zeros_like(x)
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g
