import numpy as np
import pytest

from adaselect.datasets import gen_regression_simple, write_dataset_csv


@pytest.fixture()
def small_regression_csv(tmp_path):
    """A 250-row y=2x+1 CSV dataset, enough for two 100-sample batches."""
    ds = gen_regression_simple(n_train=200, n_test=50, noise_sigma=0.1, seed=61)
    path = tmp_path / "reg.csv"
    write_dataset_csv(ds, path)
    return path


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(20240817))
