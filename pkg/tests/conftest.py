import numpy as np
import pytest

from invclt import rng as rngmod
from invclt.arrays import standardize, validate_and_symmetrize
from invclt.bounds import lower_bound_array


def rand_symmetric(n: int, seed: int, heavy: bool = False):
    gen = rngmod.derive_stream(seed, 0xBEEF, n)
    raw = gen.standard_normal((n, n))
    if heavy:
        raw = raw * (1.0 + 4.0 * (gen.random((n, n)) < 3.0 / n))
    return validate_and_symmetrize(raw, symmetrize=True)


def rand_centered(n: int, seed: int, heavy: bool = False):
    return standardize(rand_symmetric(n, seed, heavy))


@pytest.fixture(scope="session")
def appendix4():
    return lower_bound_array(4)


@pytest.fixture(scope="session")
def appendix4_std(appendix4):
    return standardize(appendix4)


@pytest.fixture()
def gen():
    return rngmod.derive_stream(20250810, 1, 1)


def assert_involution(images: np.ndarray) -> None:
    n = images.shape[0]
    idx = np.arange(n)
    assert np.all(images != idx)
    assert np.array_equal(images[images], idx)
