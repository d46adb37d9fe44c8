import math

import numpy as np
import pytest

from wskmeans.estep import soft_assign
from wskmeans.mstep import update_centroids


def objective(X, A, C):
    return math.fsum((A * ((X[:, None, :] - C[None]) ** 2).sum(-1)).ravel())


def test_examples():
    np.testing.assert_array_equal(update_centroids([[0], [2]], [[1], [1]], [[9]]), [[1]])
    np.testing.assert_array_equal(update_centroids([[0], [4]], [[1], [3]], [[9]]), [[3]])
    C = update_centroids([[0], [4]], [[1, 0], [1, 0]], [[9], [7]])
    assert C[1, 0] == 7


def test_shape_mismatch():
    with pytest.raises(ValueError):
        update_centroids(np.zeros((3, 2)), np.ones((2, 1)), np.zeros((1, 2)))


@pytest.mark.parametrize("seed", range(10))
def test_perturbation_does_not_improve(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 4))
    A = soft_assign(rng.random((30, 5)) * 3, np.ones((30, 5), bool))
    C = update_centroids(X, A, np.zeros((5, 4)))
    base = objective(X, A, C)
    for j in range(5):
        for m in range(4):
            for step in (1e-3, -1e-3):
                Cp = C.copy()
                Cp[j, m] += step
                assert objective(X, A, Cp) >= base - 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_centroids_in_convex_hull_box(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 3))
    A = rng.random((20, 4))
    C = update_centroids(X, A, np.zeros((4, 3)))
    assert np.all(C >= X.min(0) - 1e-12) and np.all(C <= X.max(0) + 1e-12)


def test_projection_invariance():
    """Weighted means also minimize distances measured after any projection."""
    rng = np.random.default_rng(0)
    X = rng.normal(size=(25, 5))
    A = rng.random((25, 3))
    U = rng.normal(size=(5, 2))
    C = update_centroids(X, A, np.zeros((3, 5)))
    base = objective(X @ U, A, C @ U)
    for _ in range(100):
        Cp = C + 1e-3 * rng.normal(size=C.shape)
        assert objective(X @ U, A, Cp @ U) >= base - 1e-12
