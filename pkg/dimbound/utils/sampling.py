"""Deterministic quasi-random samples used by certificates and oracles"""

import numpy as np
from scipy.stats import norm as normal_distribution
from scipy.stats import qmc

DEFAULT_SEED = 0
"""Seed of every Halton sequence unless a caller overrides it."""


def halton(count: int, dim: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Scrambled Halton points in the open unit cube

    Args:
        count: number of points
        dim: dimension of the cube
        seed: scrambling seed

    Returns:
        Array of shape (count, dim)

    Example:
    >>> pts = halton(8, 3)
    >>> pts.shape
    (8, 3)
    >>> bool(np.all((pts > 0) & (pts < 1)))
    True
    >>> bool(np.array_equal(pts, halton(8, 3)))
    True
    """
    if count <= 0:
        return np.zeros((0, dim))
    engine = qmc.Halton(d=dim, scramble=True, seed=seed)
    return np.clip(engine.random(count), 1e-12, 1 - 1e-12)


def sphere_directions(count: int, dim: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Quasi-uniform directions on the Euclidean unit sphere

    Halton points are pushed through the inverse normal CDF, which makes their directions
    rotation invariant in distribution.

    Args:
        count: number of directions
        dim: ambient dimension
        seed: scrambling seed

    Returns:
        Array of shape (count, dim) with unit Euclidean rows

    Example:
    >>> d = sphere_directions(100, 4)
    >>> bool(np.allclose(np.linalg.norm(d, axis=1), 1))
    True
    """
    if dim == 1:
        signs = np.where(np.arange(count) % 2 == 0, 1.0, -1.0)
        return signs[:, None]
    gaussian = normal_distribution.ppf(halton(count, dim, seed))
    return gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True)


def sign_vertices(dim: int) -> np.ndarray:
    """All 2**dim vectors with entries in {-1, 1}

    Example:
    >>> sign_vertices(2).tolist()
    [[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]]
    """
    if dim == 0:
        return np.zeros((1, 0))
    grid = np.array(np.meshgrid(*([[-1.0, 1.0]] * dim), indexing="ij"))
    return grid.reshape(dim, -1).T
