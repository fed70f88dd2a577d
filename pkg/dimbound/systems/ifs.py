"""Affine iterated function systems, whose attractors calibrate the covering and box-counting experiments"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from dimbound.exception import InvalidInputError
from dimbound.norms import NormDescriptor, PointCloud, operator_norm
from dimbound.utils.sampling import DEFAULT_SEED


@dataclass(frozen=True, eq=False)
class AffineIFS:
    """Maps x ↦ Aᵢx + bᵢ

    Attributes:
        matrices: stacked Aᵢ, shape (k, d, d)
        offsets: stacked bᵢ, shape (k, d)
    """

    matrices: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        matrices = np.asarray(self.matrices, dtype=float)
        offsets = np.asarray(self.offsets, dtype=float)
        if matrices.ndim != 3 or matrices.shape[1] != matrices.shape[2] or offsets.shape != matrices.shape[:2]:
            raise InvalidInputError(text=f"Incompatible IFS shapes {matrices.shape} and {offsets.shape}")
        object.__setattr__(self, "matrices", matrices)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dim(self) -> int:
        return self.offsets.shape[1]

    def __len__(self) -> int:
        return self.offsets.shape[0]

    def contraction(self, nd: NormDescriptor) -> float:
        """max ‖Aᵢ‖; the attractor exists when it is below one"""
        return max(operator_norm(matrix, nd) for matrix in self.matrices)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Images of the points under every map, map by map"""
        return np.concatenate([points @ matrix.T + offset for matrix, offset in zip(self.matrices, self.offsets)])

    def fixed_point(self, index: int = 0) -> np.ndarray:
        return np.linalg.solve(np.eye(self.dim) - self.matrices[index], self.offsets[index])


def similitudes(ratio: float, offsets: Sequence[Sequence[float]]) -> AffineIFS:
    offsets = np.asarray(offsets, dtype=float)
    count, d = offsets.shape
    return AffineIFS(np.broadcast_to(ratio * np.eye(d), (count, d, d)), offsets)


def sierpinski() -> AffineIFS:
    """Three halvings towards the corners of the triangle (0, 0), (1, 0), (0, 1)"""
    return similitudes(0.5, [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]])


def cantor_ifs() -> AffineIFS:
    """x ↦ x/3 and x ↦ x/3 + 2/3"""
    return similitudes(1 / 3, [[0.0], [2 / 3]])


def iterate_ifs(ifs: AffineIFS, level: int) -> PointCloud:
    """The images of the first fixed point under all kˡᵉᵛᵉˡ compositions of ``level`` maps

    Example:
    >>> sorted(round(float(x) * 9, 9) for x in iterate_ifs(cantor_ifs(), 2).points.ravel())
    [0.0, 2.0, 6.0, 8.0]
    """
    points = ifs.fixed_point()[None]
    for _ in range(level):
        points = ifs.apply(points)
    return PointCloud(points)


def cantor_set(level: int) -> PointCloud:
    """Both endpoints of the 2ˡᵉᵛᵉˡ intervals of the middle-thirds construction"""
    left = iterate_ifs(cantor_ifs(), level).points
    return PointCloud(np.concatenate([left, left + 3.0**-level]))


def sample_ifs(ifs: AffineIFS, count: int, seed: int = DEFAULT_SEED, burn_in: int = 100) -> PointCloud:
    """Chaos game: a random orbit with maps drawn uniformly, after ``burn_in`` discarded steps"""
    rng = np.random.default_rng(seed)
    choices = rng.integers(len(ifs), size=count + burn_in)
    x = ifs.fixed_point()
    points = np.empty((count, ifs.dim))
    for step, choice in enumerate(choices):
        x = ifs.matrices[choice] @ x + ifs.offsets[choice]
        if step >= burn_in:
            points[step - burn_in] = x
    return PointCloud(points)
