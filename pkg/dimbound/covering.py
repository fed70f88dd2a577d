"""Covers of balls and point clouds

Covers are always by closed balls. Constructed covers carry a *locator*, a function returning for each probe
point the index of a center that should contain it. Certificates only use the locator to pick a candidate and
then measure the distance to it in the ambient norm; probes the locator misses are checked against all centers.

Example:
>>> cover = cover_linf_ball(2, 1.0, 0.5)
>>> cover.count, cover.centers.tolist()
(4, [[-0.5, -0.5], [-0.5, 0.5], [0.5, -0.5], [0.5, 0.5]])
>>> certify_cover(1.0 * unit_ball_sample(cover.norm, 512), cover).passed
True
"""

import itertools
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Any

import numpy as np
from loguru import logger

from dimbound.auerbach import auerbach_basis, bm_certificate
from dimbound.exception import CoverageError, InvalidInputError
from dimbound.norms import (
    NormDescriptor,
    PointCloud,
    Subspace,
    distances_to_set,
    lp_norm,
    norm_eval,
    unit_ball_sample,
)
from dimbound.utils.sampling import DEFAULT_SEED, halton, sphere_directions

CERTIFICATE_SAMPLES = 8192
CERTIFICATE_INFLATION = 1.01
MAX_CENTERS = 2_000_000
"""Covers with more centers are rejected instead of materialized."""

EXACT_SEARCH_LIMIT = 20
"""Largest cloud for which covering_number searches subsets exhaustively."""

_CLOSED_BALL_SLACK = 1 + 1e-12

CENTER_RELATION = "N(K,ε) ≤ N_K(K,ε) ≤ N(K,ε/2), N_K counting balls centered at points of K"


class CoverMethod(str, Enum):
    GRID = "grid"
    ISOMORPHISM = "isomorphism"
    GREEDY = "greedy"
    EXACT = "exact"
    IMAGE = "image"


Locator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class CoverResult:
    """Centers of closed balls of one radius

    Attributes:
        centers: one center per row
        radius: common radius of the balls
        method: how the cover was obtained
        norm: the norm the balls are measured in
        bound: the theoretical upper bound for the count, if one applies
        metadata: details of the construction (constants, relations, flags)
        locator: maps probe points to candidate center indices
        count: number of centers
    """

    centers: np.ndarray
    radius: float
    method: CoverMethod
    norm: NormDescriptor
    bound: float | None = None
    metadata: dict[str, Any] = field(default_factory=dict)
    locator: Locator | None = field(default=None, repr=False, metadata={"serialize": False})
    count: int = field(init=False)

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "count", centers.shape[0])


@dataclass(frozen=True)
class CoverageCertificate:
    passed: bool
    probes: int
    worst_distance: float
    radius: float
    inflation: float


def _check_radii(r: float, rho: float):
    if not (0 < rho <= r):
        raise InvalidInputError(text=f"Cover radii must satisfy 0 < ρ <= r, got ρ={rho}, r={r}")


def _cells_per_axis(half_width: float, radius: float) -> int:
    return max(1, math.ceil(half_width / radius * (1 - 1e-12)))


def _grid(n: int, half_width: float, cells: int) -> np.ndarray:
    """Centers of the cells^n cube grid of [−half_width, half_width]^n in C order"""
    if cells**n > MAX_CENTERS:
        raise InvalidInputError(text=f"A cover with {cells}^{n} centers is too large to materialize")
    axis = -half_width + (2 * np.arange(cells) + 1) * half_width / cells
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1) if n else np.zeros((1, 0))


def _grid_locator(n: int, half_width: float, cells: int, to_grid: Callable[[np.ndarray], np.ndarray]) -> Locator:
    def locate(points: np.ndarray) -> np.ndarray:
        if n == 0:
            return np.zeros(len(points), dtype=int)
        z = to_grid(points)
        index = np.clip(np.floor((z + half_width) / (2 * half_width / cells)), 0, cells - 1).astype(int)
        return np.ravel_multi_index(tuple(index.T), (cells,) * n)

    return locate


def subspace_cover_bound(n: int, r: float, rho: float, field_factor: int = 1, hilbert: bool = False) -> float:
    """Upper bound ((n+1)·r/ρ)^(αn) for covering an n-dimensional ball of radius r by ρ-balls

    With ``hilbert`` the constant n+1 is replaced by 7.

    Example:
    >>> subspace_cover_bound(2, 1, 0.25)
    144.0
    >>> subspace_cover_bound(2, 1, 0.25, field_factor=2)
    20736.0
    >>> subspace_cover_bound(2, 1, 1, hilbert=True)
    49.0
    """
    _check_radii(r, rho)
    if field_factor not in (1, 2):
        raise InvalidInputError(text=f"The field factor is 1 (real) or 2 (complex), got {field_factor}")
    base = 7 if hilbert else n + 1
    return float((base * r / rho) ** (field_factor * n))


def cover_linf_ball(n: int, r: float, rho: float) -> CoverResult:
    """Optimal axis-aligned grid cover of B_∞(0, r) ⊂ ℝⁿ by ℓ∞ balls of radius ρ

    Args:
        n: dimension
        r: radius of the covered ball
        rho: radius of the covering balls

    Returns:
        A grid cover with ⌈r/ρ⌉ⁿ centers

    Example:
    >>> cover_linf_ball(1, 1.0, 0.5).centers.ravel().tolist()
    [-0.5, 0.5]
    """
    _check_radii(r, rho)
    if n < 1:
        raise InvalidInputError(text=f"Dimension must be positive, got {n}")
    cells = _cells_per_axis(r, rho)
    return CoverResult(
        centers=_grid(n, r, cells),
        radius=rho,
        method=CoverMethod.GRID,
        norm=NormDescriptor.linf(n),
        bound=float(cells**n),
        metadata={"cells_per_axis": cells, "optimal": True},
        locator=_grid_locator(n, r, cells, lambda points: points),
    )


def cover_subspace_ball(
    subspace: Subspace,
    nd: NormDescriptor,
    r: float,
    rho: float,
    hilbert: bool = False,
    field_factor: int = 1,
    seed: int = DEFAULT_SEED,
) -> CoverResult:
    """Cover of B_U(0, r) by ρ-balls with centers in U through an Auerbach isomorphism

    With J: ℝⁿ_∞ → U built from an Auerbach basis, B_U(0, r) ⊂ J(B_∞(0, ‖J⁻¹‖r)); an ℓ∞ grid of radius ρ/‖J‖
    covering that cube is pushed forward by J.

    Args:
        subspace: the subspace U
        nd: ambient norm
        r: radius of the covered ball
        rho: radius of the covering balls
        hilbert: report the bound with the Hilbert space constant 7 (only for Euclidean type norms)
        field_factor: 1 for real, 2 for complex spaces (enters the reported bound only)
        seed: seed of the Auerbach restarts

    Returns:
        The cover with at most ((n+1)·r/ρ)ⁿ centers
    """
    _check_radii(r, rho)
    n = subspace.dim
    if n == 0:
        return CoverResult(
            centers=np.zeros((1, subspace.ambient_dim)), radius=rho, method=CoverMethod.ISOMORPHISM, norm=nd, bound=1.0
        )
    basis = auerbach_basis(subspace, nd, seed=seed)
    certificate = bm_certificate(basis)
    half_width = certificate.Jinv_norm_bound * r
    cells = _cells_per_axis(half_width, rho / certificate.J_norm_bound)
    centers = _grid(n, half_width, cells) @ certificate.J.T
    hilbert = hilbert and nd.is_euclidean
    logger.debug(
        f"Subspace cover: n={n}, ‖J‖={certificate.J_norm_bound:.6g}, ‖J⁻¹‖={certificate.Jinv_norm_bound:.6g}, "
        f"{cells} cells per axis"
    )
    return CoverResult(
        centers=centers,
        radius=rho,
        method=CoverMethod.ISOMORPHISM,
        norm=nd,
        bound=subspace_cover_bound(n, r, rho, field_factor, hilbert),
        metadata={
            "cells_per_axis": cells,
            "J_norm_bound": certificate.J_norm_bound,
            "Jinv_norm_bound": certificate.Jinv_norm_bound,
            "hilbert_constant": hilbert,
        },
        locator=_grid_locator(n, half_width, cells, lambda points: points @ basis.functionals.T),
    )


def greedy_cover(cloud: PointCloud, eps: float, nd: NormDescriptor) -> CoverResult:
    """Farthest-point greedy ε-net of a point cloud, starting at its lexicographically smallest point

    Args:
        cloud: the points to cover
        eps: radius of the balls
        nd: the norm

    Returns:
        A cover by balls centered at points of the cloud

    Example:
    >>> segment = PointCloud(np.linspace(0, 1, 1000)[:, None])
    >>> greedy_cover(segment, 1 / 8, NormDescriptor.linf(1)).count
    8
    """
    if eps <= 0:
        raise InvalidInputError(text=f"Cover radius must be positive, got {eps}")
    gauged = cloud.points @ nd.gauge().T
    start = int(np.lexsort(cloud.points.T[::-1])[0])
    chosen = [start]
    distances = lp_norm(gauged - gauged[start], nd.exponent)
    while distances.max() > eps * _CLOSED_BALL_SLACK:
        farthest = int(np.argmax(distances))
        chosen.append(farthest)
        distances = np.minimum(distances, lp_norm(gauged - gauged[farthest], nd.exponent))
    centers = cloud.points[chosen]
    index = {tuple(center): i for i, center in enumerate(centers)}
    return CoverResult(
        centers=centers,
        radius=eps,
        method=CoverMethod.GREEDY,
        norm=nd,
        metadata={"relation": CENTER_RELATION},
        locator=lambda points: np.array([index.get(tuple(point), 0) for point in points]),
    )


def covering_number(cloud: PointCloud, eps: float, nd: NormDescriptor) -> CoverResult:
    """Minimal number of ε-balls centered at points of the cloud that cover it

    Clouds of at most 20 points are searched exhaustively; larger clouds get the greedy cover, flagged as an upper
    bound in ``metadata["exact"]``. Balls are closed, so a point at distance exactly ε from a center is covered.

    Args:
        cloud: the points to cover
        eps: radius of the balls
        nd: the norm

    Returns:
        The witness cover; its count is the covering number

    Example:
    >>> points = PointCloud(np.array([[0.0], [1.0], [2.0]]))
    >>> covering_number(points, 1.0, NormDescriptor.l2(1)).count
    1
    >>> covering_number(points, 0.999, NormDescriptor.l2(1)).count
    3
    >>> covering_number(PointCloud(np.arange(4.0)[:, None]), 1.0, NormDescriptor.l2(1)).count
    2
    """
    greedy = greedy_cover(cloud, eps, nd)
    size = len(cloud)
    if size > EXACT_SEARCH_LIMIT:
        return CoverResult(
            greedy.centers, eps, CoverMethod.GREEDY, nd, metadata={"exact": False, "relation": CENTER_RELATION}
        )
    within = distances_matrix(cloud.points, nd) <= eps * _CLOSED_BALL_SLACK
    masks = [sum(1 << i for i in np.flatnonzero(within[:, j])) for j in range(size)]
    everything = (1 << size) - 1
    for subset_size in range(1, greedy.count):
        for subset in itertools.combinations(range(size), subset_size):
            if reduce(lambda acc, j: acc | masks[j], subset, 0) == everything:
                return CoverResult(
                    cloud.points[list(subset)],
                    eps,
                    CoverMethod.EXACT,
                    nd,
                    metadata={"exact": True, "relation": CENTER_RELATION},
                )
    metadata = {"exact": True, "relation": CENTER_RELATION}
    return CoverResult(greedy.centers, eps, CoverMethod.EXACT, nd, metadata=metadata)


def distances_matrix(points: np.ndarray, nd: NormDescriptor) -> np.ndarray:
    gauged = np.asarray(points, dtype=float) @ nd.gauge().T
    return lp_norm(gauged[:, None, :] - gauged[None, :, :], nd.exponent)


def sample_subspace_ball(
    subspace: Subspace, nd: NormDescriptor, r: float, count: int = CERTIFICATE_SAMPLES, seed: int = DEFAULT_SEED
) -> np.ndarray:
    """Deterministic boundary + interior sample of B_U(0, r), as ambient points"""
    n = subspace.dim
    if n == 0:
        return np.zeros((1, subspace.ambient_dim))
    directions = sphere_directions(count, n, seed)
    directions /= norm_eval(directions @ subspace.basis.T, nd)[:, None]
    radii = np.ones(count)
    radii[count // 2 :] = halton(count - count // 2, 1, seed + 1)[:, 0] ** (1.0 / n)
    return r * (directions * radii[:, None]) @ subspace.basis.T


def certify_cover(
    probes: np.ndarray, cover: CoverResult, inflation: float = CERTIFICATE_INFLATION, strict: bool = False
) -> CoverageCertificate:
    """Checks that every probe lies within the inflated radius of some center

    Args:
        probes: points of the covered set, one per row
        cover: the cover to check
        inflation: factor applied to the cover radius
        strict: raise instead of returning a failed certificate

    Returns:
        The certificate with the largest distance of a probe to its nearest center found

    Raises:
        CoverageError: if ``strict`` and some probe is not covered
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    allowed = cover.radius * inflation
    if cover.locator is not None:
        distances = np.asarray(norm_eval(probes - cover.centers[cover.locator(probes)], cover.norm), dtype=float)
    else:
        distances = np.full(len(probes), np.inf)
    missed = distances > allowed
    if missed.any():
        distances[missed] = distances_to_set(probes[missed], cover.centers, cover.norm)
    worst = float(distances.max())
    certificate = CoverageCertificate(worst <= allowed, len(probes), worst, cover.radius, inflation)
    if not certificate.passed:
        logger.warning(f"Coverage certificate failed: worst distance {worst:.6g} > {allowed:.6g}")
        if strict:
            raise CoverageError(text="Cover does not contain all probes", worst_distance=worst, radius=cover.radius)
    return certificate


@dataclass(frozen=True)
class IteratedCoverLaw:
    """Measured counts N(K, (α+η)ᵏr₀) against the prediction Mᵏ·N(K, r₀)"""

    M: float
    alpha: float
    eta: float
    r0: float
    radii: list[float]
    measured: list[int]
    predicted: list[float]

    @property
    def holds(self) -> bool:
        return all(count <= bound for count, bound in zip(self.measured, self.predicted))


def iterated_cover_law(
    cloud: PointCloud, M: float, alpha: float, eta: float, r0: float, k_max: int, nd: NormDescriptor
) -> IteratedCoverLaw:
    """Greedy cover counts of K at the radii (α+η)ᵏr₀, k = 0…k_max, and the predicted bounds Mᵏ·N(K, r₀)

    Args:
        cloud: sample of the negatively invariant set K
        M: number of α-balls covering the image of a unit ball under the map
        alpha: contraction factor of the covers
        eta: slack added to α
        r0: initial radius
        k_max: number of iterations
        nd: the norm

    Returns:
        The measured and predicted counts
    """
    if not (0 < alpha and 0 < eta and alpha + eta < 1):
        raise InvalidInputError(text=f"Need 0 < α, 0 < η and α + η < 1, got α={alpha}, η={eta}")
    radii = [r0 * (alpha + eta) ** k for k in range(k_max + 1)]
    measured = [greedy_cover(cloud, radius, nd).count for radius in radii]
    predicted = [M**k * measured[0] for k in range(k_max + 1)]
    for k, (count, bound) in enumerate(zip(measured, predicted)):
        logger.debug(f"Iterated cover k={k}: N={count}, M^k·N(K,r0)={bound:.6g}")
    return IteratedCoverLaw(M, alpha, eta, r0, radii, measured, predicted)
