"""Auerbach bases and the isomorphism certificate d_BM(U, ℝⁿ_∞) ≤ log n

An Auerbach basis of an n-dimensional normed space U consists of unit vectors x₁…xₙ and functionals f₁…fₙ of
dual norm one with fᵢ(xⱼ) = δᵢⱼ. It is obtained by maximizing |det(x₁,…,xₙ)| over the product of unit spheres:
at a maximizer no single vector can be exchanged to increase the determinant, which says exactly that the
cofactor functionals have dual norm at most one.

Example:
>>> from dimbound.norms import NormDescriptor, Subspace
>>> basis = auerbach_basis(Subspace.full(2), NormDescriptor.l2(2))
>>> basis.duality_residual <= 1e-8 and basis.functional_norm_excess <= 1e-6
True
>>> certificate = bm_certificate(basis)
>>> round(certificate.J_norm_bound, 6), round(certificate.Jinv_norm_bound, 6)
(1.414214, 1.0)
"""

import math
from dataclasses import dataclass

import numpy as np
from loguru import logger

from dimbound.exception import AuerbachConstructionError, InvalidInputError
from dimbound.norms import NormDescriptor, Subspace, norm_eval, operator_norm, subspace_dual_norm
from dimbound.utils.sampling import DEFAULT_SEED

MAX_DIMENSION = 8
DUALITY_TOLERANCE = 1e-8
FUNCTIONAL_EXCESS_TOLERANCE = 1e-6
UNIT_NORM_TOLERANCE = 1e-9
LOCAL_MAXIMALITY_TOLERANCE = 1e-6
PERTURBATION_STEPS = (1e-3, 1e-2, 1e-1)


@dataclass(frozen=True, eq=False)
class AuerbachBasis:
    """Paired vectors and functionals of a subspace

    Attributes:
        vectors: m×n matrix with the unit vectors xᵢ as columns
        functionals: n×m matrix whose rows are coefficient vectors of fᵢ acting on the subspace
        subspace: the subspace U the basis spans
        norm: the ambient norm
        duality_residual: max |fᵢ(xⱼ) − δᵢⱼ|
        functional_norm_excess: max(0, max ‖fᵢ‖_{U*} − 1)
        functional_norms: ‖fᵢ‖_{U*} for every i
        determinant: |det| of the vectors in the coordinates of the subspace basis
    """

    vectors: np.ndarray
    functionals: np.ndarray
    subspace: Subspace
    norm: NormDescriptor
    duality_residual: float
    functional_norm_excess: float
    functional_norms: np.ndarray
    determinant: float

    @property
    def n(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True, eq=False)
class IsomorphismCertificate:
    """The map J: ℝⁿ_∞ → U, z ↦ Σ zᵢxᵢ together with verified bounds on ‖J‖ and ‖J⁻¹‖"""

    J: np.ndarray
    J_norm_bound: float
    Jinv_norm_bound: float

    @property
    def n(self) -> int:
        return self.J.shape[1]

    @property
    def product(self) -> float:
        return self.J_norm_bound * self.Jinv_norm_bound

    @property
    def bm_distance_bound(self) -> float:
        """log(‖J‖·‖J⁻¹‖), an upper bound for the Banach–Mazur distance to ℝⁿ_∞"""
        return math.log(self.product) if self.n else 0.0

    @property
    def classical_constant(self) -> float:
        """The older bound log(n·2ⁿ) that the Auerbach construction improves on"""
        return math.log(self.n * 2**self.n) if self.n else 0.0


def _cofactor(coordinates: np.ndarray, i: int) -> np.ndarray:
    """φ with det(X with column i replaced by c) = φ·c"""
    n = coordinates.shape[0]
    others = np.delete(coordinates, i, axis=1)
    return np.array([(-1) ** (i + j) * np.linalg.det(np.delete(others, j, axis=0)) for j in range(n)])


def _maximize_determinant(
    coordinates: np.ndarray, basis: np.ndarray, nd: NormDescriptor, tolerance: float, max_sweeps: int
) -> tuple[np.ndarray, float]:
    """Coordinate ascent: every step replaces one vector by the exact maximizer of its cofactor functional"""
    coordinates = coordinates.copy()
    determinant = abs(np.linalg.det(coordinates))
    for sweep in range(max_sweeps):
        previous = determinant
        for i in range(coordinates.shape[1]):
            step = subspace_dual_norm(_cofactor(coordinates, i), basis, nd)
            coordinates[:, i] = step.maximizer
            determinant = step.value
        if determinant - previous <= tolerance * determinant:
            logger.debug(f"Determinant ascent converged after {sweep + 1} sweeps at |det|={determinant:.12g}")
            break
    return coordinates, determinant


def assemble_basis(subspace: Subspace, nd: NormDescriptor, coordinates: np.ndarray) -> AuerbachBasis:
    """Derives the functionals by the cofactor formula and measures all residuals

    Args:
        subspace: the subspace U
        nd: ambient norm
        coordinates: n×n matrix, column i holds the coordinates of xᵢ with respect to ``subspace.basis``

    Returns:
        The basis with its residuals, without checking them against the tolerances
    """
    basis = subspace.basis
    inverse = np.linalg.inv(coordinates)
    vectors = basis @ coordinates
    functionals = inverse @ np.linalg.pinv(basis)
    functional_norms = np.array([subspace_dual_norm(row, basis, nd).value for row in inverse])
    residual = float(np.abs(functionals @ vectors - np.eye(subspace.dim)).max())
    return AuerbachBasis(
        vectors=vectors,
        functionals=functionals,
        subspace=subspace,
        norm=nd,
        duality_residual=residual,
        functional_norm_excess=max(0.0, float(functional_norms.max()) - 1.0),
        functional_norms=functional_norms,
        determinant=abs(float(np.linalg.det(coordinates))),
    )


def local_maximality_excess(basis: AuerbachBasis, samples: int = 64, seed: int = DEFAULT_SEED) -> float:
    """Largest relative rise of |det| found by moving a single vector on the unit sphere of U

    Every vector is moved towards sampled directions by each of ``PERTURBATION_STEPS`` and renormalized, and is also
    replaced by sampled unit vectors. A maximizer of |det| admits no rise.

    Example:
    >>> from dimbound.norms import NormDescriptor, Subspace
    >>> sheared = assemble_basis(Subspace.full(2), NormDescriptor.linf(2), np.array([[1.0, 1.0], [0.0, 1.0]]))
    >>> local_maximality_excess(sheared) > 0.1
    True
    """
    n = basis.n
    if n == 0:
        return 0.0
    coordinates = np.linalg.pinv(basis.subspace.basis) @ basis.vectors
    determinant = abs(float(np.linalg.det(coordinates)))
    rng = np.random.default_rng(seed)
    rise = 0.0
    for i in range(n):
        directions = rng.standard_normal((n, samples))
        moved = [coordinates[:, [i]] + step * directions for step in PERTURBATION_STEPS]
        candidates = np.concatenate([directions, *moved], axis=1)
        candidates = candidates / norm_eval((basis.subspace.basis @ candidates).T, basis.norm)
        rise = max(rise, float(np.abs(_cofactor(coordinates, i) @ candidates).max()) / determinant - 1.0)
    return max(rise, 0.0)


def auerbach_basis(
    subspace: Subspace,
    nd: NormDescriptor,
    restarts: int = 20,
    seed: int = DEFAULT_SEED,
    tolerance: float = 1e-12,
    max_sweeps: int = 500,
) -> AuerbachBasis:
    """Constructs an Auerbach basis of a subspace by determinant maximization

    Args:
        subspace: the subspace U ⊂ ℝᵐ
        nd: the ambient norm on ℝᵐ
        restarts: number of random starting configurations; the largest determinant wins
        seed: seed of the starting configurations
        tolerance: relative increase of |det| per sweep below which the ascent stops
        max_sweeps: maximal number of sweeps per restart

    Returns:
        A basis satisfying the unit norm, duality and functional norm tolerances

    Raises:
        InvalidInputError: if the dimensions do not match or n exceeds the supported maximum
        AuerbachConstructionError: if no restart meets the tolerances or moving one vector raises |det|
    """
    if subspace.ambient_dim != nd.dimension:
        raise InvalidInputError(text=f"Subspace of ℝ^{subspace.ambient_dim} with a norm on ℝ^{nd.dimension}")
    n = subspace.dim
    if n > MAX_DIMENSION:
        raise InvalidInputError(text=f"Auerbach bases are only constructed up to dimension {MAX_DIMENSION}, got {n}")
    if n == 0:
        m = subspace.ambient_dim
        return AuerbachBasis(np.zeros((m, 0)), np.zeros((0, m)), subspace, nd, 0.0, 0.0, np.zeros(0), 1.0)

    rng = np.random.default_rng(seed)
    best_coordinates, best_determinant = None, -1.0
    for restart in range(restarts):
        start = rng.standard_normal((n, n))
        start /= norm_eval((subspace.basis @ start).T, nd)
        coordinates, determinant = _maximize_determinant(start, subspace.basis, nd, tolerance, max_sweeps)
        logger.debug(f"Auerbach restart {restart}: |det|={determinant:.12g}")
        if determinant > best_determinant:
            best_coordinates, best_determinant = coordinates, determinant

    assert best_coordinates is not None
    result = assemble_basis(subspace, nd, best_coordinates)
    unit_error = float(np.abs(norm_eval(result.vectors.T, nd) - 1.0).max())
    if (
        result.duality_residual > DUALITY_TOLERANCE
        or result.functional_norm_excess > FUNCTIONAL_EXCESS_TOLERANCE
        or unit_error > UNIT_NORM_TOLERANCE
    ):
        raise AuerbachConstructionError(
            text=f"Determinant maximization for n={n} did not reach the tolerances after {restarts} restarts",
            duality_residual=result.duality_residual,
            functional_norm_excess=result.functional_norm_excess,
        )
    rise = local_maximality_excess(result, seed=seed)
    if rise > LOCAL_MAXIMALITY_TOLERANCE:
        raise AuerbachConstructionError(
            text=f"Moving one vector on the unit sphere raises |det| by a factor 1 + {rise:.3e}, not a maximizer",
            duality_residual=result.duality_residual,
            functional_norm_excess=result.functional_norm_excess,
        )
    return result


def bm_certificate(basis: AuerbachBasis) -> IsomorphismCertificate:
    """Verified norms of J: ℝⁿ_∞ → U and of its inverse

    ‖J‖ is the exact maximum of ‖Σ zᵢxᵢ‖ over the sign vectors z, ‖J⁻¹‖ the largest functional norm.

    Example:
    >>> from dimbound.norms import NormDescriptor, Subspace
    >>> standard = assemble_basis(Subspace.full(3), NormDescriptor.linf(3), np.eye(3))
    >>> certificate = bm_certificate(standard)
    >>> round(certificate.J_norm_bound, 9), round(certificate.Jinv_norm_bound, 9)
    (1.0, 1.0)
    """
    n = basis.n
    if n == 0:
        return IsomorphismCertificate(basis.vectors, 0.0, 0.0)
    j_norm = operator_norm(basis.vectors, NormDescriptor.linf(n), basis.norm)
    jinv_norm = float(basis.functional_norms.max())
    return IsomorphismCertificate(J=basis.vectors, J_norm_bound=j_norm, Jinv_norm_bound=jinv_norm)
