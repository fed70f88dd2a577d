"""Linear maps split into a contraction and a finite-rank part

A split T = L + C belongs to 𝓛_λ when ‖L‖ < λ. :class:`OperatorSplit` stores a budget 0 < λ_b < 1/2 and
requires ‖L‖ < λ_b/2, the form in which the covering theorem consumes it. Derivatives along an orbit that only contract
by some α < 1 are :class:`SplitStep` instances until their composition is small enough to be split.

Example:
>>> from dimbound.norms import NormDescriptor
>>> split = OperatorSplit(L=np.zeros((3, 3)), C=np.diag([3.0, 1.0, 0.1]), nd=NormDescriptor.l2(3), lambda_budget=0.25)
>>> result = nu_lambda(split, 0.5)
>>> result.nu, round(result.certified_distance_bound, 12)
(2, 0.1)
"""

import math
from dataclasses import dataclass, field

import numpy as np
from loguru import logger
from scipy.optimize import brentq, linprog, minimize

from dimbound.covering import CoverMethod, CoverResult, cover_subspace_ball
from dimbound.exception import DegenerateBoundError, InvalidInputError, NuLambdaSearchError
from dimbound.norms import (
    MAX_VERTEX_ENUMERATION,
    RANK_TOLERANCE,
    NormDescriptor,
    Subspace,
    lp_norm,
    numerical_rank,
    operator_norm,
    unit_ball_vertices,
    unit_sphere_sample,
)
from dimbound.utils.sampling import DEFAULT_SEED

SAMPLED_CANDIDATES = 512
"""Candidate directions of the greedy subspace search when the unit ball is not a polytope."""

_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def truncate(matrix: np.ndarray, tolerance: float = RANK_TOLERANCE) -> np.ndarray:
    """Drops the singular values below ``tolerance`` times the largest one

    Example:
    >>> numerical_rank(truncate(np.diag([1.0, 1e-14])), tolerance=1e-20)
    1
    """
    u, s, vt = np.linalg.svd(matrix)
    if not s.size or s[0] == 0:
        return np.zeros_like(matrix)
    keep = int(np.sum(s > tolerance * s[0]))
    return (u[:, :keep] * s[:keep]) @ vt[:keep]


@dataclass(frozen=True, eq=False)
class OperatorSplit:
    """T = L + C on (ℝᵐ, nd) with ‖L‖ < lambda_budget/2 and C of numerical rank ``rank``

    Attributes:
        L: the contraction part
        C: the finite-rank part
        nd: the norm on ℝᵐ
        lambda_budget: twice the admissible contraction norm
        rank: declared rank of C, inferred when omitted
        contraction_bound: certified upper bound of ‖L‖, computed when omitted
    """

    L: np.ndarray
    C: np.ndarray
    nd: NormDescriptor
    lambda_budget: float
    rank: int | None = None
    contraction_bound: float | None = None

    def __post_init__(self):
        for name in ("L", "C"):
            matrix = np.asarray(getattr(self, name), dtype=float)
            if matrix.shape != (self.nd.dimension, self.nd.dimension):
                raise InvalidInputError(
                    text=f"{name} has shape {matrix.shape}, expected {self.nd.dimension}x{self.nd.dimension}"
                )
            matrix.setflags(write=False)
            object.__setattr__(self, name, matrix)
        if not 0 < self.lambda_budget < 0.5:
            raise InvalidInputError(text=f"lambda_budget must lie in (0, 1/2), got {self.lambda_budget}")
        rank = numerical_rank(self.C)
        if self.rank is None:
            object.__setattr__(self, "rank", rank)
        elif self.rank != rank:
            raise InvalidInputError(text=f"C has numerical rank {rank} but rank {self.rank} was declared")
        if self.contraction_bound is None:
            object.__setattr__(self, "contraction_bound", operator_norm(self.L, self.nd))
        if not self.contraction_bound < self.lambda_budget / 2:
            raise InvalidInputError(
                text=f"‖L‖ <= {self.contraction_bound:.6g} is not below lambda_budget/2 = {self.lambda_budget / 2:.6g}"
            )

    @property
    def m(self) -> int:
        return self.nd.dimension

    @property
    def T(self) -> np.ndarray:
        return self.L + self.C


@dataclass(frozen=True, eq=False)
class NuLambdaResult:
    """Smallest dimension n found with dist(T[B_X(0,1)], T[B_Z(0,1)]) < λ for an n-dimensional Z

    Attributes:
        nu: dimension of Z
        Z: the subspace
        certified_distance_bound: upper bound of the Hausdorff semi-distance
        lambda_: the threshold λ
        distances: certified bounds for n = 0…nu
        method: how candidates were produced
        certified: False when the compact-image distance was estimated from a sample of a smooth sphere
    """

    nu: int
    Z: Subspace
    certified_distance_bound: float
    lambda_: float
    distances: list[float] = field(default_factory=list)
    method: str = "singular_values"
    certified: bool = True


@dataclass(frozen=True, eq=False)
class SplitStep:
    """Df(x) = L + C at one point of an orbit, with ‖L‖ <= α for some α < 1 but no budget yet

    Attributes:
        L: the contraction part
        C: the finite-rank part
        nd: the norm on ℝᵐ
        contraction_bound: certified upper bound of ‖L‖, computed when omitted
    """

    L: np.ndarray
    C: np.ndarray
    nd: NormDescriptor
    contraction_bound: float | None = None

    def __post_init__(self):
        for name in ("L", "C"):
            matrix = np.asarray(getattr(self, name), dtype=float)
            if matrix.shape != (self.nd.dimension, self.nd.dimension):
                raise InvalidInputError(
                    text=f"{name} has shape {matrix.shape}, expected {self.nd.dimension}x{self.nd.dimension}"
                )
            object.__setattr__(self, name, matrix)
        if self.contraction_bound is None:
            object.__setattr__(self, "contraction_bound", operator_norm(self.L, self.nd))

    def as_split(self, lambda_budget: float) -> OperatorSplit:
        """The step as a split once its contraction is below lambda_budget/2"""
        return OperatorSplit(self.L, self.C, self.nd, lambda_budget, contraction_bound=self.contraction_bound)


def _compose_parts(first: OperatorSplit | SplitStep, second: OperatorSplit | SplitStep) -> tuple[np.ndarray, float]:
    if first.nd != second.nd:
        raise InvalidInputError(text="Cannot compose splits on differently normed spaces")
    compact = first.C @ second.C + first.C @ second.L + first.L @ second.C
    if np.any(compact):
        compact = truncate(compact)
    assert first.contraction_bound is not None and second.contraction_bound is not None
    return compact, first.contraction_bound * second.contraction_bound


def step_compose(first: SplitStep, second: SplitStep) -> SplitStep:
    """The step of first∘second, with the same parts as :func:`split_compose`

    Example:
    >>> from dimbound.norms import NormDescriptor
    >>> step = SplitStep(0.6 * np.eye(2), np.diag([1.0, 0.0]), NormDescriptor.l2(2))
    >>> composed = step_compose(step, step)
    >>> round(composed.contraction_bound, 12), numerical_rank(composed.C)
    (0.36, 1)
    """
    compact, bound = _compose_parts(first, second)
    return SplitStep(L=first.L @ second.L, C=compact, nd=first.nd, contraction_bound=bound)


def split_compose(first: OperatorSplit, second: OperatorSplit) -> OperatorSplit:
    """The split of first∘second: (L₁L₂, C₁C₂ + C₁L₂ + L₁C₂)

    The contraction bound is the product of the bounds and the budget 2·(λ₁/2)·(λ₂/2).

    Example:
    >>> from dimbound.norms import NormDescriptor
    >>> nd = NormDescriptor.l2(2)
    >>> a = OperatorSplit(0.1 * np.eye(2), np.zeros((2, 2)), nd, lambda_budget=0.4)
    >>> b = OperatorSplit(0.2 * np.eye(2), np.zeros((2, 2)), nd, lambda_budget=0.45)
    >>> composed = split_compose(a, b)
    >>> round(composed.contraction_bound, 12), composed.rank, bool(np.all(composed.C == 0))
    (0.02, 0, True)
    """
    compact, bound = _compose_parts(first, second)
    composed = OperatorSplit(
        L=first.L @ second.L,
        C=compact,
        nd=first.nd,
        lambda_budget=first.lambda_budget * second.lambda_budget / 2,
        contraction_bound=bound,
    )
    assert composed.rank is not None and first.rank is not None and second.rank is not None
    if composed.rank > first.rank + second.rank:
        logger.warning(f"Composed compact part has rank {composed.rank} > {first.rank} + {second.rank}")
    return composed


def operator_norm_of_split(split: OperatorSplit) -> float:
    """Certified ‖T‖ = ‖L + C‖"""
    return operator_norm(split.T, split.nd)


def is_in_L_lambda(split: OperatorSplit, lam: float) -> bool:
    """Whether the split witnesses T ∈ 𝓛_λ, i.e. ‖L‖ < λ"""
    assert split.contraction_bound is not None
    return split.contraction_bound < lam


def split_from_projection(T: np.ndarray, P: np.ndarray, nd: NormDescriptor, lambda_budget: float) -> OperatorSplit:
    """The split L = (I − P)T, C = PT for a finite-rank projection P"""
    T = np.asarray(T, dtype=float)
    P = np.asarray(P, dtype=float)
    return OperatorSplit(L=(np.eye(len(P)) - P) @ T, C=P @ T, nd=nd, lambda_budget=lambda_budget)


def _ball_constrained_residual(y: np.ndarray, a: np.ndarray, h: np.ndarray, p: float) -> float:
    """min ‖y − a c‖_p subject to ‖h c‖_p ≤ 1 (all quantities already gauged)"""
    m, n = a.shape
    if n == 0:
        return float(lp_norm(y, p))
    if math.isinf(p):
        # variables (c, t): minimize t with |y − a c| ≤ t and |h c| ≤ 1
        ones = np.ones((m, 1))
        a_ub = np.block([[-a, -ones], [a, -ones], [h, np.zeros((m, 1))], [-h, np.zeros((m, 1))]])
        b_ub = np.concatenate([-y, y, np.ones(2 * m)])
        res = linprog(
            np.concatenate([np.zeros(n), [1.0]]),
            A_ub=a_ub,
            b_ub=b_ub,
            bounds=[(None, None)] * (n + 1),
            method="highs",
            options=_LP_OPTIONS,
        )
        return float(res.fun) if res.status == 0 else float(lp_norm(y, p))
    if p == 1:
        # variables (c, s, w): minimize Σs with |y − a c| ≤ s, |h c| ≤ w, Σw ≤ 1
        identity, zeros = np.eye(m), np.zeros((m, m))
        a_ub = np.block(
            [
                [-a, -identity, zeros],
                [a, -identity, zeros],
                [h, zeros, -identity],
                [-h, zeros, -identity],
                [np.zeros((1, n)), np.zeros((1, m)), np.ones((1, m))],
            ]
        )
        b_ub = np.concatenate([-y, y, np.zeros(2 * m), [1.0]])
        res = linprog(
            np.concatenate([np.zeros(n), np.ones(m), np.zeros(m)]),
            A_ub=a_ub,
            b_ub=b_ub,
            bounds=[(None, None)] * n + [(0, None)] * (2 * m),
            method="highs",
            options=_LP_OPTIONS,
        )
        return float(res.fun) if res.status == 0 else float(lp_norm(y, p))
    if p == 2:
        return _trust_region_residual(y, a, h)
    res = minimize(
        lambda c: float(lp_norm(y - a @ c, p)),
        np.zeros(n),
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": lambda c: 1.0 - float(lp_norm(h @ c, p))}],
    )
    return min(float(res.fun), float(lp_norm(y, p)))


def _trust_region_residual(y: np.ndarray, a: np.ndarray, h: np.ndarray) -> float:
    """Exact min ‖y − a c‖₂ subject to ‖h c‖₂ ≤ 1"""
    q, r = np.linalg.qr(h)
    a = a @ np.linalg.inv(r)
    gram, rhs = a.T @ a, a.T @ y
    eigenvalues, eigenvectors = np.linalg.eigh(gram)
    coefficients = eigenvectors.T @ rhs

    def radius(mu: float) -> float:
        return float(np.linalg.norm(coefficients / (eigenvalues + mu)))

    if eigenvalues[0] > RANK_TOLERANCE * max(eigenvalues[-1], 1.0) and radius(0.0) <= 1.0:
        c = eigenvectors @ (coefficients / eigenvalues)
    else:
        low = max(0.0, -eigenvalues[0]) + 1e-15
        high = max(1.0, float(np.linalg.norm(rhs)))
        while radius(high) > 1.0:
            high *= 2
        if radius(low) <= 1.0:
            c = eigenvectors @ (coefficients / (eigenvalues + low))
        else:
            mu = brentq(lambda mu: radius(mu) - 1.0, low, high, xtol=1e-15)
            c = eigenvectors @ (coefficients / (eigenvalues + mu))
    return float(np.linalg.norm(y - a @ c))


def _image_distances(
    points: np.ndarray, image_map: np.ndarray, basis: np.ndarray, nd: NormDescriptor
) -> np.ndarray:
    """For every x, inf over z ∈ B_Z(0,1) of ‖A x − A z‖ with Z spanned by ``basis``"""
    gauge = nd.gauge()
    a = gauge @ image_map
    images = points @ a.T
    a_z, h = a @ basis, gauge @ basis
    return np.array([_ball_constrained_residual(y, a_z, h, nd.exponent) for y in images])


def sampled_image_distance(
    split: OperatorSplit, subspace: Subspace, count: int = 8192, seed: int = DEFAULT_SEED
) -> float:
    """Lower estimate of dist(T[B_X(0,1)], T[B_Z(0,1)]) from quasi-random points of the unit sphere"""
    points = unit_sphere_sample(split.nd, count, seed)
    return float(_image_distances(points, split.T, subspace.basis, split.nd).max())


def _nu_lambda_euclidean(split: OperatorSplit, lam: float) -> NuLambdaResult:
    gauge, inverse = split.nd.gauge(), split.nd.gauge_inverse()
    _, singular_values, vt = np.linalg.svd(gauge @ split.C @ inverse)
    singular_values = np.concatenate([singular_values, [0.0]])
    assert split.contraction_bound is not None
    distances = []
    for n in range(split.m + 1):
        bound = split.contraction_bound + float(singular_values[n])
        distances.append(bound)
        logger.debug(f"nu_lambda n={n}: ‖L‖ + σ_(n+1) = {bound:.6g}")
        if bound < lam:
            return NuLambdaResult(n, Subspace(inverse @ vt[:n].T), bound, lam, distances)
    raise NuLambdaSearchError(text=f"No subspace reaches distance below λ={lam}", distances=distances)


def _candidates(nd: NormDescriptor, seed: int) -> tuple[np.ndarray, bool]:
    if nd.is_polytope and (nd.exponent == 1 or 2 ** (nd.dimension - 1) <= MAX_VERTEX_ENUMERATION):
        vertices = unit_ball_vertices(nd, half=True)
        return vertices[np.lexsort(vertices.T[::-1])], True
    return unit_sphere_sample(nd, SAMPLED_CANDIDATES, seed), False


def _nu_lambda_greedy(split: OperatorSplit, lam: float, seed: int) -> NuLambdaResult:
    nd = split.nd
    candidates, exact = _candidates(nd, seed)
    margin = 0.0
    if not exact:
        probes = unit_sphere_sample(nd, 4 * SAMPLED_CANDIDATES, seed + 1)
        gauged = np.vstack([candidates, -candidates]) @ nd.gauge().T
        fill = max(
            float(lp_norm(probe - gauged, nd.exponent).min()) for probe in probes @ nd.gauge().T
        )
        margin = operator_norm(split.C, nd) * fill
    assert split.contraction_bound is not None
    basis = np.zeros((split.m, 0))
    distances = []
    for n in range(split.m + 1):
        gaps = _image_distances(candidates, split.C, basis, nd)
        bound = 2 * split.contraction_bound + float(gaps.max()) + margin
        distances.append(bound)
        logger.debug(f"nu_lambda n={n}: 2‖L‖ + dist(C[B_X], C[B_Z]) <= {bound:.6g}")
        if bound < lam:
            method = "greedy_vertices" if exact else "greedy_sampled"
            return NuLambdaResult(n, Subspace(basis), bound, lam, distances, method, exact)
        if n == split.m:
            break
        farthest = int(np.flatnonzero(gaps >= gaps.max() - 1e-12)[0])
        basis = np.column_stack([basis, candidates[farthest]])
    raise NuLambdaSearchError(text=f"No subspace reaches distance below λ={lam}", distances=distances)


def nu_lambda(split: OperatorSplit, lam: float, seed: int = DEFAULT_SEED) -> NuLambdaResult:
    """Smallest n found with an n-dimensional Z such that dist(T[B_X(0,1)], T[B_Z(0,1)]) < λ

    Euclidean type norms use the right singular subspaces of C, for which ‖L‖ + σ_{n+1}(C) is an exact
    certificate. Other norms grow Z greedily by the unit vector whose C-image is farthest from C[B_Z] and
    certify with 2‖L‖ + dist(C[B_X], C[B_Z]), the compact-image distance being maximized over the vertices
    of the unit ball.

    Args:
        split: the split of T, required to satisfy ‖L‖ < λ/2
        lam: the threshold λ
        seed: seed of the sampled candidates (smooth non-Euclidean norms only)

    Returns:
        The dimension, the subspace and the certified bound

    Raises:
        InvalidInputError: if λ <= 0 or the split is not in 𝓛_{λ/2}
        NuLambdaSearchError: if no n <= m reaches the threshold
    """
    if not lam > 0:
        raise InvalidInputError(text=f"λ must be positive, got {lam}")
    assert split.contraction_bound is not None
    if not split.contraction_bound < lam / 2:
        raise InvalidInputError(text=f"Split with ‖L‖ <= {split.contraction_bound:.6g} is not in 𝓛_λ/2 for λ={lam}")
    if split.nd.is_euclidean:
        return _nu_lambda_euclidean(split, lam)
    return _nu_lambda_greedy(split, lam, seed)


def image_ball_bound(n: int, D: float, lam: float, field_factor: int = 1) -> float:
    """max(1, ((n+1)·D/λ)^(αn)), the count bound of the covering theorem"""
    if n == 0 or D == 0:
        return 1.0
    return max(1.0, ((n + 1) * D / lam) ** (field_factor * n))


def cover_image_ball(
    split: OperatorSplit, lam: float, hilbert: bool = False, field_factor: int = 1, seed: int = DEFAULT_SEED
) -> CoverResult:
    """A cover of T[B_X(0,1)] by balls of radius 2λ

    Covers B_{T(Z)}(0, ‖T‖) by λ-balls with centers in T(Z); since T[B_X] lies within λ of T[B_Z], the same
    centers with radius 2λ cover T[B_X(0,1)].

    Args:
        split: the split of T with ‖L‖ < λ/2
        lam: λ with 0 < λ < 1/2
        hilbert: report the Hilbert space constant for Euclidean type norms
        field_factor: 1 for real, 2 for complex spaces (enters the bound only)
        seed: seed for the Auerbach restarts and sampled candidates

    Returns:
        The cover with at most max(1, ((n+1)·D/λ)ⁿ) centers

    Raises:
        DegenerateBoundError: if λ >= 1/2
    """
    if lam >= 0.5:
        raise DegenerateBoundError(text=f"λ={lam} >= 1/2: the covering theorem needs 2λ < 1")
    nu = nu_lambda(split, lam, seed)
    D = operator_norm_of_split(split)
    image = split.T @ nu.Z.basis
    rank = numerical_rank(image) if image.size else 0
    metadata = {
        "nu": nu.nu,
        "D": D,
        "lambda": lam,
        "certified_distance_bound": nu.certified_distance_bound,
        "Z": nu.Z.basis.T.tolist(),
    }
    bound = image_ball_bound(nu.nu, D, lam, field_factor)
    if rank == 0 or D <= lam:
        return CoverResult(
            centers=np.zeros((1, split.m)),
            radius=2 * lam,
            method=CoverMethod.IMAGE,
            norm=split.nd,
            bound=bound,
            metadata=metadata,
            locator=lambda points: np.zeros(len(points), dtype=int),
        )
    if rank < image.shape[1]:
        image = np.linalg.svd(image)[0][:, :rank]
    inner = cover_subspace_ball(Subspace(image), split.nd, D, lam, hilbert=hilbert, seed=seed)
    logger.info(f"Image cover: nu={nu.nu}, D={D:.6g}, λ={lam}, {inner.count} centers (bound {bound:.6g})")
    return CoverResult(
        centers=inner.centers,
        radius=2 * lam,
        method=CoverMethod.IMAGE,
        norm=split.nd,
        bound=bound,
        metadata={**metadata, **inner.metadata},
        locator=inner.locator,
    )
