"""Finite-dimensional normed spaces

Every norm handled here is a *gauge* ``‖v‖ = ‖G v‖_p`` for an invertible matrix ``G`` and an exponent
``p ∈ [1, ∞]``: the plain ℓ¹/ℓ²/ℓ∞ norms have ``G = I``, weighted norms a diagonal ``G`` and induced norms
the user supplied matrix. Dual norms, operator norms and the restriction of dual norms to subspaces all
follow from that representation.

Example:
>>> nd = NormDescriptor.l2(2)
>>> norm_eval(np.array([3.0, -4.0]), nd)
5.0
>>> dual_norm_eval(np.array([1.0, 1.0]), NormDescriptor.linf(2))
2.0
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Literal

import numpy as np
import pydantic
from loguru import logger
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize

from dimbound.exception import InvalidInputError, NumericalFailure
from dimbound.utils.sampling import DEFAULT_SEED, halton, sign_vertices, sphere_directions

RELATIVE_TOLERANCE = 1e-9
"""Default relative tolerance of numerical comparisons."""

RANK_TOLERANCE = 1e-10
"""Singular values below this fraction of the largest one count as zero."""

DUAL_SAMPLE_DIRECTIONS = 4096
"""Number of quasi-random directions used by the sampled dual norm estimate."""

MAX_VERTEX_ENUMERATION = 1 << 16
"""Largest vertex set that is enumerated explicitly."""

_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}
_CHUNK_ELEMENTS = 4_000_000

BaseKind = Literal["l1", "l2", "linf"]


class NormKind(str, Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"
    WEIGHTED_P = "weighted_p"
    INDUCED = "induced"


_BASE_EXPONENT: dict[str, float] = {"l1": 1.0, "l2": 2.0, "linf": math.inf}


class NormDescriptor(pydantic.BaseModel):
    """Identifies a norm on ℝᵐ

    Args:
        kind: the family of the norm
        dimension: the dimension m of the space
        p: exponent of a weighted norm, ``inf`` allowed
        weights: positive weights of a weighted norm
        matrix: invertible matrix M of an induced norm ‖v‖ = ‖M v‖_base
        base: the norm applied after M for induced norms

    Example:
    >>> NormDescriptor.model_validate({"kind": "weighted_p", "p": 3, "weights": [1, 2]}).dimension
    2
    >>> NormDescriptor.l2(3).model_dump_json(exclude_none=True)
    '{"kind":"l2","dimension":3,"base":"linf"}'
    """

    model_config = pydantic.ConfigDict(frozen=True, ser_json_inf_nan="constants")

    kind: NormKind
    dimension: int = pydantic.Field(gt=0)
    p: float | None = None
    weights: tuple[float, ...] | None = None
    matrix: tuple[tuple[float, ...], ...] | None = None
    base: BaseKind = "linf"

    @pydantic.model_validator(mode="before")
    @classmethod
    def _infer_dimension(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("dimension") is None:
            if data.get("weights") is not None:
                data = {**data, "dimension": len(data["weights"])}
            elif data.get("matrix") is not None:
                data = {**data, "dimension": len(data["matrix"])}
        return data

    @pydantic.model_validator(mode="after")
    def _check_parameters(self) -> NormDescriptor:
        if self.kind is NormKind.WEIGHTED_P:
            if self.p is None or not self.p >= 1:
                raise ValueError("weighted_p norms need an exponent p >= 1")
            if self.weights is None or len(self.weights) != self.dimension:
                raise ValueError("weighted_p norms need one weight per coordinate")
            if not all(math.isfinite(w) and w > 0 for w in self.weights):
                raise ValueError("weights must be positive and finite")
        if self.kind is NormKind.INDUCED:
            if self.matrix is None:
                raise ValueError("induced norms need a matrix")
            matrix = np.asarray(self.matrix, dtype=float)
            if matrix.shape != (self.dimension, self.dimension):
                raise ValueError(f"induced norm matrix must be {self.dimension}x{self.dimension}")
            singular_values = np.linalg.svd(matrix, compute_uv=False)
            if singular_values[-1] <= RANK_TOLERANCE * singular_values[0]:
                raise ValueError("induced norm matrix must be invertible")
        return self

    @classmethod
    def l1(cls, dimension: int) -> NormDescriptor:
        return cls(kind=NormKind.L1, dimension=dimension)

    @classmethod
    def l2(cls, dimension: int) -> NormDescriptor:
        return cls(kind=NormKind.L2, dimension=dimension)

    @classmethod
    def linf(cls, dimension: int) -> NormDescriptor:
        return cls(kind=NormKind.LINF, dimension=dimension)

    @classmethod
    def weighted(cls, p: float, weights) -> NormDescriptor:
        return cls(kind=NormKind.WEIGHTED_P, p=p, weights=tuple(float(w) for w in weights), dimension=len(weights))

    @classmethod
    def induced(cls, matrix, base: BaseKind = "linf") -> NormDescriptor:
        rows = tuple(tuple(float(x) for x in row) for row in np.asarray(matrix, dtype=float))
        return cls(kind=NormKind.INDUCED, matrix=rows, base=base, dimension=len(rows))

    @property
    def exponent(self) -> float:
        """Exponent p of the gauge ‖G v‖_p"""
        if self.kind is NormKind.WEIGHTED_P:
            assert self.p is not None
            return float(self.p)
        if self.kind is NormKind.INDUCED:
            return _BASE_EXPONENT[self.base]
        return _BASE_EXPONENT[self.kind.value]

    @property
    def is_polytope(self) -> bool:
        """Whether the unit ball is a polytope (exponent 1 or ∞)"""
        return self.exponent in (1.0, math.inf)

    @property
    def is_euclidean(self) -> bool:
        """Whether the unit ball is an ellipsoid (exponent 2)"""
        return self.exponent == 2.0

    def gauge(self) -> np.ndarray:
        """The matrix G with ‖v‖ = ‖G v‖_p (read-only)"""
        return _gauge_matrix(self)

    def gauge_inverse(self) -> np.ndarray:
        return _gauge_inverse(self)

    def with_dimension(self, dimension: int) -> NormDescriptor:
        """The same family of norm on a space of another dimension (only for unweighted kinds)"""
        if self.kind not in (NormKind.L1, NormKind.L2, NormKind.LINF):
            raise InvalidInputError(text=f"Cannot change the dimension of a {self.kind.value} norm")
        return NormDescriptor(kind=self.kind, dimension=dimension)


@lru_cache(maxsize=256)
def _gauge_matrix(nd: NormDescriptor) -> np.ndarray:
    match nd.kind:
        case NormKind.WEIGHTED_P:
            weights = np.asarray(nd.weights, dtype=float)
            scale = weights if math.isinf(nd.exponent) else weights ** (1.0 / nd.exponent)
            matrix = np.diag(scale)
        case NormKind.INDUCED:
            matrix = np.asarray(nd.matrix, dtype=float)
        case _:
            matrix = np.eye(nd.dimension)
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=256)
def _gauge_inverse(nd: NormDescriptor) -> np.ndarray:
    inverse = np.linalg.inv(_gauge_matrix(nd))
    inverse.setflags(write=False)
    return inverse


def conjugate_exponent(p: float) -> float:
    """Hölder conjugate q with 1/p + 1/q = 1

    Example:
    >>> conjugate_exponent(1), conjugate_exponent(2), conjugate_exponent(math.inf)
    (inf, 2.0, 1.0)
    """
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def lp_norm(u: np.ndarray, p: float) -> np.ndarray:
    """Plain ℓᵖ norm over the last axis"""
    u = np.abs(u)
    if p == 1:
        return u.sum(axis=-1)
    if p == 2:
        return np.sqrt((u * u).sum(axis=-1))
    if math.isinf(p):
        return u.max(axis=-1, initial=0.0)
    return (u**p).sum(axis=-1) ** (1.0 / p)


def _check_dimension(v: np.ndarray, nd: NormDescriptor, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 0 or v.shape[-1] != nd.dimension:
        raise InvalidInputError(text=f"{what} has dimension {v.shape[-1:]} but the norm acts on ℝ^{nd.dimension}")
    return v


def norm_eval(v: np.ndarray, nd: NormDescriptor):
    """Norm of v (or of every row of a stack of vectors)

    Args:
        v: vector of length m or array of shape (..., m)
        nd: the norm

    Returns:
        float for a single vector, array otherwise

    Example:
    >>> norm_eval(np.zeros(3), NormDescriptor.l1(3))
    0.0
    >>> norm_eval(np.array([3.0, -4.0]), NormDescriptor.linf(2))
    4.0
    """
    v = _check_dimension(v, nd, "Vector")
    result = lp_norm(v @ nd.gauge().T, nd.exponent)
    return float(result) if np.ndim(result) == 0 else result


def dual_norm_eval(f: np.ndarray, nd: NormDescriptor):
    """Dual norm sup{|f·v| : ‖v‖ ≤ 1} of a coefficient vector

    For ‖v‖ = ‖Gv‖_p the dual norm is ‖G⁻ᵀ f‖_q with the conjugate exponent q, which is exact for every
    supported kind.

    Example:
    >>> dual_norm_eval(np.array([1.0, 0.0]), NormDescriptor.linf(2))
    1.0
    >>> round(dual_norm_eval(np.array([1.0, 1.0]), NormDescriptor.l2(2)), 12)
    1.414213562373
    """
    f = _check_dimension(f, nd, "Functional")
    result = lp_norm(f @ nd.gauge_inverse(), conjugate_exponent(nd.exponent))
    return float(result) if np.ndim(result) == 0 else result


def sampled_dual_norm(
    f: np.ndarray, nd: NormDescriptor, n_directions: int = DUAL_SAMPLE_DIRECTIONS, seed: int = DEFAULT_SEED
) -> float:
    """Lower estimate of the dual norm by quasi-random direction sampling

    Used as an oracle against :func:`dual_norm_eval`.
    """
    f = _check_dimension(f, nd, "Functional")
    directions = sphere_directions(n_directions, nd.dimension, seed)
    return float(np.max(np.abs(directions @ f) / norm_eval(directions, nd)))


def unit_ball_vertices(nd: NormDescriptor, half: bool = False) -> np.ndarray:
    """Extreme points of a polytope unit ball

    Args:
        nd: a norm with exponent 1 or ∞
        half: return only one vertex of every antipodal pair

    Returns:
        Array of vertices, one per row

    Raises:
        InvalidInputError: if the unit ball is not a polytope or has too many vertices

    Example:
    >>> unit_ball_vertices(NormDescriptor.l1(2)).tolist()
    [[1.0, 0.0], [0.0, 1.0], [-1.0, -0.0], [-0.0, -1.0]]
    """
    if not nd.is_polytope:
        raise InvalidInputError(text=f"The unit ball of a {nd.kind.value} norm with p={nd.exponent} is not a polytope")
    inverse = nd.gauge_inverse()
    if nd.exponent == 1:
        vertices = inverse.T.copy()
    else:
        if nd.dimension > 16:
            raise InvalidInputError(text=f"Too many vertices to enumerate in dimension {nd.dimension}")
        signs = sign_vertices(nd.dimension)
        vertices = signs[signs[:, 0] > 0] @ inverse.T
        if not half:
            vertices = np.vstack([vertices, -vertices])
        return vertices
    return vertices if half else np.vstack([vertices, -vertices])


def unit_sphere_sample(nd: NormDescriptor, count: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Deterministic points on the unit sphere of nd (Euclidean directions rescaled)"""
    directions = sphere_directions(count, nd.dimension, seed)
    return directions / norm_eval(directions, nd)[:, None]


def unit_ball_sample(nd: NormDescriptor, count: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Deterministic boundary + interior sample of the unit ball of nd

    Half of the points lie on the unit sphere, the other half inside with radii distributed like the volume
    (``u^(1/m)``). Polytope balls additionally get their vertices when there are at most ``count`` of them.
    """
    boundary = unit_sphere_sample(nd, count - count // 2, seed)
    radii = halton(count // 2, 1, seed + 1)[:, 0] ** (1.0 / nd.dimension)
    interior = unit_sphere_sample(nd, count // 2, seed + 2) * radii[:, None]
    parts = [boundary, interior]
    if nd.is_polytope and (nd.exponent == 1 or 2**nd.dimension <= count):
        parts.insert(0, unit_ball_vertices(nd))
    return np.vstack(parts)


def operator_norm(a: np.ndarray, nd_from: NormDescriptor, nd_to: NormDescriptor | None = None) -> float:
    """Operator norm of a matrix between two normed spaces, exact or a certified overestimate

    Exact when the domain ball is a polytope (vertex enumeration), when the dual ball of the target is a
    polytope, or when both norms are Euclidean type; otherwise an upper bound obtained by Schur's test
    (equal exponents) or by comparison with ℓ².

    Example:
    >>> operator_norm(np.array([[1.0, 2.0], [3.0, 4.0]]), NormDescriptor.linf(2))
    7.0
    >>> operator_norm(np.array([[1.0, 2.0], [3.0, 4.0]]), NormDescriptor.l1(2))
    6.0
    """
    nd_to = nd_from if nd_to is None else nd_to
    a = np.asarray(a, dtype=float)
    if a.shape != (nd_to.dimension, nd_from.dimension):
        raise InvalidInputError(
            text=f"Matrix of shape {a.shape} does not map ℝ^{nd_from.dimension} to ℝ^{nd_to.dimension}"
        )
    if not a.size:
        return 0.0
    p_from, p_to = nd_from.exponent, nd_to.exponent
    b = nd_to.gauge() @ a @ nd_from.gauge_inverse()
    if p_from == p_to == 1:
        return float(np.abs(b).sum(axis=0).max())
    if math.isinf(p_from) and math.isinf(p_to):
        return float(np.abs(b).sum(axis=1).max())
    if p_from == p_to == 2:
        return float(np.linalg.norm(b, 2))
    if p_from == 1:
        return float(lp_norm(b.T, p_to).max())
    if p_to in (1.0, math.inf) and (math.isinf(p_to) or nd_to.dimension <= 16):
        # dual side: max over vertices g of the dual ball of ‖bᵀ g‖ in the conjugate of p_from
        if math.isinf(p_to):
            dual_vertices = np.vstack([np.eye(nd_to.dimension), -np.eye(nd_to.dimension)])
        else:
            dual_vertices = sign_vertices(nd_to.dimension)
        return float(lp_norm(dual_vertices @ b, conjugate_exponent(p_from)).max())
    if math.isinf(p_from) and nd_from.dimension <= 16:
        return float(lp_norm(sign_vertices(nd_from.dimension) @ b.T, p_to).max())
    if p_from == p_to:
        q = conjugate_exponent(p_from)
        return float(np.abs(b).sum(axis=0).max() ** (1 / p_from) * np.abs(b).sum(axis=1).max() ** (1 / q))
    m_from, m_to = nd_from.dimension, nd_to.dimension
    to_l2 = m_to ** max(0.0, 1 / p_to - 0.5)
    from_l2 = m_from ** max(0.0, 0.5 - 1 / p_from)
    return float(to_l2 * np.linalg.norm(b, 2) * from_l2)


@dataclass(frozen=True, eq=False)
class Subspace:
    """An n-dimensional subspace of ℝᵐ given by the columns of a basis matrix

    Example:
    >>> Subspace.coordinate(3, [0, 2]).basis.tolist()
    [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]
    >>> Subspace(np.array([[1.0, 2.0], [2.0, 4.0]]))
    Traceback (most recent call last):
    ...
    dimbound.exception.InvalidInputError: Subspace basis has numerical rank 1 < 2
    """

    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2:
            raise InvalidInputError(text="Subspace basis must be a matrix with one basis vector per column")
        if basis.shape[1] > basis.shape[0]:
            raise InvalidInputError(text=f"{basis.shape[1]} vectors cannot be independent in ℝ^{basis.shape[0]}")
        rank = numerical_rank(basis)
        if rank < basis.shape[1]:
            raise InvalidInputError(text=f"Subspace basis has numerical rank {rank} < {basis.shape[1]}")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def span(cls, vectors) -> Subspace:
        """Subspace spanned by the given (independent) vectors"""
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        return cls(vectors.T)

    @classmethod
    def full(cls, m: int) -> Subspace:
        return cls(np.eye(m))

    @classmethod
    def trivial(cls, m: int) -> Subspace:
        return cls(np.zeros((m, 0)))

    @classmethod
    def coordinate(cls, m: int, indices) -> Subspace:
        return cls(np.eye(m)[:, list(indices)])

    @classmethod
    def random(cls, m: int, n: int, rng: np.random.Generator) -> Subspace:
        return cls(rng.standard_normal((m, n)))

    def coordinates(self, points: np.ndarray) -> np.ndarray:
        """Coordinates of points of the subspace with respect to the basis (least squares off the subspace)"""
        return np.asarray(points, dtype=float) @ np.linalg.pinv(self.basis).T


@dataclass(frozen=True, eq=False)
class PointCloud:
    """A finite sample of a compact set K ⊂ ℝᵐ, one point per row"""

    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[0] == 0:
            raise InvalidInputError(text="A point cloud needs at least one point")
        if not np.all(np.isfinite(points)):
            raise InvalidInputError(text="A point cloud must only contain finite coordinates")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def diameter(self, nd: NormDescriptor) -> float:
        """Diameter of the cloud (quadratic in the number of points)"""
        return float(max(_min_distances(self.points, self.points, nd, reduce="max")))


def numerical_rank(matrix: np.ndarray, tolerance: float = RANK_TOLERANCE) -> int:
    """Number of singular values above ``tolerance`` times the largest one

    Example:
    >>> numerical_rank(np.diag([3.0, 1.0, 0.0]))
    2
    >>> numerical_rank(np.zeros((2, 2)))
    0
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0
    singular_values = np.linalg.svd(matrix, compute_uv=False)
    if singular_values[0] == 0:
        return 0
    return int(np.sum(singular_values > tolerance * singular_values[0]))


def _min_distances(a: np.ndarray, b: np.ndarray, nd: NormDescriptor, reduce: str = "min") -> np.ndarray:
    """For every row of a, the smallest (or largest) distance to the rows of b, in chunks"""
    gauge = nd.gauge()
    ga, gb = a @ gauge.T, b @ gauge.T
    chunk = max(1, _CHUNK_ELEMENTS // max(1, gb.shape[0] * gb.shape[1]))
    result = np.empty(ga.shape[0])
    for start in range(0, ga.shape[0], chunk):
        distances = lp_norm(ga[start : start + chunk, None, :] - gb[None, :, :], nd.exponent)
        result[start : start + chunk] = distances.min(axis=1) if reduce == "min" else distances.max(axis=1)
    return result


def distances_to_set(points: np.ndarray, targets: np.ndarray, nd: NormDescriptor) -> np.ndarray:
    """Distance of every point to the nearest target"""
    points = _check_dimension(np.atleast_2d(points), nd, "Point")
    targets = _check_dimension(np.atleast_2d(targets), nd, "Point")
    return _min_distances(points, targets, nd)


def hausdorff_semidist(a: PointCloud, b: PointCloud, nd: NormDescriptor) -> float:
    """Hausdorff semi-distance sup_{x∈A} inf_{y∈B} ‖x − y‖

    Example:
    >>> a = PointCloud(np.array([[0.0, 0.0]]))
    >>> b = PointCloud(np.array([[1.0, 0.0]]))
    >>> hausdorff_semidist(a, b, NormDescriptor.linf(2))
    1.0
    >>> hausdorff_semidist(a, a, NormDescriptor.l2(2))
    0.0
    """
    if a.ambient_dim != b.ambient_dim:
        raise InvalidInputError(text=f"Point clouds live in ℝ^{a.ambient_dim} and ℝ^{b.ambient_dim}")
    return float(distances_to_set(a.points, b.points, nd).max())


@dataclass(frozen=True)
class SubspaceDual:
    """Dual norm of a functional restricted to a subspace, with a unit vector attaining it

    Attributes:
        value: sup{φ·c : ‖B c‖ ≤ 1}
        maximizer: coordinates c with ‖B c‖ = 1 and φ·c = value
    """

    value: float
    maximizer: np.ndarray


def subspace_dual_norm(phi: np.ndarray, basis: np.ndarray, nd: NormDescriptor) -> SubspaceDual:
    """Dual norm of the functional c ↦ φ·c on the space of coordinates c normed by ‖B c‖

    Closed form for Euclidean type norms, a linear program for polytope norms and a smooth convex program
    (minimize ‖B c‖ on the hyperplane φ·c = 1) otherwise. The maximizer is rescaled to norm exactly one.

    Args:
        phi: functional in subspace coordinates (length n)
        basis: m×n basis matrix B of the subspace
        nd: ambient norm

    Returns:
        The value and a maximizing unit vector

    Raises:
        NumericalFailure: if the optimizer does not converge

    Example:
    >>> sd = subspace_dual_norm(np.array([1.0, 1.0]), np.eye(2), NormDescriptor.linf(2))
    >>> round(sd.value, 9), sd.maximizer.round(9).tolist()
    (2.0, [1.0, 1.0])
    """
    phi = np.asarray(phi, dtype=float)
    h = nd.gauge() @ np.asarray(basis, dtype=float)
    n = h.shape[1]
    p = nd.exponent
    if not np.any(phi):
        unit = np.zeros(n)
        unit[0] = 1.0 / float(lp_norm(h[:, 0], p))
        return SubspaceDual(0.0, unit)
    if p == 2:
        w = np.linalg.solve(h.T @ h, phi)
        value = math.sqrt(max(float(phi @ w), 0.0))
        return SubspaceDual(value, w / value)
    if p in (1.0, math.inf):
        c = _polytope_maximizer(phi, h, p)
    else:
        c = _smooth_minimizer(phi, h, p)
    scale = float(lp_norm(h @ c, p))
    c = c / scale
    return SubspaceDual(float(phi @ c), c)


def _polytope_maximizer(phi: np.ndarray, h: np.ndarray, p: float) -> np.ndarray:
    m, n = h.shape
    if math.isinf(p):
        res = linprog(
            -phi,
            A_ub=np.vstack([h, -h]),
            b_ub=np.ones(2 * m),
            bounds=[(None, None)] * n,
            method="highs",
            options=_LP_OPTIONS,
        )
    else:
        identity = np.eye(m)
        a_ub = np.block([[h, -identity], [-h, -identity], [np.zeros((1, n)), np.ones((1, m))]])
        b_ub = np.concatenate([np.zeros(2 * m), [1.0]])
        res = linprog(
            np.concatenate([-phi, np.zeros(m)]),
            A_ub=a_ub,
            b_ub=b_ub,
            bounds=[(None, None)] * n + [(0, None)] * m,
            method="highs",
            options=_LP_OPTIONS,
        )
    if res.status != 0:
        raise NumericalFailure(text=f"Linear program for the subspace dual norm failed: {res.message}")
    return np.asarray(res.x[:n])


def _smooth_minimizer(phi: np.ndarray, h: np.ndarray, p: float) -> np.ndarray:
    c0 = phi / float(phi @ phi)
    if h.shape[1] == 1:
        return c0
    z = null_space(phi[None, :])
    hz, hc0 = h @ z, h @ c0

    def objective(y):
        u = hc0 + hz @ y
        return float(np.sum(np.abs(u) ** p)), (p * np.abs(u) ** (p - 1) * np.sign(u)) @ hz

    res = minimize(objective, np.zeros(z.shape[1]), jac=True, method="BFGS", options={"gtol": 1e-13, "maxiter": 2000})
    if not np.all(np.isfinite(res.x)):
        raise NumericalFailure(text=f"Convex program for the subspace dual norm failed: {res.message}")
    if not res.success:
        logger.debug(f"Subspace dual norm optimizer stopped early: {res.message}")
    return c0 + z @ res.x
