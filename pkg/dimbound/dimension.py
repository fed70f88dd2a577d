"""Dimension bounds and empirical box-counting dimension

Example:
>>> round(mane_bound(2, 1.0, 1 / 8).bound, 6)
4.584963
>>> round(lemma1_bound(4, 0.5), 12)
2.0
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from enum import Enum
from typing import TYPE_CHECKING, Literal

import numpy as np
import pydantic
from loguru import logger
from scipy.spatial import cKDTree
from scipy.special import gamma
from scipy.stats import linregress

from dimbound.exception import DegenerateBoundError, InvalidInputError, ThresholdNotReachedError
from dimbound.norms import NormDescriptor, PointCloud, numerical_rank
from dimbound.operators import SplitStep, nu_lambda, operator_norm_of_split, step_compose

if TYPE_CHECKING:
    from dimbound.systems import DynamicalSystem

RANK_LIMIT_LAMBDAS = tuple(10.0**-k for k in range(1, 13))
"""Decreasing λ-sequence along which the rank limit bound is evaluated."""

TAIL_THRESHOLD = 0.25


class BoundFormula(str, Enum):
    LEMMA1 = "lemma1"
    MANE = "mane"
    RANK_LIMIT = "rank_limit"
    POWER_ITERATE = "power_iterate"
    SEMILINEAR = "semilinear"


class DimBoundReport(pydantic.BaseModel):
    """A dimension bound together with every input it was computed from

    Args:
        formula: the bound formula used
        bound: the resulting upper bound of the box-counting dimension
        n: dimension of the approximating subspace (ν)
        D: bound of the derivative norm sup ‖Df‖
        lambda_: the contraction threshold λ
        field_factor: 1 for real, 2 for complex spaces
        M: number of balls (lemma1)
        alpha: contraction factor (lemma1)
        p: power of the iterated map (power_iterate)
        intermediate: (λ, bound) pairs along the λ-sequence (rank_limit)
        constants_provenance: where every input came from
    """

    model_config = pydantic.ConfigDict(frozen=True, populate_by_name=True, ser_json_inf_nan="constants")

    formula: BoundFormula
    bound: float = pydantic.Field(ge=0)
    n: int = pydantic.Field(0, ge=0)
    D: float = 0.0
    lambda_: float = pydantic.Field(0.0, alias="lambda")
    field_factor: Literal[1, 2] = 1
    M: float | None = None
    alpha: float | None = None
    p: int | None = None
    intermediate: list[tuple[float, float]] = []
    constants_provenance: dict[str, str] = {}

    def recompute(self) -> float:
        """Evaluates the formula again from the stored inputs"""
        match self.formula:
            case BoundFormula.LEMMA1:
                assert self.M is not None and self.alpha is not None
                return lemma1_bound(self.M, self.alpha)
            case BoundFormula.RANK_LIMIT:
                return float(self.n)
            case _:
                return _mane_value(self.n, self.D, self.lambda_, self.field_factor)


def lemma1_bound(M: float, alpha: float) -> float:
    """log M / (−log α): dimension bound of a set whose α-covers multiply by at most M per iteration

    Example:
    >>> lemma1_bound(1, 0.3), round(lemma1_bound(3, 1 / 3), 12)
    (0.0, 1.0)
    """
    if not 0 < alpha < 1:
        raise InvalidInputError(text=f"The contraction factor must satisfy 0 < α < 1, got {alpha}")
    if M < 1:
        raise InvalidInputError(text=f"The number of balls must be at least 1, got {M}")
    return math.log(M) / -math.log(alpha)


def lemma1_bound_eta(M: float, alpha: float, eta: float) -> float:
    """log M / (−log(α+η)), the bound obtained before letting η → 0"""
    if eta <= 0:
        raise InvalidInputError(text=f"η must be positive, got {eta}")
    return lemma1_bound(M, alpha + eta)


def _mane_value(n: int, D: float, lam: float, field_factor: int) -> float:
    if n == 0:
        return 0.0
    return max(0.0, field_factor * n * math.log((n + 1) * D / lam) / -math.log(2 * lam))


def _check_mane_inputs(n: int, D: float, lam: float, field_factor: int):
    if n < 0:
        raise InvalidInputError(text=f"n must be nonnegative, got {n}")
    if field_factor not in (1, 2):
        raise InvalidInputError(text=f"The field factor is 1 (real) or 2 (complex), got {field_factor}")
    if not lam > 0:
        raise InvalidInputError(text=f"λ must be positive, got {lam}")
    if 2 * lam >= 1:
        raise DegenerateBoundError(text=f"2λ = {2 * lam} >= 1: the bound degenerates since −log(2λ) <= 0")
    if n > 0 and not D > 0:
        raise InvalidInputError(text=f"D must be positive, got {D}")


def mane_bound(
    n: int, D: float, lam: float, field_factor: int = 1, provenance: dict[str, str] | None = None
) -> DimBoundReport:
    """α·n·log((n+1)D/λ) / (−log 2λ)

    Args:
        n: ν_λ of the derivatives
        D: sup of the derivative norms
        lam: contraction threshold, 0 < λ < 1/2
        field_factor: 1 for real, 2 for complex spaces
        provenance: where n, D and λ came from

    Returns:
        The report

    Raises:
        DegenerateBoundError: if 2λ >= 1

    Example:
    >>> mane_bound(1, 0.25, 0.5)
    Traceback (most recent call last):
    ...
    dimbound.exception.DegenerateBoundError: 2λ = 1.0 >= 1: the bound degenerates since −log(2λ) <= 0
    >>> mane_bound(1, 0.05, 0.1).bound
    0.0
    """
    _check_mane_inputs(n, D, lam, field_factor)
    return DimBoundReport(
        formula=BoundFormula.MANE,
        bound=_mane_value(n, D, lam, field_factor),
        n=n,
        D=D,
        lambda_=lam,
        field_factor=field_factor,  # type: ignore[arg-type]
        constants_provenance=provenance or {"n": "input", "D": "input", "lambda": "input"},
    )


def rank_limit_bound(nu: int, D: float, lambdas: Sequence[float] = RANK_LIMIT_LAMBDAS) -> DimBoundReport:
    """The bound ν for derivatives of rank at most ν, with the mane bounds along λ → 0

    Example:
    >>> report = rank_limit_bound(3, 10.0)
    >>> report.bound, [round(b, 2) for _, b in report.intermediate[:2]]
    (3.0, [11.17, 6.36])
    """
    if nu < 0:
        raise InvalidInputError(text=f"ν must be nonnegative, got {nu}")
    intermediate = [(lam, _mane_value(nu, D, lam, 1)) for lam in lambdas] if nu else []
    return DimBoundReport(
        formula=BoundFormula.RANK_LIMIT,
        bound=float(nu),
        n=nu,
        D=D,
        lambda_=0.0,
        intermediate=intermediate,
        constants_provenance={"n": "rank of the derivative", "D": "input", "lambda": "limit λ → 0"},
    )


def least_power(alpha: float, threshold: float = TAIL_THRESHOLD) -> int:
    """Least p >= 1 with α^p < threshold

    Example:
    >>> least_power(0.4), least_power(0.2)
    (2, 1)
    """
    if not 0 < alpha < 1:
        raise InvalidInputError(text=f"No finite power of α={alpha} contracts below {threshold}")
    p = 1
    while alpha**p >= threshold:
        p += 1
    return p


def power_iterate_bound(
    orbits: Sequence[Sequence[SplitStep]], alpha: float, lam: float | None = None, field_factor: int = 1
) -> DimBoundReport:
    """Bound for a map whose derivatives only contract by α per step, via the derivatives of f^p

    Args:
        orbits: per sampled orbit, the steps Df along x₀, f(x₀), f²(x₀), …
        alpha: per-step contraction bound of every step
        lam: threshold for the composed map, by default halfway between 2α^p and 1/2
        field_factor: 1 for real, 2 for complex spaces

    Returns:
        The report with the power p

    Raises:
        InvalidInputError: if α >= 1, an orbit is shorter than p, a step contracts worse than α or λ is too small
    """
    p = least_power(alpha)
    composed = []
    for orbit in orbits:
        if len(orbit) < p:
            raise InvalidInputError(text=f"Orbit of length {len(orbit)} is shorter than the power p={p}")
        for step in orbit[:p]:
            assert step.contraction_bound is not None
            if step.contraction_bound > alpha * (1 + 1e-12):
                raise InvalidInputError(text=f"Step with ‖L‖ <= {step.contraction_bound:.6g} exceeds α={alpha}")
        result = orbit[0]
        for step in orbit[1:p]:
            result = step_compose(step, result)
        composed.append(result)
    if not composed:
        raise InvalidInputError(text="power_iterate_bound needs at least one orbit")
    lam_source = "input" if lam is not None else "halfway between 2α^p and 1/2"
    lam = (2 * alpha**p + 0.5) / 2 if lam is None else lam
    splits = [step.as_split(lam) for step in composed]
    n = max(nu_lambda(split, lam).nu for split in splits)
    D = max(operator_norm_of_split(split) for split in splits)
    _check_mane_inputs(n, D, lam, field_factor)
    logger.info(f"Power iterate bound: p={p}, n={n}, D={D:.6g}, λ={lam:.6g}")
    return DimBoundReport(
        formula=BoundFormula.POWER_ITERATE,
        bound=_mane_value(n, D, lam, field_factor),
        n=n,
        D=D,
        lambda_=lam,
        field_factor=field_factor,  # type: ignore[arg-type]
        p=p,
        constants_provenance={
            "n": f"max nu_lambda over {len(composed)} composed splits",
            "D": "max certified ‖D(f^p)‖ over the composed splits",
            "lambda": lam_source,
            "p": f"least p with α^p < {TAIL_THRESHOLD}",
        },
    )


def _gronwall_rate(M: float, N: float, alpha: float) -> float:
    return (M * N * gamma(1 - alpha)) ** (1 / (1 - alpha))


def _check_semilinear_inputs(M_bar: float, M: float, N: float, alpha: float):
    if not 0 <= alpha < 1:
        raise InvalidInputError(text=f"The fractional exponent must satisfy 0 <= α < 1, got {alpha}")
    if not (M_bar > 0 and M > 0 and N >= 0):
        raise InvalidInputError(text=f"Need M̄ > 0, M > 0 and N >= 0, got M̄={M_bar}, M={M}, N={N}")


def gronwall_bound(M_bar: float, M: float, N: float, alpha: float, t: float) -> float:
    """(M̄/(1−α))·exp((M·N·Γ(1−α))^(1/(1−α))·t)

    Example:
    >>> round(gronwall_bound(1, 1, 1, 0.5, 1), 6)
    46.281385
    >>> gronwall_bound(2, 1, 1, 0.0, 0.0)
    2.0
    """
    _check_semilinear_inputs(M_bar, M, N, alpha)
    return M_bar / (1 - alpha) * math.exp(_gronwall_rate(M, N, alpha) * t)


class SemilinearConstants(pydantic.BaseModel):
    """Constants of a semilinear parabolic problem on a spectral truncation

    Args:
        M: admissibility constant of the semigroup tails
        M_bar: constant of the Gronwall bound
        N: Lipschitz bound of the nonlinearity from X^α
        alpha: fractional power exponent
        eigenvalues: increasing eigenvalues λ₁ < λ₂ < … of A; the tail Q_n decays at eigenvalues[n]
        t: evolution time
        n0: chosen projection index
        lambda_: chosen threshold λ
        constants_provenance: where every constant came from
    """

    model_config = pydantic.ConfigDict(frozen=True, populate_by_name=True)

    M: float = pydantic.Field(gt=0)
    M_bar: float = pydantic.Field(gt=0)
    N: float = pydantic.Field(ge=0)
    alpha: float = pydantic.Field(gt=0, lt=1)
    eigenvalues: list[float]
    t: float = pydantic.Field(1.0, gt=0)
    n0: int | None = None
    lambda_: float | None = pydantic.Field(None, alias="lambda")
    constants_provenance: dict[str, str] = {}

    @pydantic.field_validator("eigenvalues")
    @classmethod
    def _increasing(cls, eigenvalues: list[float]) -> list[float]:
        if not eigenvalues or eigenvalues[0] <= 0 or any(b <= a for a, b in zip(eigenvalues, eigenvalues[1:])):
            raise ValueError("eigenvalues must be positive and strictly increasing")
        return eigenvalues

    @property
    def projection_dims(self) -> list[int]:
        return list(range(len(self.eigenvalues)))

    @pydantic.model_validator(mode="after")
    def _threshold(self) -> SemilinearConstants:
        if self.n0 is not None and self.lambda_ is not None:
            tail = tail_estimate(self, self.n0)
            if not tail < self.lambda_ < TAIL_THRESHOLD:
                raise ValueError(f"need Λ_n0(t) = {tail:.6g} < λ = {self.lambda_} < {TAIL_THRESHOLD}")
        return self


def tail_estimate(constants: SemilinearConstants, n: int, t: float | None = None) -> float:
    """Λ_n(t) = M e^(−λ t) + (M̄MN/(1−α))·e^(κt)·Γ(1−α)/(λ + κ) with κ = (MNΓ(1−α))^(1/(1−α))

    λ is the first eigenvalue of the tail Q_n, i.e. ``eigenvalues[n]``.
    """
    if not 0 <= n < len(constants.eigenvalues):
        raise InvalidInputError(text=f"Projection index {n} outside 0..{len(constants.eigenvalues) - 1}")
    t = constants.t if t is None else t
    M, M_bar, N, alpha = constants.M, constants.M_bar, constants.N, constants.alpha
    _check_semilinear_inputs(M_bar, M, N, alpha)
    rate = constants.eigenvalues[n]
    kappa = _gronwall_rate(M, N, alpha)
    return M * math.exp(-rate * t) + M_bar * M * N / (1 - alpha) * math.exp(kappa * t) * gamma(1 - alpha) / (
        rate + kappa
    )


def choose_projection(constants: SemilinearConstants, threshold: float = TAIL_THRESHOLD) -> tuple[int, list[float]]:
    """Minimal n₀ with Λ_n₀(t) < threshold, and the table of Λ_n(t)

    Raises:
        ThresholdNotReachedError: if no projection index reaches the threshold
    """
    table = [tail_estimate(constants, n) for n in constants.projection_dims]
    for n, value in enumerate(table):
        if value < threshold:
            return n, table
    raise ThresholdNotReachedError(text=f"No projection reaches Λ_n(t) < {threshold}", tail_values=table)


def default_lambda(tail: float) -> float:
    """max(Λ, 1/8) raised by 5%, or the midpoint to 1/4 when that is not below 1/4"""
    lam = 1.05 * max(tail, 0.125)
    return lam if lam < TAIL_THRESHOLD else (tail + TAIL_THRESHOLD) / 2


def semilinear_bound(constants: SemilinearConstants, nu: int, D: float, lam: float | None = None) -> DimBoundReport:
    """ν·log((ν+1)D/λ) / log(1/2λ) for the time-t map of a semilinear problem

    Args:
        constants: the problem constants; n₀ is chosen when missing
        nu: ν of the time-t derivatives, at most n₀
        D: sup of the time-t derivative norms
        lam: threshold with Λ_n₀(t) < λ < 1/4, chosen by :func:`default_lambda` when missing

    Returns:
        The report with the constants' provenance

    Raises:
        InvalidInputError: if ν > n₀ or λ is not admissible
    """
    n0 = constants.n0 if constants.n0 is not None else choose_projection(constants)[0]
    tail = tail_estimate(constants, n0)
    lam = lam if lam is not None else constants.lambda_ if constants.lambda_ is not None else default_lambda(tail)
    if not tail < lam < TAIL_THRESHOLD:
        raise InvalidInputError(text=f"Need Λ_n0(t) = {tail:.6g} < λ = {lam:.6g} < {TAIL_THRESHOLD}")
    if nu > n0:
        raise InvalidInputError(text=f"ν = {nu} exceeds the projection rank n0 = {n0}")
    _check_mane_inputs(nu, D, lam, 1)
    provenance = {
        **constants.constants_provenance,
        "n": f"ν <= rank P_n0 = {n0}",
        "D": "sup of measured time-t derivative norms",
        "lambda": f"Λ_n0(t) = {tail:.6g} < λ < 1/4",
    }
    return DimBoundReport(
        formula=BoundFormula.SEMILINEAR,
        bound=_mane_value(nu, D, lam, 1),
        n=nu,
        D=D,
        lambda_=lam,
        constants_provenance=provenance,
    )


def admissibility_constant(eigenvalues: Sequence[float], beta: float, gamma_: float, t: float) -> float:
    """Smallest M with ‖e^(−At)Q_n‖_(X^γ → X^β) <= M t^(−(β−γ)) e^(−λ t) for every tail Q_n of a diagonal A

    Example:
    >>> admissibility_constant([1.0, 4.0, 9.0], 0.0, 0.0, 1.0)
    1.0
    """
    if beta < gamma_:
        raise InvalidInputError(text=f"Need β >= γ, got β={beta}, γ={gamma_}")
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    delta = beta - gamma_
    worst = 0.0
    for n in range(len(eigenvalues)):
        tail = eigenvalues[n:]
        ratio = (tail**delta) * np.exp(-(tail - eigenvalues[n]) * t) * t**delta
        worst = max(worst, float(ratio.max()))
    return worst


class BoxCountCurve(pydantic.BaseModel):
    """Occupied dyadic grid boxes per scale and the sliding-window slopes"""

    model_config = pydantic.ConfigDict(frozen=True)

    scales: list[float]
    counts: list[int]
    window_slopes: list[float]
    estimate: float
    window: int

    def rows(self) -> list[tuple[float, int, float | None]]:
        """(scale, count, slope of the window starting at that scale)"""
        slopes: list[float | None] = [*self.window_slopes, *([None] * (len(self.scales) - len(self.window_slopes)))]
        return list(zip(self.scales, self.counts, slopes))


def sample_spacing(cloud: PointCloud) -> float:
    """Median ℓ∞ distance of a point to its nearest neighbour"""
    if len(cloud) < 2:
        return 0.0
    distances, _ = cKDTree(cloud.points).query(cloud.points, k=2, p=np.inf)
    return float(np.median(distances[:, 1]))


def boxcount_estimate(
    cloud: PointCloud, nd: NormDescriptor | None = None, eps0: float | None = None, k_max: int = 7, window: int = 4
) -> BoxCountCurve:
    """Box-counting dimension estimate as the largest slope of log N(ε) against −log ε over sliding windows

    N(ε) counts occupied cells of the grid of side ε anchored at the componentwise minimum of the cloud. Grid
    counts and ball covering numbers of any norm differ by factors independent of ε, which do not change slopes.

    Args:
        cloud: the sample of the set
        nd: the norm of the space (only recorded; counts use cubes)
        eps0: largest scale, by default half the largest coordinate extent
        k_max: scales are ε₀·2^(−k) for k = 0…k_max
        window: number of consecutive scales per slope

    Returns:
        The curve with the estimate

    Example:
    >>> segment = PointCloud(np.column_stack([np.linspace(0, 1, 5000, endpoint=False)] * 2))
    >>> round(boxcount_estimate(segment, eps0=0.5, k_max=6).estimate, 6)
    1.0
    """
    points = cloud.points
    extent = float((points.max(axis=0) - points.min(axis=0)).max())
    if extent == 0:
        logger.warning("Box counting a single point: the estimate is 0")
        return BoxCountCurve(scales=[1.0], counts=[1], window_slopes=[0.0], estimate=0.0, window=1)
    eps0 = extent / 2 if eps0 is None else eps0
    scales = [eps0 * 2.0**-k for k in range(k_max + 1)]
    spacing = sample_spacing(cloud)
    if scales[-1] < spacing:
        logger.warning(f"Smallest scale {scales[-1]:.3g} is below the sample spacing {spacing:.3g}")
    origin = points.min(axis=0)
    counts = [len(np.unique(np.floor((points - origin) / eps).astype(np.int64), axis=0)) for eps in scales]
    for eps, count in zip(scales, counts):
        logger.debug(f"Box count ε={eps:.4g}: N={count}")
    if window > len(scales):
        logger.warning(f"Window {window} is larger than the {len(scales)} scales; using one window")
        window = len(scales)
    window = max(window, 2)
    x, y = -np.log(scales), np.log(counts)
    slopes = [float(linregress(x[i : i + window], y[i : i + window]).slope) for i in range(len(scales) - window + 1)]
    return BoxCountCurve(scales=scales, counts=counts, window_slopes=slopes, estimate=max(slopes), window=window)


def ode_rank_bound(system: DynamicalSystem, cloud: PointCloud, D: float) -> DimBoundReport:
    """Rank limit bound with ν the largest numerical rank of the nonlinear part of the vector field's derivative"""
    jacobians = system.rank_jacobian(cloud.points)
    nu = max(numerical_rank(jacobian) for jacobian in jacobians)
    report = rank_limit_bound(nu, D)
    provenance = {**report.constants_provenance, "n": f"max rank of the nonlinear derivative over {len(cloud)} points"}
    return report.model_copy(update={"constants_provenance": provenance})
