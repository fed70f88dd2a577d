import itertools

import numpy as np
import pytest

from dimbound.covering import certify_cover
from dimbound.exception import DegenerateBoundError, InvalidInputError
from dimbound.norms import NormDescriptor, norm_eval, operator_norm, unit_ball_sample, unit_sphere_sample
from dimbound.operators import (
    OperatorSplit,
    SplitStep,
    cover_image_ball,
    image_ball_bound,
    is_in_L_lambda,
    nu_lambda,
    operator_norm_of_split,
    sampled_image_distance,
    split_compose,
    split_from_projection,
    step_compose,
)

DIAGONAL = np.diag([3.0, 1.0, 0.1])


def test_nu_lambda_euclidean_uses_singular_values():
    split = OperatorSplit(np.zeros((3, 3)), DIAGONAL, NormDescriptor.l2(3), lambda_budget=0.25)
    result = nu_lambda(split, 0.5)
    assert result.nu == 2
    assert result.distances == pytest.approx([3.0, 1.0, 0.1])
    assert result.certified_distance_bound == pytest.approx(0.1)
    assert result.certified


def test_nu_lambda_adds_contraction_norm():
    L = 0.2 * np.eye(3)
    split = OperatorSplit(L, DIAGONAL, NormDescriptor.l2(3), lambda_budget=0.45)
    result = nu_lambda(split, 0.5)
    assert result.nu == 2
    assert result.distances == pytest.approx([3.2, 1.2, 0.3])


@pytest.mark.parametrize("kind", ["l1", "linf"])
def test_nu_lambda_polytope_norms_are_certified(kind):
    nd = NormDescriptor(kind=kind, dimension=3)
    split = OperatorSplit(np.zeros((3, 3)), DIAGONAL, nd, lambda_budget=0.25)
    result = nu_lambda(split, 0.5)
    assert result.certified
    assert result.nu <= 3
    assert result.certified_distance_bound < 0.5
    # the certificate dominates a sampled distance
    assert sampled_image_distance(split, result.Z) <= result.certified_distance_bound + 1e-9


def test_nu_lambda_of_finite_rank_operator_is_bounded_by_rank():
    C = np.outer([1.0, 2.0, 0.0, 1.0], [0.5, 0.0, 1.0, 1.0])
    split = OperatorSplit(np.zeros((4, 4)), C, NormDescriptor.l1(4), lambda_budget=0.25)
    assert split.rank == 1
    assert nu_lambda(split, 0.25).nu <= 1


def test_nu_lambda_requires_contraction_below_half_lambda():
    split = OperatorSplit(0.2 * np.eye(2), np.zeros((2, 2)), NormDescriptor.l2(2), lambda_budget=0.45)
    assert is_in_L_lambda(split, 0.25)
    with pytest.raises(InvalidInputError, match="is not in"):
        nu_lambda(split, 0.25)


def test_nu_lambda_zero_operator():
    split = OperatorSplit(np.zeros((2, 2)), np.zeros((2, 2)), NormDescriptor.linf(2), lambda_budget=0.25)
    assert nu_lambda(split, 0.1).nu == 0


def test_split_rejects_large_contraction():
    with pytest.raises(InvalidInputError, match="lambda_budget/2"):
        OperatorSplit(0.2 * np.eye(2), np.zeros((2, 2)), NormDescriptor.l2(2), lambda_budget=0.3)


@pytest.mark.parametrize("budget", [-0.1, 0.0, 0.5, 1.0])
def test_split_rejects_budgets_outside_the_open_half_interval(budget):
    with pytest.raises(InvalidInputError, match=r"lambda_budget must lie in \(0, 1/2\)"):
        OperatorSplit(np.zeros((2, 2)), np.eye(2), NormDescriptor.l2(2), lambda_budget=budget)


def test_steps_compose_until_they_can_be_split():
    step = SplitStep(0.6 * np.eye(2), np.diag([1.0, 0.0]), NormDescriptor.l2(2))
    with pytest.raises(InvalidInputError, match="lambda_budget/2"):
        step.as_split(0.45)
    composed = step_compose(step, step_compose(step, step))
    assert composed.contraction_bound == pytest.approx(0.216)
    assert np.allclose(composed.L + composed.C, np.linalg.matrix_power(step.L + step.C, 3))
    assert composed.as_split(0.45).rank == 1


def test_step_compose_of_pure_contractions():
    nd = NormDescriptor.l2(2)
    first = SplitStep(0.3 * np.eye(2), np.zeros((2, 2)), nd)
    composed = step_compose(first, SplitStep(0.4 * np.eye(2), np.zeros((2, 2)), nd))
    assert composed.contraction_bound == pytest.approx(0.12, rel=1e-12)
    assert np.all(composed.C == 0)


def test_split_rejects_wrong_declared_rank():
    with pytest.raises(InvalidInputError, match="numerical rank 2"):
        OperatorSplit(np.zeros((2, 2)), np.eye(2), NormDescriptor.l2(2), lambda_budget=0.25, rank=1)


def test_split_rejects_wrong_shape():
    with pytest.raises(InvalidInputError, match="shape"):
        OperatorSplit(np.zeros((2, 2)), np.eye(3), NormDescriptor.l2(2), lambda_budget=0.25)


def test_split_compose_bounds():
    nd = NormDescriptor.linf(3)
    first = OperatorSplit(0.2 * np.eye(3), np.diag([1.0, 0.0, 0.0]), nd, lambda_budget=0.45)
    second = OperatorSplit(0.1 * np.eye(3), np.diag([0.0, 2.0, 0.0]), nd, lambda_budget=0.4)
    composed = split_compose(first, second)
    assert composed.contraction_bound == pytest.approx(0.02)
    assert composed.rank <= first.rank + second.rank
    assert np.allclose(composed.T, first.T @ second.T)
    assert composed.lambda_budget == pytest.approx(0.09)


def test_split_compose_needs_equal_norms():
    first = OperatorSplit(np.zeros((2, 2)), np.eye(2), NormDescriptor.l1(2), lambda_budget=0.25)
    second = OperatorSplit(np.zeros((2, 2)), np.eye(2), NormDescriptor.l2(2), lambda_budget=0.25)
    with pytest.raises(InvalidInputError, match="differently normed"):
        split_compose(first, second)


def test_split_from_projection():
    T = np.array([[0.5, 0.1], [0.01, 0.02]])
    split = split_from_projection(T, np.diag([1.0, 0.0]), NormDescriptor.l2(2), lambda_budget=0.2)
    assert np.allclose(split.T, T)
    assert split.rank == 1
    assert operator_norm_of_split(split) == pytest.approx(np.linalg.norm(T, 2))


@pytest.mark.parametrize("kind", ["l2", "linf"])
def test_cover_image_ball_is_certified(kind):
    nd = NormDescriptor(kind=kind, dimension=3)
    split = OperatorSplit(np.zeros((3, 3)), DIAGONAL, nd, lambda_budget=0.25)
    cover = cover_image_ball(split, 0.25)
    assert cover.radius == 0.5
    assert cover.count <= cover.bound
    probes = unit_ball_sample(nd, 4096) @ split.T.T
    assert certify_cover(probes, cover, strict=True).passed


def test_cover_image_ball_of_small_operator_is_one_ball():
    split = OperatorSplit(np.zeros((2, 2)), 0.1 * np.eye(2), NormDescriptor.l2(2), lambda_budget=0.25)
    cover = cover_image_ball(split, 0.25)
    assert cover.count == 1


def test_cover_image_ball_needs_lambda_below_half():
    split = OperatorSplit(np.zeros((2, 2)), np.eye(2), NormDescriptor.l2(2), lambda_budget=0.25)
    with pytest.raises(DegenerateBoundError, match="2λ < 1"):
        cover_image_ball(split, 0.5)


def test_image_ball_bound():
    assert image_ball_bound(0, 3.0, 0.25) == 1.0
    assert image_ball_bound(2, 3.0, 0.25) == pytest.approx(36.0**2)
    assert image_ball_bound(1, 0.1, 0.25) == 1.0


@pytest.mark.parametrize("kind", ["l1", "l2", "linf"])
def test_nu_lambda_is_non_increasing_in_lambda(kind):
    C = np.random.default_rng(17).standard_normal((4, 4)) * np.array([3.0, 1.0, 0.3, 0.05])
    split = OperatorSplit(np.zeros((4, 4)), C, NormDescriptor(kind=kind, dimension=4), lambda_budget=0.25)
    nus = [nu_lambda(split, lam).nu for lam in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)]
    assert nus == sorted(nus, reverse=True)


def _random_norm(rng: np.random.Generator, m: int) -> NormDescriptor:
    return NormDescriptor(kind=str(rng.choice(["l1", "l2", "linf"])), dimension=m)


def _contraction(rng: np.random.Generator, nd: NormDescriptor, norm: float) -> np.ndarray:
    matrix = rng.standard_normal((nd.dimension, nd.dimension))
    return matrix * (norm / operator_norm(matrix, nd))


def _finite_rank(rng: np.random.Generator, m: int, k: int) -> np.ndarray:
    return rng.standard_normal((m, k)) @ rng.standard_normal((k, m))


@pytest.mark.parametrize("instance", range(100))
def test_random_splits_keep_the_contraction_below_half_the_budget(instance):
    rng = np.random.default_rng(2000 + instance)
    m = int(rng.integers(2, 6))
    nd = _random_norm(rng, m)
    budget = float(rng.uniform(0.01, 0.49))
    k = int(rng.integers(0, m + 1))
    C = _finite_rank(rng, m, k)
    split = OperatorSplit(_contraction(rng, nd, budget / 2 * float(rng.uniform(0.1, 0.95))), C, nd, budget)
    assert split.contraction_bound < budget / 2
    assert split.rank == k
    images = unit_sphere_sample(nd, 512, seed=instance) @ split.L.T
    assert norm_eval(images, nd).max() <= split.contraction_bound * (1 + 1e-9)
    with pytest.raises(InvalidInputError, match="lambda_budget/2"):
        OperatorSplit(_contraction(rng, nd, budget / 2 * float(rng.uniform(1.01, 3.0))), C, nd, budget)


def _coordinate_oracle(diagonal: np.ndarray, lam: float) -> tuple[int, float]:
    """Smallest n such that keeping n coordinates leaves every dropped |dᵢ| below λ, with that largest |dᵢ|"""
    m = len(diagonal)
    for n in range(m + 1):
        best = min(
            max((abs(diagonal[i]) for i in range(m) if i not in kept), default=0.0)
            for kept in itertools.combinations(range(m), n)
        )
        if best < lam:
            return n, best
    raise AssertionError("keeping every coordinate leaves nothing to drop")


@pytest.mark.parametrize("instance", range(50))
def test_nu_lambda_of_diagonal_operators_matches_coordinate_search(instance):
    rng = np.random.default_rng(3000 + instance)
    m = int(rng.integers(1, 7))
    diagonal = rng.uniform(-3.0, 3.0, size=m)
    lam = float(rng.uniform(0.05, 0.49))
    split = OperatorSplit(np.zeros((m, m)), np.diag(diagonal), NormDescriptor.l2(m), lambda_budget=0.25)
    nu, distance = _coordinate_oracle(diagonal, lam)
    result = nu_lambda(split, lam)
    assert result.nu == nu
    assert result.certified_distance_bound == pytest.approx(distance, abs=1e-12)


@pytest.mark.parametrize("instance", range(50))
def test_random_compositions(instance):
    rng = np.random.default_rng(4000 + instance)
    m = int(rng.integers(2, 6))
    nd = _random_norm(rng, m)
    splits = []
    for _ in range(2):
        budget = float(rng.uniform(0.05, 0.49))
        L = _contraction(rng, nd, budget / 2 * float(rng.uniform(0.1, 0.95)))
        splits.append(OperatorSplit(L, _finite_rank(rng, m, int(rng.integers(0, 3))), nd, budget))
    first, second = splits
    composed = split_compose(first, second)
    assert composed.contraction_bound == pytest.approx(first.contraction_bound * second.contraction_bound, rel=1e-12)
    assert operator_norm(composed.L, nd) <= composed.contraction_bound * (1 + 1e-9)
    assert composed.rank <= first.rank + second.rank
    assert composed.lambda_budget == pytest.approx(first.lambda_budget * second.lambda_budget / 2)
    assert np.allclose(composed.T, first.T @ second.T, atol=1e-9)
