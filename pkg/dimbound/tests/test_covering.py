import math

import numpy as np
import pytest

from dimbound.covering import (
    certify_cover,
    cover_linf_ball,
    cover_subspace_ball,
    covering_number,
    greedy_cover,
    iterated_cover_law,
    sample_subspace_ball,
    subspace_cover_bound,
)
from dimbound.exception import CoverageError, InvalidInputError
from dimbound.norms import NormDescriptor, PointCloud, Subspace, distances_to_set
from dimbound.systems.ifs import cantor_set


@pytest.mark.parametrize(
    "n, r, rho, expected", [(1, 1.0, 0.5, 2), (2, 1.0, 0.5, 4), (3, 1.0, 0.4, 27), (2, 1.0, 1.0, 1)]
)
def test_cover_linf_ball_counts(n, r, rho, expected):
    cover = cover_linf_ball(n, r, rho)
    assert cover.count == expected
    assert cover.bound == expected
    probes = sample_subspace_ball(Subspace.full(n), NormDescriptor.linf(n), r, 2048)
    assert certify_cover(probes, cover, strict=True).passed


def test_cover_radii_must_be_ordered():
    with pytest.raises(InvalidInputError, match="0 < ρ <= r"):
        cover_linf_ball(2, 0.5, 1.0)


@pytest.mark.parametrize("kind", ["l1", "l2", "linf"])
@pytest.mark.parametrize("n", [1, 2])
def test_cover_subspace_ball_is_certified(kind, n):
    nd = NormDescriptor(kind=kind, dimension=4)
    subspace = Subspace.random(4, n, np.random.default_rng(3))
    cover = cover_subspace_ball(subspace, nd, 1.0, 0.25)
    assert cover.count <= cover.bound
    assert cover.bound == subspace_cover_bound(n, 1.0, 0.25)
    probes = sample_subspace_ball(subspace, nd, 1.0, 4096)
    assert certify_cover(probes, cover, strict=True).passed
    # the centers lie in the subspace
    residual = cover.centers.T - subspace.basis @ subspace.coordinates(cover.centers).T
    assert np.allclose(residual, 0.0, atol=1e-9)


def test_hilbert_constant_only_for_euclidean_norms():
    subspace = Subspace.full(2)
    euclidean = cover_subspace_ball(subspace, NormDescriptor.l2(2), 1.0, 0.1, hilbert=True)
    polytope = cover_subspace_ball(subspace, NormDescriptor.l1(2), 1.0, 0.1, hilbert=True)
    assert euclidean.bound == pytest.approx(70.0**2)
    assert polytope.bound == pytest.approx(30.0**2)
    assert euclidean.metadata["hilbert_constant"] and not polytope.metadata["hilbert_constant"]


def test_certificate_rejects_uncovered_probe():
    cover = cover_linf_ball(1, 1.0, 0.5)
    certificate = certify_cover(np.array([[0.9], [2.0]]), cover)
    assert not certificate.passed
    assert certificate.worst_distance == pytest.approx(1.5)
    with pytest.raises(CoverageError, match="exceeds radius"):
        certify_cover(np.array([[2.0]]), cover, strict=True)


def test_greedy_cover_is_an_eps_net():
    cloud = PointCloud(np.random.default_rng(0).uniform(size=(500, 2)))
    nd = NormDescriptor.l2(2)
    cover = greedy_cover(cloud, 0.2, nd)
    assert distances_to_set(cloud.points, cover.centers, nd).max() <= 0.2 * (1 + 1e-12)
    assert certify_cover(cloud.points, cover, inflation=1 + 1e-9).passed


def test_covering_number_uses_closed_balls():
    points = PointCloud(np.array([[0.0], [1.0], [2.0]]))
    cover = covering_number(points, 1.0, NormDescriptor.l2(1))
    assert cover.count == 1
    assert cover.metadata["exact"]


def test_covering_number_is_at_most_the_greedy_count():
    cloud = PointCloud(np.random.default_rng(5).uniform(size=(12, 2)))
    nd = NormDescriptor.l2(2)
    exact = covering_number(cloud, 0.3, nd)
    assert exact.count <= greedy_cover(cloud, 0.3, nd).count
    assert certify_cover(cloud.points, exact, inflation=1 + 1e-9).passed


@pytest.mark.parametrize("kind", ["l1", "l2", "linf"])
def test_covering_number_is_monotone_in_eps(kind):
    cloud = PointCloud(np.random.default_rng(8).uniform(size=(14, 2)))
    nd = NormDescriptor(kind=kind, dimension=2)
    counts = [covering_number(cloud, eps, nd).count for eps in np.linspace(0.05, 2.0, 12)]
    assert counts == sorted(counts, reverse=True)
    # every norm here gives the unit square a diameter of at most 2
    assert counts[-1] == 1


@pytest.mark.slow
@pytest.mark.parametrize("instance", range(200))
def test_random_subspace_cover_instances(instance):
    rng = np.random.default_rng(1000 + instance)
    m = int(rng.integers(2, 5))
    n = int(rng.integers(1, min(m, 3) + 1))
    nd = NormDescriptor(kind=str(rng.choice(["l1", "l2", "linf"])), dimension=m)
    r = float(rng.uniform(0.5, 2.0))
    rho = r * float(rng.uniform(0.2, 0.9))
    subspace = Subspace.random(m, n, rng)
    cover = cover_subspace_ball(subspace, nd, r, rho, seed=instance)
    assert cover.bound == subspace_cover_bound(n, r, rho)
    assert cover.count <= cover.bound
    probes = sample_subspace_ball(subspace, nd, r, 1024, seed=instance)
    assert certify_cover(probes, cover).passed


def test_large_clouds_get_the_greedy_upper_bound():
    cloud = PointCloud(np.linspace(0, 1, 100)[:, None])
    cover = covering_number(cloud, 0.1, NormDescriptor.l2(1))
    assert not cover.metadata["exact"]


def test_iterated_cover_law_on_cantor_set():
    law = iterated_cover_law(cantor_set(8), M=2, alpha=1 / 3, eta=0.01, r0=0.5, k_max=5, nd=NormDescriptor.l2(1))
    assert law.measured[0] == 2
    assert law.holds
    assert law.radii[1] == pytest.approx(0.5 * (1 / 3 + 0.01))


def test_iterated_cover_law_needs_contraction():
    with pytest.raises(InvalidInputError, match="α \\+ η < 1"):
        iterated_cover_law(cantor_set(2), M=2, alpha=0.9, eta=0.2, r0=1, k_max=1, nd=NormDescriptor.l2(1))


def test_subspace_cover_bound_is_polynomial_in_scale():
    assert subspace_cover_bound(3, 2.0, 0.5) == pytest.approx((4 * 4) ** 3)
    assert math.log(subspace_cover_bound(1, 1.0, 1e-3)) == pytest.approx(math.log(2000))
