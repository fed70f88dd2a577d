import math

import numpy as np
import pytest
from scipy.linalg import expm

from dimbound.dimension import boxcount_estimate
from dimbound.exception import ConfigurationError, DivergenceError, InvalidInputError
from dimbound.norms import NormDescriptor, PointCloud
from dimbound.systems import (
    build_system,
    equilibria,
    flow,
    initial_grid,
    jacobian_residual,
    negative_invariance_gap,
    sample_attractor,
    simulate,
    system_names,
    time_T_derivatives,
    unstable_manifold_seeds,
    unstable_subspace,
)
from dimbound.systems.chafee_infante import GalerkinParabolic, chafee_infante_galerkin
from dimbound.systems.damped import NONLINEARITIES, dissipativity_violations
from dimbound.systems.ifs import AffineIFS, cantor_set, iterate_ifs, sample_ifs, sierpinski


def test_registry():
    assert {"chafee_infante", "damped_coupled", "decay", "linear"} <= set(system_names())
    with pytest.raises(ConfigurationError, match="Unknown system"):
        build_system("lorenz")
    with pytest.raises(ConfigurationError, match="Invalid parameters"):
        build_system("decay", {"speed": 2})


@pytest.mark.parametrize(
    "name, parameters",
    [
        ("linear", {"matrix": [[0.0, 1.0], [-2.0, -0.5]]}),
        ("damped_coupled", {"k": 1}),
        ("damped_coupled", {"k": 2, "beta": 0.5}),
        ("chafee_infante", {"n_modes": 6}),
        ("damped_coupled", {"k": 1, "f": (lambda x: x - x**5, lambda x: 1 - 5 * x**4)}),
    ],
    ids=["linear", "damped_1", "damped_2", "chafee_infante", "damped_custom"],
)
def test_jacobians_match_finite_differences(name, parameters):
    system = build_system(name, parameters)
    points = np.random.default_rng(2).uniform(-1, 1, size=(5, system.state_dim))
    assert jacobian_residual(system, points) < 1e-6


@pytest.mark.parametrize("name", system_names())
def test_every_registered_system_has_a_consistent_jacobian(name):
    system = build_system(name, {"matrix": [[0.0, 1.0], [-1.0, -0.2]]} if name == "linear" else None)
    points = np.random.default_rng(4).uniform(-1, 1, size=(5, system.state_dim))
    assert jacobian_residual(system, points) < 1e-5


def test_decay_trajectory():
    trajectory = simulate(build_system("decay", {"dim": 2, "rate": 0.5}), [1.0, -2.0], T=2.0, dt=1e-2, stride=10)
    assert len(trajectory.times) == 21
    assert trajectory.final == pytest.approx(np.array([1.0, -2.0]) * math.exp(-1.0), rel=1e-8)
    assert trajectory.rows()[0] == [0.0, 1.0, -2.0]


def test_simulate_checks_initial_state():
    with pytest.raises(InvalidInputError, match="Initial state"):
        simulate(build_system("decay", {"dim": 2}), [1.0], T=1.0)


def test_divergence_is_reported():
    growth = build_system("linear", {"matrix": [[1.0]]})
    with pytest.raises(DivergenceError, match="diverged") as info:
        simulate(growth, [1.0], T=30.0, dt=1e-2)
    assert info.value.time == pytest.approx(math.log(1e8), abs=0.05)


def test_time_T_derivatives_of_linear_system():
    a = np.array([[-1.0, 2.0], [0.0, -3.0]])
    system = build_system("linear", {"matrix": a.tolist()})
    derivatives = time_T_derivatives(system, np.zeros((3, 2)), T=0.7, dt=1e-3)
    assert derivatives.shape == (3, 2, 2)
    assert np.allclose(derivatives, expm(0.7 * a), atol=1e-10)


def test_time_T_derivatives_match_finite_differences_of_flow():
    system = build_system("damped_coupled", {"k": 1})
    x = np.array([0.3, -0.2])
    derivative = time_T_derivatives(system, x, T=1.0, dt=1e-3)[0]
    step = 1e-6
    columns = [(flow(system, x + e, 1.0) - flow(system, x - e, 1.0)) / (2 * step) for e in step * np.eye(2)]
    assert np.allclose(derivative, np.column_stack(columns), atol=1e-6)


def test_damped_equilibria():
    system = build_system("damped_coupled", {"k": 1})
    found = equilibria(system, [[0.9, 0.1], [-1.2, 0.0], [0.05, 0.0], [1.1, 0.0]])
    assert np.allclose(found, [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]], atol=1e-9)


def test_grid_trajectories_settle_on_equilibria():
    system = build_system("damped_coupled", {"k": 1})
    cloud = sample_attractor(
        system, n_initial=6, t_transient=40.0, t_sample=5.0, dt=1e-2, stride=5, manifold_offset=None
    )
    assert len(cloud) == 6 * 101
    distances = np.abs(np.abs(cloud.points[:, 0]) - 1.0)
    assert np.all((distances < 1e-4) | (np.abs(cloud.points[:, 0]) < 1e-4))


def test_unstable_subspace_of_the_damped_saddle():
    system = build_system("damped_coupled", {"k": 1, "beta": 3.0})
    basis = unstable_subspace(system, np.zeros(2))
    assert basis.shape == (2, 1)
    # eigenvector (1, μ) of the eigenvalue μ = (−β + √(β² + 4)) / 2
    assert basis[1, 0] / basis[0, 0] == pytest.approx((math.sqrt(13) - 3) / 2, rel=1e-9)
    assert unstable_subspace(system, np.array([1.0, 0.0])).shape == (2, 0)


def test_unstable_subspace_of_a_complex_pair():
    system = build_system("linear", {"matrix": [[1.0, -2.0], [2.0, 1.0]]})
    basis = unstable_subspace(system, np.zeros(2))
    assert np.allclose(basis.T @ basis, np.eye(2))


def test_unstable_manifold_seeds():
    line = unstable_manifold_seeds(build_system("damped_coupled", {"k": 1}), np.zeros((1, 2)), 1e-3)
    assert line.shape == (2, 2)
    assert np.allclose(line[0], -line[1])
    plane = unstable_manifold_seeds(build_system("damped_coupled", {"k": 2}), np.zeros((1, 4)), 1e-3, directions=8)
    assert plane.shape == (8, 4)
    assert np.allclose(np.linalg.norm(plane, axis=1), 1e-3)
    assert len(unstable_manifold_seeds(build_system("decay", {"dim": 3}), np.zeros((1, 3)), 1e-3)) == 0


def test_attractor_sample_follows_the_heteroclinic_orbits():
    system = build_system("damped_coupled", {"k": 1, "beta": 3.0})
    cloud = sample_attractor(system, n_initial=4, t_transient=40.0, t_sample=30.0, dt=1e-2, stride=2)
    x = cloud.points[:, 0]
    for low, high in [(0.2, 0.4), (0.4, 0.6), (0.6, 0.8)]:
        assert np.any((x > low) & (x < high)) and np.any((-x > low) & (-x < high))
    assert boxcount_estimate(cloud).estimate == pytest.approx(1.0, abs=0.15)


@pytest.mark.slow
def test_chafee_infante_attractor_is_a_curve():
    _, system = chafee_infante_galerkin(16, 10.5)
    cloud = sample_attractor(system, n_initial=4, t_transient=5.0, t_sample=35.0, dt=1e-3, stride=20)
    first_mode = cloud.points[:, 0]
    amplitude = math.sqrt((10.5 - math.pi**2) / 1.5)
    assert np.any(np.abs(first_mode) < amplitude / 2) and np.any(np.abs(first_mode) > 0.9 * amplitude)
    assert boxcount_estimate(cloud).estimate == pytest.approx(1.0, abs=0.3)


def test_damped_rejects_unknown_force():
    with pytest.raises(ConfigurationError, match="Unknown force"):
        build_system("damped_coupled", {"f": "quintic"})
    with pytest.raises(InvalidInputError, match="β"):
        build_system("damped_coupled", {"beta": 0.0})



def test_damped_accepts_a_force_with_its_derivative():
    cubic = NONLINEARITIES["cubic"]
    custom = build_system("damped_coupled", {"k": 2, "beta": 0.5, "f": (cubic.value, cubic.derivative)})
    shipped = build_system("damped_coupled", {"k": 2, "beta": 0.5})
    points = np.random.default_rng(3).uniform(-1.5, 1.5, size=(7, 4))
    assert np.allclose(custom.vector_field(points), shipped.vector_field(points))
    assert np.allclose(custom.jacobian(points), shipped.jacobian(points))
    assert custom.metadata["f"] == "custom"


def test_damped_scalar_force_derivative_is_reshaped():
    system = build_system("damped_coupled", {"f": (np.sin, np.cos), "radius": 1.0})
    assert system.nonlinear_jacobian(np.array([[0.0, 2.0]])).tolist() == [[[0.0, 0.0], [1.0, 0.0]]]


def test_damped_rejects_a_malformed_force_pair():
    with pytest.raises(ConfigurationError, match="pair"):
        build_system("damped_coupled", {"f": (np.sin,)})
    with pytest.raises(ConfigurationError, match="pair"):
        build_system("damped_coupled", {"f": ["sin", "cos"]})

def test_dissipativity_of_shipped_forces():
    assert dissipativity_violations(NONLINEARITIES["cubic"], 2, radius=2.0) == 0
    assert dissipativity_violations(NONLINEARITIES["linear"], 3, radius=0.5) == 0


def test_damped_nonlinear_part_has_rank_k():
    system = build_system("damped_coupled", {"k": 3})
    jacobians = system.rank_jacobian(np.random.default_rng(0).normal(size=(4, 6)))
    assert [np.linalg.matrix_rank(j) for j in jacobians] == [3, 3, 3, 3]


def test_negative_invariance_of_equilibria():
    system = build_system("damped_coupled", {"k": 1})
    cloud = PointCloud(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]]))
    assert negative_invariance_gap(system, cloud, T=1.0, dt=1e-2) < 1e-12


def test_initial_grid():
    system = build_system("decay", {"dim": 3})
    grid = initial_grid(system, 5)
    assert grid.shape == (5, 3)
    assert np.all(grid[0] == 0)
    assert np.all(np.abs(grid) <= system.spread)
    with pytest.raises(InvalidInputError, match="initial condition"):
        initial_grid(system, 0)


def test_galerkin_spectrum():
    model, system = chafee_infante_galerkin(n_modes=8, lambda_param=10.5)
    assert model.shift == pytest.approx(10.5 - math.pi**2 + 1)
    assert model.eigenvalues[0] == pytest.approx(1.0)
    assert np.all(np.diff(model.eigenvalues) > 0)
    assert system.state_dim == 8
    assert system.model is model


def test_galerkin_needs_enough_modes():
    with pytest.raises(InvalidInputError, match="at least 4 modes"):
        GalerkinParabolic(n_modes=2, lambda_param=10.5)


def test_galerkin_projection_of_grid_values_is_exact():
    model = GalerkinParabolic(n_modes=6, lambda_param=5.0)
    a = np.array([0.3, -0.1, 0.05, 0.0, 0.02, -0.01])
    assert np.allclose(model.project(model.to_grid(a)), a, atol=1e-12)


def test_galerkin_tail_norm_is_first_tail_eigenvalue():
    model = GalerkinParabolic(n_modes=6, lambda_param=10.5)
    for n in range(6):
        assert model.tail_norm(n, 0.1) == pytest.approx(math.exp(-0.1 * model.eigenvalues[n]))


def test_galerkin_admissibility_constant_warns_above_configured_m(caplog):
    model = GalerkinParabolic(n_modes=8, lambda_param=10.5, M=1.0)
    measured = model.admissibility_constant(1.0)
    assert measured > 1.0
    assert "exceeds the configured M" in caplog.text


def test_galerkin_equilibria():
    model, system = chafee_infante_galerkin(n_modes=8, lambda_param=10.5)
    found = equilibria(system, model.equilibrium_guesses())
    assert len(found) == 3
    assert np.allclose(found[1], 0.0)
    assert np.allclose(found[0], -found[2], atol=1e-8)


def test_galerkin_constants_reach_threshold():
    model, system = chafee_infante_galerkin(n_modes=8, lambda_param=10.5)
    points = equilibria(system, model.equilibrium_guesses())
    constants = model.constants(points, t=1.0)
    assert constants.M >= 1.0
    assert constants.M_bar == constants.M
    assert constants.N > 0
    assert set(constants.constants_provenance) >= {"M", "M_bar", "N", "alpha", "eigenvalues"}
    assert system.nd.kind.value == "induced"


def test_cantor_iteration():
    level2 = iterate_ifs(AffineIFS(np.full((2, 1, 1), 1 / 3), np.array([[0.0], [2 / 3]])), 2)
    assert len(level2) == 4
    assert len(cantor_set(5)) == 64


def test_sierpinski_sample_lies_in_triangle():
    cloud = sample_ifs(sierpinski(), 2000)
    assert sierpinski().contraction(NormDescriptor.l2(2)) == pytest.approx(0.5)
    assert np.all(cloud.points >= -1e-12)
    assert np.all(cloud.points.sum(axis=1) <= 1 + 1e-12)


def test_ifs_shape_validation():
    with pytest.raises(InvalidInputError, match="Incompatible IFS shapes"):
        AffineIFS(np.ones((2, 2, 2)), np.ones((3, 2)))
