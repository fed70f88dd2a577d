"""Runs one configured experiment and writes its report and data files

Every command writes ``report.json`` (the resolved configuration without the output directory, and the results)
and ``run.log`` into the output directory; commands producing curves, covers or trajectories add CSV files.
Reruns of the same configuration reproduce all files byte for byte.
"""

import math
from dataclasses import dataclass
from functools import partial, singledispatch
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from dimbound.auerbach import auerbach_basis, bm_certificate
from dimbound.covering import certify_cover, cover_linf_ball, cover_subspace_ball, sample_subspace_ball
from dimbound.dimension import (
    BoundFormula,
    DimBoundReport,
    boxcount_estimate,
    choose_projection,
    default_lambda,
    lemma1_bound,
    mane_bound,
    ode_rank_bound,
    rank_limit_bound,
    semilinear_bound,
    tail_estimate,
)
from dimbound.exception import ConfigurationError
from dimbound.models import (
    AuerbachTask,
    BoundTask,
    BoxcountTask,
    CloudSpec,
    CoverTask,
    NuLambdaTask,
    PipelineConfig,
    PipelineTask,
    SimulateTask,
    SubspaceSpec,
)
from dimbound.norms import NormDescriptor, NormKind, PointCloud, unit_ball_sample
from dimbound.operators import (
    OperatorSplit,
    cover_image_ball,
    nu_lambda,
    operator_norm_of_split,
    split_from_projection,
)
from dimbound.systems import (
    DynamicalSystem,
    build_system,
    initial_grid,
    negative_invariance_gap,
    sample_attractor,
    simulate,
    time_T_derivatives,
)
from dimbound.systems.ifs import cantor_set, sample_ifs, sierpinski
from dimbound.utils.runtime import run_concurrently
from dimbound.utils.sampling import halton
from dimbound.utils.serializer import encode, write_csv, write_json

BOXCOUNT_TOLERANCE = 0.1
"""Accuracy of the box-counting estimate when comparing it with a theoretical bound."""

INVARIANCE_POINTS = 1024

LOG_FORMAT = "{level: <8} | {name}:{function} - {message}"

Results = dict[str, Any]


@dataclass
class RunResult:
    report: dict[str, Any]
    files: list[Path]


def run(config: PipelineConfig) -> RunResult:
    """Executes the configured command

    Args:
        config: the experiment

    Returns:
        The report and the written files
    """
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    sink = logger.add(out / "run.log", format=LOG_FORMAT, level="INFO", mode="w")
    try:
        logger.info(f"Experiment '{config.experiment}': {config.task.command} (seed {config.seed})")
        results, files = execute(config.task, config, out)
        report = {
            "experiment": config.experiment,
            "command": config.task.command,
            "config": config.model_dump(mode="json", by_alias=True, exclude={"output_dir"}),
            "results": encode(results),
        }
        files = [*files, write_json(out / "report.json", report)]
        logger.info(f"Wrote {', '.join(sorted(path.name for path in files))}")
    finally:
        logger.remove(sink)
    return RunResult(report, [*files, out / "run.log"])


@singledispatch
def execute(task, config: PipelineConfig, out: Path) -> tuple[Results, list[Path]]:
    raise NotImplementedError(type(task))


@execute.register
def _(task: AuerbachTask, config: PipelineConfig, out: Path):
    subspace = task.subspace.build(task.norm.dimension, config.seed)
    basis = auerbach_basis(subspace, task.norm, restarts=task.restarts, seed=config.seed)
    certificate = bm_certificate(basis)
    logger.info(f"Auerbach basis of dimension {basis.n}: ‖J‖·‖J⁻¹‖ = {certificate.product:.6g}")
    results = {
        "n": basis.n,
        "vectors": basis.vectors.T,
        "functionals": basis.functionals,
        "functional_norms": basis.functional_norms,
        "duality_residual": basis.duality_residual,
        "functional_norm_excess": basis.functional_norm_excess,
        "determinant": basis.determinant,
        "J_norm_bound": certificate.J_norm_bound,
        "Jinv_norm_bound": certificate.Jinv_norm_bound,
        "product": certificate.product,
        "bm_distance_bound": certificate.bm_distance_bound,
        "classical_constant": certificate.classical_constant,
    }
    return results, []


def _write_centers(path: Path, centers: np.ndarray) -> Path:
    return write_csv(path, [f"x{i + 1}" for i in range(centers.shape[1])], centers.tolist())


@execute.register
def _(task: CoverTask, config: PipelineConfig, out: Path):
    nd = task.norm
    subspace = task.subspace.build(nd.dimension, config.seed)
    if task.subspace == SubspaceSpec() and nd.kind is NormKind.LINF:
        cover = cover_linf_ball(nd.dimension, task.r, task.rho)
    else:
        cover = cover_subspace_ball(
            subspace, nd, task.r, task.rho, hilbert=config.covering.hilbert_constant, seed=config.seed
        )
    probes = sample_subspace_ball(subspace, nd, task.r, config.covering.certificate_samples, config.seed)
    certificate = certify_cover(probes, cover, config.covering.certificate_inflation, strict=True)
    logger.info(f"Cover with {cover.count} centers of radius {cover.radius} (bound {cover.bound})")
    results = {"count": cover.count, "bound": cover.bound, "radius": cover.radius, "method": cover.method}
    results |= {"metadata": cover.metadata, "certificate": certificate}
    return results, [_write_centers(out / "centers.csv", cover.centers)]


@execute.register
def _(task: NuLambdaTask, config: PipelineConfig, out: Path):
    nd = task.norm
    C = np.asarray(task.split.C, dtype=float)
    L = np.zeros_like(C) if task.split.L is None else np.asarray(task.split.L, dtype=float)
    split = OperatorSplit(L, C, nd, task.split.lambda_budget)
    result = nu_lambda(split, task.lambda_, config.seed)
    results: Results = {
        "nu": result.nu,
        "certified_distance_bound": result.certified_distance_bound,
        "distances": result.distances,
        "method": result.method,
        "certified": result.certified,
        "Z": result.Z.basis.T,
        "D": operator_norm_of_split(split),
        "contraction_bound": split.contraction_bound,
    }
    files = []
    if task.cover:
        cover = cover_image_ball(
            split,
            task.lambda_,
            hilbert=config.covering.hilbert_constant,
            field_factor=config.dimension.field_factor,
            seed=config.seed,
        )
        probes = unit_ball_sample(nd, config.covering.certificate_samples, config.seed) @ split.T.T
        certificate = certify_cover(probes, cover, config.covering.certificate_inflation, strict=True)
        results["cover"] = {"count": cover.count, "bound": cover.bound, "radius": cover.radius}
        results["cover"]["certificate"] = certificate
        files.append(_write_centers(out / "centers.csv", cover.centers))
    return results, files


@execute.register
def _(task: BoundTask, config: PipelineConfig, out: Path):
    report: DimBoundReport
    match task.formula:
        case BoundFormula.MANE:
            report = mane_bound(task.n, task.D, task.lambda_, config.dimension.field_factor)
        case BoundFormula.RANK_LIMIT:
            report = rank_limit_bound(task.n, task.D)
        case BoundFormula.LEMMA1:
            if task.M is None or task.alpha is None:
                raise ConfigurationError(text="The lemma1 formula needs M and alpha")
            report = DimBoundReport(
                formula=BoundFormula.LEMMA1, bound=lemma1_bound(task.M, task.alpha), M=task.M, alpha=task.alpha
            )
        case _:
            raise ConfigurationError(text=f"The {task.formula.value} bound is computed by the pipeline command")
    logger.info(f"{report.formula.value} bound: {report.bound:.6g}")
    return report, []


def load_cloud(spec: CloudSpec, seed: int) -> PointCloud:
    """The point cloud a boxcount task refers to"""
    match spec.kind:
        case "points":
            if spec.points is None:
                raise ConfigurationError(text="A cloud of kind 'points' needs points")
            return PointCloud(np.asarray(spec.points, dtype=float))
        case "csv":
            if spec.path is None:
                raise ConfigurationError(text="A cloud of kind 'csv' needs a path")
            try:
                points = np.loadtxt(spec.path, delimiter=",", skiprows=1, ndmin=2)
            except (OSError, ValueError) as exc:
                raise ConfigurationError(text=f"Cannot read the point cloud {spec.path}: {exc}") from exc
            return PointCloud(points)
        case "cantor":
            return cantor_set(spec.level)
        case "sierpinski":
            return sample_ifs(sierpinski(), spec.count, seed)
        case "square":
            return PointCloud(halton(spec.count, 2, seed))
        case _:
            return PointCloud(np.repeat(halton(spec.count, 1, seed), 2, axis=1))


def _write_curve(path: Path, curve) -> Path:
    rows = [(eps, count, slope, -math.log(eps), math.log(count)) for eps, count, slope in curve.rows()]
    return write_csv(path, ["scale", "count", "slope", "neg_log_scale", "log_count"], rows)


@execute.register
def _(task: BoxcountTask, config: PipelineConfig, out: Path):
    cloud = load_cloud(task.cloud, config.seed)
    options = config.dimension
    nd = NormDescriptor.linf(cloud.ambient_dim)
    curve = boxcount_estimate(cloud, nd, options.eps0, options.k_max, options.window)
    logger.info(f"Box-counting estimate of {len(cloud)} points: {curve.estimate:.6g}")
    results = {"points": len(cloud), "curve": curve, "estimate": curve.estimate}
    return results, [_write_curve(out / "boxcount.csv", curve)]


def _system(config: PipelineConfig) -> DynamicalSystem:
    assert config.system is not None
    return build_system(config.system.name, config.system.parameters)


@execute.register
def _(task: SimulateTask, config: PipelineConfig, out: Path):
    system = _system(config)
    x0 = np.asarray(task.x0, dtype=float) if task.x0 is not None else initial_grid(system, 2, config.seed)[1]
    trajectory = simulate(system, x0, task.T, config.sampling.dt, config.sampling.stride)
    header = ["t", *(f"x{i + 1}" for i in range(system.state_dim))]
    results = {"x0": x0, "final": trajectory.final, "samples": len(trajectory.times)}
    results["max_state_norm"] = float(np.abs(trajectory.states).max())
    return results, [write_csv(out / "trajectory.csv", header, trajectory.rows())]


def _subsample(cloud: PointCloud, count: int) -> np.ndarray:
    indices = np.unique(np.linspace(0, len(cloud) - 1, min(count, len(cloud))).round().astype(int))
    return cloud.points[indices]


@execute.register
def _(task: PipelineTask, config: PipelineConfig, out: Path):
    system = _system(config)
    sampling, options = config.sampling, config.dimension
    nd = system.nd
    cloud = sample_attractor(
        system,
        sampling.n_initial,
        sampling.t_transient,
        sampling.t_sample,
        sampling.dt,
        sampling.stride,
        config.seed,
        sampling.manifold_offset,
        sampling.manifold_directions,
    )
    points = _subsample(cloud, sampling.derivative_points)
    logger.info(f"Time-{sampling.T} derivatives at {len(points)} points")
    derivatives = time_T_derivatives(system, points, sampling.T, sampling.dt)

    results: Results = {"points": len(cloud), "derivative_points": len(points)}
    semilinear = task.semilinear if task.semilinear is not None else system.model is not None
    if semilinear:
        if system.model is None:
            raise ConfigurationError(text=f"System '{system.name}' has no spectral model for the semilinear bound")
        constants = system.model.constants(cloud.points, t=sampling.T)
        n0, table = choose_projection(constants)
        lam = default_lambda(table[n0])
        constants = constants.model_copy(update={"n0": n0, "lambda_": lam})
        projection = system.model.projection(n0)
        splits = [split_from_projection(T, projection, nd, lambda_budget=lam) for T in derivatives]
        results |= {"n0": n0, "tail_values": table, "constants": constants}
        logger.info(f"Projection n0={n0} with Λ={tail_estimate(constants, n0):.6g}, λ={lam:.6g}")
    else:
        lam = options.lambda_
        splits = [OperatorSplit(np.zeros_like(T), T, nd, lambda_budget=lam) for T in derivatives]

    nus = run_concurrently([partial(nu_lambda, split, lam, config.seed) for split in splits])
    nu = max(result.nu for result in nus)
    D = max(run_concurrently([partial(operator_norm_of_split, split) for split in splits]))
    logger.info(f"nu_lambda={nu}, D={D:.6g}, λ={lam:.6g}")

    bounds: dict[str, DimBoundReport] = {}
    if semilinear:
        bounds["semilinear"] = semilinear_bound(constants, nu, D, lam)
    else:
        provenance = {
            "n": f"max nu_lambda over {len(points)} sampled derivatives",
            "D": "max ‖D S(T)‖ over the sampled derivatives",
            "lambda": "configured",
        }
        bounds["mane"] = mane_bound(nu, D, lam, options.field_factor, provenance)
        if system.nonlinear_jacobian is not None:
            bounds["rank_limit"] = ode_rank_bound(system, PointCloud(points), D)

    curve = boxcount_estimate(cloud, nd, options.eps0, options.k_max, options.window)
    best = min(bounds, key=lambda name: bounds[name].bound)
    theoretical = bounds[best].bound
    logger.info(f"Theoretical bound {theoretical:.6g} ({best}), empirical estimate {curve.estimate:.6g}")
    results |= {
        "nu": nu,
        "D": D,
        "lambda": lam,
        "bounds": bounds,
        "best_formula": best,
        "theoretical_bound": theoretical,
        "empirical_estimate": curve.estimate,
        "consistent": curve.estimate <= theoretical + BOXCOUNT_TOLERANCE,
        "negative_invariance_gap": negative_invariance_gap(
            system, PointCloud(_subsample(cloud, INVARIANCE_POINTS)), sampling.T, sampling.dt
        ),
        "curve": curve,
    }
    header = [f"x{i + 1}" for i in range(system.state_dim)]
    files = [_write_curve(out / "boxcount.csv", curve)]
    files.append(write_csv(out / "derivative_points.csv", header, points.tolist()))
    return results, files
