"""Dimension bounds for attractors from covering numbers of compact-plus-contraction derivatives


Example:
>>> from dimbound import NormDescriptor, OperatorSplit, mane_bound, nu_lambda
>>> split = OperatorSplit(np.zeros((2, 2)), np.diag([2.0, 0.01]), NormDescriptor.l2(2), lambda_budget=0.25)
>>> result = nu_lambda(split, 0.25)
>>> round(mane_bound(result.nu, 2.0, 0.25).bound, 6)
4.0
"""

import numpy as np

import dimbound.systems  # registers the shipped systems
from dimbound.auerbach import AuerbachBasis, IsomorphismCertificate, auerbach_basis, bm_certificate
from dimbound.covering import (
    CoverResult,
    certify_cover,
    cover_linf_ball,
    cover_subspace_ball,
    covering_number,
    greedy_cover,
)
from dimbound.dimension import (
    BoxCountCurve,
    DimBoundReport,
    SemilinearConstants,
    boxcount_estimate,
    gronwall_bound,
    lemma1_bound,
    mane_bound,
    power_iterate_bound,
    rank_limit_bound,
    semilinear_bound,
    tail_estimate,
)
from dimbound.models import PipelineConfig
from dimbound.norms import NormDescriptor, PointCloud, Subspace, dual_norm_eval, hausdorff_semidist, norm_eval
from dimbound.operators import OperatorSplit, SplitStep, cover_image_ball, nu_lambda, split_compose, step_compose
from dimbound.pipeline import run
from dimbound.systems import DynamicalSystem, build_system, register_system, sample_attractor, simulate
from dimbound.version import version

__version__ = version

__all__ = [
    "AuerbachBasis",
    "BoxCountCurve",
    "CoverResult",
    "DimBoundReport",
    "DynamicalSystem",
    "IsomorphismCertificate",
    "NormDescriptor",
    "OperatorSplit",
    "PipelineConfig",
    "PointCloud",
    "SemilinearConstants",
    "SplitStep",
    "Subspace",
    "__version__",
    "auerbach_basis",
    "bm_certificate",
    "boxcount_estimate",
    "build_system",
    "certify_cover",
    "cover_image_ball",
    "cover_linf_ball",
    "cover_subspace_ball",
    "covering_number",
    "dual_norm_eval",
    "gronwall_bound",
    "greedy_cover",
    "hausdorff_semidist",
    "lemma1_bound",
    "mane_bound",
    "norm_eval",
    "nu_lambda",
    "power_iterate_bound",
    "rank_limit_bound",
    "register_system",
    "run",
    "sample_attractor",
    "semilinear_bound",
    "simulate",
    "split_compose",
    "step_compose",
    "tail_estimate",
]
