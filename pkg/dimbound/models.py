"""Experiment configuration

A configuration names one command and carries its argument block in ``task``; the option blocks are shared by the
commands that need them. Configurations are plain JSON and round-trip through :meth:`PipelineConfig.model_dump`.
"""

from pathlib import Path
from typing import Annotated, Any, Literal, Union

import numpy as np
import pydantic

from dimbound.dimension import BoundFormula
from dimbound.norms import NormDescriptor, Subspace

Matrix = list[list[float]]


class _Model(pydantic.BaseModel):
    model_config = pydantic.ConfigDict(extra="forbid", populate_by_name=True, frozen=True)


class SystemConfig(_Model):
    name: str
    parameters: dict[str, Any] = {}


class CoveringOptions(_Model):
    hilbert_constant: bool = False
    certificate_samples: int = pydantic.Field(8192, gt=0)
    certificate_inflation: float = pydantic.Field(1.01, ge=1)


class DimensionOptions(_Model):
    eps0: float | None = pydantic.Field(None, gt=0)
    k_max: int = pydantic.Field(7, ge=1)
    window: int = pydantic.Field(4, ge=2)
    lambda_: float = pydantic.Field(0.1, gt=0, lt=0.5, alias="lambda")
    field_factor: Literal[1, 2] = 1


class SamplingOptions(_Model):
    n_initial: int = pydantic.Field(16, ge=1)
    t_transient: float = pydantic.Field(200.0, ge=0)
    t_sample: float = pydantic.Field(800.0, gt=0)
    dt: float = pydantic.Field(1e-3, gt=0)
    stride: int = pydantic.Field(10, ge=1)
    derivative_points: int = pydantic.Field(32, ge=1)
    T: float = pydantic.Field(1.0, gt=0)
    manifold_offset: float | None = pydantic.Field(1e-6, gt=0)
    """Distance of the unstable manifold seeds from their equilibrium; null samples the grid trajectories only"""
    manifold_directions: int = pydantic.Field(8, ge=2)


class SubspaceSpec(_Model):
    """Either spanning vectors or the dimension of a random subspace; the whole space when both are missing"""

    vectors: Matrix | None = None
    random_dim: int | None = pydantic.Field(None, ge=0)

    def build(self, m: int, seed: int) -> Subspace:
        if self.vectors is not None:
            return Subspace.span(self.vectors)
        if self.random_dim is not None:
            return Subspace.random(m, self.random_dim, np.random.default_rng(seed))
        return Subspace.full(m)


class SplitSpec(_Model):
    L: Matrix | None = None
    C: Matrix
    lambda_budget: float = pydantic.Field(0.25, gt=0, lt=0.5)


class AuerbachTask(_Model):
    command: Literal["auerbach"] = "auerbach"
    norm: NormDescriptor
    subspace: SubspaceSpec = SubspaceSpec()
    restarts: int = pydantic.Field(20, ge=1)


class CoverTask(_Model):
    command: Literal["cover"] = "cover"
    norm: NormDescriptor
    subspace: SubspaceSpec = SubspaceSpec()
    r: float = pydantic.Field(1.0, gt=0)
    rho: float = pydantic.Field(0.5, gt=0)


class NuLambdaTask(_Model):
    command: Literal["nu-lambda"] = "nu-lambda"
    norm: NormDescriptor
    split: SplitSpec
    lambda_: float = pydantic.Field(alias="lambda", gt=0)
    cover: bool = False


class BoundTask(_Model):
    command: Literal["bound"] = "bound"
    formula: BoundFormula = BoundFormula.MANE
    n: int = pydantic.Field(0, ge=0)
    D: float = 1.0
    lambda_: float = pydantic.Field(0.1, alias="lambda")
    M: float | None = None
    alpha: float | None = None


class CloudSpec(_Model):
    """A point cloud: explicit points, a CSV file or one of the calibration sets"""

    kind: Literal["points", "csv", "cantor", "sierpinski", "square", "segment"] = "points"
    points: Matrix | None = None
    path: Path | None = None
    level: int = pydantic.Field(12, ge=0)
    count: int = pydantic.Field(65536, ge=1)


class BoxcountTask(_Model):
    command: Literal["boxcount"] = "boxcount"
    cloud: CloudSpec


class SimulateTask(_Model):
    command: Literal["simulate"] = "simulate"
    x0: list[float] | None = None
    T: float = pydantic.Field(10.0, ge=0)


class PipelineTask(_Model):
    command: Literal["pipeline"] = "pipeline"
    semilinear: bool | None = None
    """Use the semilinear constants; by default whenever the system is a Galerkin truncation"""


Task = Annotated[
    Union[AuerbachTask, CoverTask, NuLambdaTask, BoundTask, BoxcountTask, SimulateTask, PipelineTask],
    pydantic.Field(discriminator="command"),
]


class PipelineConfig(_Model):
    """Fully serializable description of one experiment

    Example:
    >>> config = PipelineConfig.model_validate({"task": {"command": "bound", "n": 2, "D": 1, "lambda": 0.125}})
    >>> config.task.command, config.seed, config.output_dir.as_posix()
    ('bound', 0, 'out')
    """

    experiment: str = "experiment"
    task: Task
    system: SystemConfig | None = None
    covering: CoveringOptions = CoveringOptions()
    dimension: DimensionOptions = DimensionOptions()
    sampling: SamplingOptions = SamplingOptions()
    seed: int = pydantic.Field(0, ge=0, lt=2**64)
    output_dir: Path = Path("out")
    expected: dict[str, Any] = {}
    """Dotted report paths with expected values: numbers match approximately, [lo, hi] are ranges"""

    @pydantic.model_validator(mode="after")
    def _needs_system(self) -> "PipelineConfig":
        if self.task.command in ("simulate", "pipeline") and self.system is None:
            raise ValueError(f"command '{self.task.command}' needs a system")
        return self
