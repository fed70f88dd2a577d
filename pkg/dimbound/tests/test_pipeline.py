import csv
import json

import numpy as np
import pydantic
import pytest

from dimbound.exception import ConfigurationError, DegenerateBoundError
from dimbound.models import PipelineConfig
from dimbound.pipeline import run


def _config(tmp_path, **data) -> PipelineConfig:
    return PipelineConfig.model_validate({"output_dir": tmp_path, **data})


def _read_csv(path) -> list[list[str]]:
    with path.open(encoding="utf-8") as stream:
        return list(csv.reader(stream))


def test_bound_report(tmp_path):
    result = run(_config(tmp_path, task={"command": "bound", "n": 2, "D": 1.0, "lambda": 0.125}))
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert report == result.report
    assert report["results"]["bound"] == pytest.approx(4.584963, abs=1e-6)
    assert report["config"]["task"]["lambda"] == 0.125
    assert "output_dir" not in report["config"]
    assert "mane bound" in (tmp_path / "run.log").read_text(encoding="utf-8")


def test_degenerate_bound_is_raised(tmp_path):
    with pytest.raises(DegenerateBoundError):
        run(_config(tmp_path, task={"command": "bound", "n": 2, "D": 1.0, "lambda": 0.5}))


def test_bound_formula_of_pipeline_is_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="pipeline command"):
        run(_config(tmp_path, task={"command": "bound", "formula": "semilinear"}))


def test_lemma1_needs_its_inputs(tmp_path):
    with pytest.raises(ConfigurationError, match="needs M and alpha"):
        run(_config(tmp_path, task={"command": "bound", "formula": "lemma1"}))


def test_cover_writes_centers(tmp_path):
    task = {"command": "cover", "norm": {"kind": "l1", "dimension": 2}, "r": 1.0, "rho": 0.5}
    result = run(_config(tmp_path, task=task))
    rows = _read_csv(tmp_path / "centers.csv")
    assert rows[0] == ["x1", "x2"]
    assert len(rows) - 1 == result.report["results"]["count"]
    assert result.report["results"]["certificate"]["passed"]
    assert result.report["results"]["method"] == "isomorphism"


def test_runs_are_reproducible(tmp_path):
    task = {"command": "cover", "norm": {"kind": "linf", "dimension": 3}, "subspace": {"random_dim": 2}}
    for name in ("first", "second"):
        run(_config(tmp_path / name, task=task, seed=11))
    for file in ("report.json", "centers.csv", "run.log"):
        assert (tmp_path / "first" / file).read_bytes() == (tmp_path / "second" / file).read_bytes()


def test_seed_changes_random_subspace(tmp_path):
    task = {"command": "auerbach", "norm": {"kind": "l2", "dimension": 3}, "subspace": {"random_dim": 2}}
    first = run(_config(tmp_path / "a", task=task, seed=1)).report["results"]["vectors"]
    second = run(_config(tmp_path / "b", task=task, seed=2)).report["results"]["vectors"]
    assert not np.allclose(first, second)


def test_nu_lambda_with_image_cover(tmp_path):
    task = {
        "command": "nu-lambda",
        "norm": {"kind": "l2", "dimension": 2},
        "split": {"C": [[2.0, 0.0], [0.0, 0.05]]},
        "lambda": 0.25,
        "cover": True,
    }
    results = run(_config(tmp_path, task=task)).report["results"]
    assert results["nu"] == 1
    assert results["cover"]["certificate"]["passed"]
    assert results["cover"]["count"] <= results["cover"]["bound"]
    assert (tmp_path / "centers.csv").exists()


def test_boxcount_from_csv(tmp_path):
    points = np.column_stack([np.linspace(0, 1, 4096, endpoint=False), np.zeros(4096)])
    path = tmp_path / "segment.csv"
    np.savetxt(path, points, delimiter=",", header="x,y", comments="")
    task = {"command": "boxcount", "cloud": {"kind": "csv", "path": str(path)}}
    results = run(_config(tmp_path / "out", task=task, dimension={"eps0": 0.5, "k_max": 6})).report["results"]
    assert results["points"] == 4096
    assert results["estimate"] == pytest.approx(1.0, abs=0.02)
    rows = _read_csv(tmp_path / "out" / "boxcount.csv")
    assert rows[0] == ["scale", "count", "slope", "neg_log_scale", "log_count"]
    assert len(rows) == 8
    assert rows[-1][2] == ""


def test_points_cloud_needs_points(tmp_path):
    with pytest.raises(ConfigurationError, match="needs points"):
        run(_config(tmp_path, task={"command": "boxcount", "cloud": {"kind": "points"}}))


def test_simulate_writes_trajectory(tmp_path):
    config = _config(
        tmp_path,
        task={"command": "simulate", "x0": [1.0, 0.0], "T": 1.0},
        system={"name": "damped_coupled", "parameters": {"k": 1}},
        sampling={"dt": 0.01, "stride": 10},
    )
    results = run(config).report["results"]
    rows = _read_csv(tmp_path / "trajectory.csv")
    assert rows[0] == ["t", "x1", "x2"]
    assert len(rows) - 1 == results["samples"] == 11
    assert results["final"] == pytest.approx([1.0, 0.0])


def test_unknown_system(tmp_path):
    config = _config(tmp_path, task={"command": "simulate"}, system={"name": "lorenz"})
    with pytest.raises(ConfigurationError, match="Unknown system"):
        run(config)


def test_pipeline_on_damped_system(tmp_path):
    config = _config(
        tmp_path,
        task={"command": "pipeline"},
        system={"name": "damped_coupled", "parameters": {"k": 1, "beta": 3.0}},
        sampling={"n_initial": 8, "t_transient": 40.0, "t_sample": 30.0, "dt": 0.01, "stride": 5},
    )
    results = run(config).report["results"]
    assert set(results["bounds"]) == {"mane", "rank_limit"}
    assert results["bounds"]["rank_limit"]["bound"] == 1.0
    assert results["best_formula"] == "rank_limit"
    # the heteroclinic orbits from the saddle to ±1 make the attractor a curve
    assert 0.7 <= results["empirical_estimate"] <= 1.1
    assert results["consistent"]
    assert results["negative_invariance_gap"] < 0.05
    assert {path.name for path in tmp_path.iterdir()} >= {"report.json", "run.log", "boxcount.csv"}
    assert len(_read_csv(tmp_path / "derivative_points.csv")) == 1 + results["derivative_points"]


def test_semilinear_pipeline_needs_spectral_model(tmp_path):
    config = _config(
        tmp_path,
        task={"command": "pipeline", "semilinear": True},
        system={"name": "decay", "parameters": {"dim": 2}},
        sampling={"n_initial": 2, "t_transient": 1.0, "t_sample": 1.0, "dt": 0.01, "derivative_points": 2},
    )
    with pytest.raises(ConfigurationError, match="no spectral model"):
        run(config)


@pytest.mark.slow
def test_pipeline_on_chafee_infante(tmp_path):
    config = _config(
        tmp_path,
        task={"command": "pipeline"},
        system={"name": "chafee_infante", "parameters": {"n_modes": 16}},
        sampling={"n_initial": 8, "t_transient": 10.0, "t_sample": 30.0, "stride": 20, "derivative_points": 8},
    )
    results = run(config).report["results"]
    assert results["best_formula"] == "semilinear"
    bound = results["bounds"]["semilinear"]
    assert bound["n"] <= results["n0"]
    assert results["tail_values"][results["n0"]] < results["lambda"] < 0.25
    assert results["constants"]["n0"] == results["n0"]
    assert 0.7 <= results["empirical_estimate"] <= 1.3
    assert results["consistent"]


def test_config_requires_system_for_simulation():
    with pytest.raises(pydantic.ValidationError, match="needs a system"):
        PipelineConfig.model_validate({"task": {"command": "pipeline"}})


def test_config_rejects_unknown_fields():
    with pytest.raises(pydantic.ValidationError):
        PipelineConfig.model_validate({"task": {"command": "bound"}, "colour": "red"})


def test_config_lambda_must_be_below_half():
    with pytest.raises(pydantic.ValidationError):
        PipelineConfig.model_validate({"task": {"command": "bound"}, "dimension": {"lambda": 0.5}})
