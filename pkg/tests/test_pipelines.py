import dataclasses

import pytest

from spinnoise.config import RunConfig
from spinnoise.csvio import read_table
from spinnoise.pipelines import PipelineError, compute_eigen_sweep, reproduce


def test_stage_failure_names_stage_and_parameters(tmp_path):
    cfg = dataclasses.replace(RunConfig(), method="eigen")
    with pytest.raises(PipelineError) as info:
        reproduce("fig2", tmp_path, cfg)
    assert info.value.stage == "spectrum"
    assert info.value.params["power_mw"] == 1.0
    assert "spectrum" in str(info.value)


def test_unknown_figure(tmp_path):
    with pytest.raises(ValueError):
        reproduce("fig1", tmp_path)


def test_fig4_trends(tmp_path):
    out = reproduce("fig4", tmp_path, emit_plots=False)
    assert out["power"].trend.coefficient == pytest.approx(180e3, rel=0.02)
    assert out["detuning"].trend.r_squared > 0.99
    assert not list(tmp_path.glob("*.svg"))
    _, rows = read_table(tmp_path / "fig4_trends.csv")
    assert float(rows[0]["slope_hz_per_mw"]) == pytest.approx(out["power"].trend.coefficient)


def test_eigen_sweep_carries_config_echo():
    cfg = dataclasses.replace(RunConfig(), sweep_variable="power", sweep_values=(1.0, 2.0, 3.0))
    res = compute_eigen_sweep(cfg)
    assert res.meta["sweep_variable"] == "power"
    assert len(res.rows) == 3
