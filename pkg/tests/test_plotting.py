import pytest

from ibsfc import analytics as an
from ibsfc import plotting
from ibsfc.config import RunConfig
from ibsfc.engine import run_ensemble


@pytest.fixture(scope="module")
def frames():
    return an.frames_of(run_ensemble(RunConfig(steps=30, burn_in=5, replicates=2)))


def test_ensemble_figure_set(frames, tmp_path):
    paths = plotting.plot_ensemble(frames, tmp_path, label="baseline_missing", burn_in=5)
    names = {p.stem for p in paths}
    assert "interbank_volumes_levels_baseline_missing" in names
    assert len(paths) == len(plotting.FIGURES)
    assert all(p.read_text().lstrip().startswith("<?xml") for p in paths)


def test_rendering_is_byte_identical(frames, tmp_path):
    a = plotting.plot_ensemble(frames, tmp_path / "a", figures=["interbank_rates"])
    b = plotting.plot_ensemble(frames, tmp_path / "b", figures=["interbank_rates"])
    assert [p.read_bytes() for p in a] == [p.read_bytes() for p in b]


def test_empty_ensemble_draws_nothing(tmp_path):
    assert plotting.plot_ensemble([], tmp_path) == []


def test_shock_and_sweep_figures(frames, tmp_path):
    p = plotting.plot_shock_comparison({"missing": frames, "corridor": frames}, "settled_on", tmp_path)
    assert p.exists()
    paths = plotting.plot_sweep([(0.1, frames), (0.2, frames)], "m1", ["settled_on"], tmp_path, window=5)
    assert [q.name for q in paths] == ["sweep_m1_settled_on.svg"]
