import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ibsfc import analytics as an
from ibsfc.config import RunConfig
from ibsfc.engine import run_ensemble


def dense_hp(y, lamb):
    # normal equations (I + lamb K'K) tau = y with an explicit second-difference matrix
    n = len(y)
    K = np.zeros((n - 2, n))
    for r in range(n - 2):
        K[r, r:r + 3] = (1.0, -2.0, 1.0)
    return np.linalg.solve(np.eye(n) + lamb * K.T @ K, y)


@pytest.fixture(scope="module")
def frames():
    ens = run_ensemble(RunConfig(steps=30, burn_in=5, replicates=2, seed=7))
    return an.frames_of(ens)


@pytest.mark.parametrize("n", [4, 5, 17, 120, 300])
def test_hp_matches_dense_solve(n):
    y = np.random.default_rng(n).normal(size=n).cumsum()
    trend, cycle = an.hp_filter(y, an.HP_LAMBDA_MONTHLY)
    ref = dense_hp(y, an.HP_LAMBDA_MONTHLY)
    np.testing.assert_allclose(trend, ref, rtol=0, atol=1e-8 * max(1.0, np.abs(y).max()))
    np.testing.assert_allclose(trend + cycle, y, rtol=0, atol=1e-12)


def test_hp_constant_and_linear():
    _, cycle = an.hp_filter(np.full(50, 3.5))
    assert np.abs(cycle).max() < 1e-9
    _, cycle = an.hp_filter(2.0 + 0.3 * np.arange(100.0))
    assert np.abs(cycle).max() < 1e-9


def test_hp_rejects_bad_input():
    with pytest.raises(ValueError):
        an.hp_filter([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        an.hp_filter(np.ones(10), 0.0)


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.integers(4, 60), elements=st.floats(-1e3, 1e3)), st.floats(1.0, 1e5))
def test_hp_decomposition_property(y, lamb):
    trend, cycle = an.hp_filter(y, lamb)
    np.testing.assert_allclose(trend + cycle, y, atol=1e-9)
    np.testing.assert_allclose(trend, dense_hp(y, lamb), atol=1e-6 * max(1.0, np.abs(y).max()))


def test_moving_average_examples():
    y = np.random.default_rng(0).normal(size=30)
    np.testing.assert_allclose(an.moving_average(y, 1), y)
    np.testing.assert_allclose(an.moving_average(np.full(20, 2.0), 7), 2.0)
    with pytest.raises(ValueError):
        an.moving_average(y, 0)


def test_moving_average_step_gives_ramp():
    y = np.concatenate([np.zeros(300), np.ones(300)])
    ma = an.moving_average(y, 200)
    assert np.all(ma[:300] == 0)
    np.testing.assert_allclose(ma[300:500], np.arange(1, 201) / 200)
    assert np.all(ma[499:] == 1)


def test_moving_average_short_history():
    np.testing.assert_allclose(an.moving_average([2.0, 4.0, 6.0], 10), [2.0, 3.0, 4.0])


def test_long_csv_round_trip(frames, tmp_path):
    an.write_long_csv(frames, tmp_path / "all.csv")
    back = an.read_long_csv(tmp_path / "all.csv")
    assert [f.replicate for f in back] == [f.replicate for f in frames]
    for a, b in zip(frames, back):
        assert a.columns.keys() == b.columns.keys()
        for k in a.columns:
            assert np.array_equal(a.columns[k], b.columns[k], equal_nan=True), k


def test_export_round_trip_and_purity(frames, tmp_path):
    written = an.export(frames, tmp_path / "a")
    names = sorted(p.name for p in written)
    for expected in ("market.csv", "policy.csv", "stability.csv", "real.csv", "checks.csv",
                     "interbank.csv", "audit.csv", "summary.csv"):
        assert expected in names
    back = an.read_frames(tmp_path / "a")
    for a, b in zip(frames, back):
        for k in a.columns:
            assert np.array_equal(a.columns[k], b.columns[k], equal_nan=True), k
    again = an.export(frames, tmp_path / "b")
    for p, q in zip(sorted(written), sorted(again)):
        assert p.read_bytes() == q.read_bytes()


def test_interbank_and_audit_csv_layout(frames, tmp_path):
    an.export(frames, tmp_path)
    head = (tmp_path / "interbank.csv").read_text().splitlines()
    assert head[0] == "period,replicate,segment,df,lf,settled,rate,gamma,lending_facility,deposit_facility"
    assert len(head) == 1 + 2 * sum(f.steps for f in frames)
    audit = (tmp_path / "audit.csv").read_text().splitlines()
    assert audit[0] == "replicate,period,max_residual,pass"


def test_export_empty_ensemble(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        assert an.export([], tmp_path / "none") == []
    assert "empty" in caplog.text
    assert not (tmp_path / "none").exists() or not any((tmp_path / "none").iterdir())


def test_sweep_csv_round_trip(frames, tmp_path):
    points = [(0.1, frames[:1]), (0.2, frames[1:])]
    an.write_sweep_csv(points, "m1", tmp_path / "sweep.csv")
    param, back = an.read_sweep_csv(tmp_path / "sweep.csv")
    assert param == "m1" and [v for v, _ in back] == [0.1, 0.2]
    for (_, fa), (_, fb) in zip(points, back):
        for k in fa[0].columns:
            assert np.array_equal(fa[0].columns[k], fb[0].columns[k], equal_nan=True), k


def test_summary_and_transforms(frames):
    s = an.summarize(frames)
    assert np.all(s["settled_on"]["lo"] <= s["settled_on"]["hi"])
    trimmed = [f.trimmed(5) for f in frames]
    hp = an.detrend_frames(trimmed, variables=["output"])
    np.testing.assert_allclose(hp[0].columns["output_trend"] + hp[0].columns["output_cycle"],
                               trimmed[0].columns["output"])
    ma = an.smooth_frames(trimmed, 3, variables=["output"])
    assert "output_ma3" in ma[0].columns


def test_export_unwritable(frames, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        an.export(frames, blocker / "out")
