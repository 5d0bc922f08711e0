import pytest

from ibsfc.banking import PolicyRates
from ibsfc.config import ConfigError, RunConfig
from ibsfc.experiments import (ROBUSTNESS_GRIDS, PolicyState, ShockSchedule, SweepSpec, apply_shocks,
                               parse_grid, run_sweep, weight_grid)


def play(kind, until, horizon=1200):
    sched, state = ShockSchedule(kind), PolicyState(PolicyRates())
    for t in range(1, until + 1):
        state = apply_shocks(sched, t, state, horizon)
    return state


def test_corridor_first_event():
    before, after = play("corridor", 299), play("corridor", 300)
    assert (before.rates.icb_d, before.rates.icb_l) == (0.005, 0.015)
    assert after.rates.icb_d == pytest.approx(0.010) and after.rates.icb_l == pytest.approx(0.020)
    assert after.rates.icb_t == pytest.approx(0.015)


def test_width_after_all_events():
    s = play("width", 1200)
    assert s.rates.icb_l == pytest.approx(0.015 + 0.02)
    assert s.rates.icb_d == 0.005


def test_uncertainty_path():
    assert play("uncertainty", 1000).pdu == pytest.approx(0.6)
    assert play("uncertainty", 1200).pdu == pytest.approx(0.8)


def test_missing_is_constant():
    s = play("missing", 1200)
    assert s.rates == PolicyRates() and s.pdu == 0.0


def test_idempotent_and_horizon():
    sched = ShockSchedule("corridor")
    s = apply_shocks(sched, 300, PolicyState(PolicyRates()))
    assert apply_shocks(sched, 300, s) is s
    assert apply_shocks(sched, 600, s, horizon=500) is s
    assert sched.events_until(1000) == 3


def test_unknown_shock():
    with pytest.raises(ConfigError):
        ShockSchedule("tsunami")


def test_grids():
    assert weight_grid() == (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    assert parse_grid("0.4, 0.6") == (0.4, 0.6)
    assert parse_grid("") == ()
    with pytest.raises(ConfigError):
        parse_grid("0:1")


def test_m1_sweep_configs():
    spec = SweepSpec("m1", weight_grid())
    cfgs = spec.configs(RunConfig(replicates=20))
    assert [v for v, _ in cfgs] == list(weight_grid())
    for v, cfg in cfgs:
        assert cfg.interbank.weights.m1 == v
        assert cfg.scenario == "maturity" and cfg.replicates == 1 and cfg.shock == "missing"
        assert cfg.seed == 0


def test_robustness_sweep_defaults():
    spec = SweepSpec("delta", ROBUSTNESS_GRIDS["delta"])
    cfgs = spec.configs(RunConfig(replicates=4))
    assert all(c.scenario == "baseline" and c.replicates == 4 for _, c in cfgs)
    assert [c.real_sector.depreciation for _, c in cfgs] == [0.01, 0.02, 0.05]


def test_invalid_sweeps():
    with pytest.raises(ConfigError):
        SweepSpec("m2", (0.5, 1.5))
    with pytest.raises(ConfigError):
        SweepSpec("zeta", (0.1,))


def test_empty_grid_runs_nothing():
    assert run_sweep(SweepSpec("m3", ()), RunConfig()) == []


def test_small_sweep_runs():
    res = run_sweep(SweepSpec("m3", (0.0, 1.0)), RunConfig(steps=20, burn_in=5))
    assert [v for v, _ in res] == [0.0, 1.0]
    assert all(len(ens.runs) == 1 and not ens.failed for _, ens in res)
