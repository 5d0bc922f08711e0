"""Policy shocks and parameter sweeps."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .banking import PolicyRates
from .config import SHOCKS, ConfigError, RunConfig

SHOCK_STEPS = (300, 600, 900, 1200)
RATE_STEP = 0.005  # 50 basis points
PDU_STEP = 0.2


@dataclass(frozen=True)
class ShockSchedule:
    kind: str = "missing"
    steps: tuple[int, ...] = SHOCK_STEPS

    def __post_init__(self):
        if self.kind not in SHOCKS:
            raise ConfigError(f"unknown shock kind {self.kind!r}")

    def events_until(self, t: int) -> int:
        return sum(1 for s in self.steps if s <= t)


@dataclass
class PolicyState:
    """Policy-controlled parameters plus the shock steps already applied."""

    rates: PolicyRates
    pdu: float = 0.0
    applied: frozenset = field(default_factory=frozenset)


def apply_shocks(schedule: ShockSchedule, t: int, params: PolicyState,
                 horizon: int | None = None) -> PolicyState:
    """Apply the shock scheduled at step ``t`` (if any) and return new parameters.

    Re-applying a step already applied is a no-op; steps beyond ``horizon`` are ignored.
    """
    if schedule.kind == "missing" or t not in schedule.steps or t in params.applied:
        return params
    if horizon is not None and t > horizon:
        return params
    rates, pdu = params.rates, params.pdu
    if schedule.kind == "corridor":
        rates = replace(rates, icb_d=rates.icb_d + RATE_STEP, icb_l=rates.icb_l + RATE_STEP)
    elif schedule.kind == "width":
        rates = replace(rates, icb_l=rates.icb_l + RATE_STEP)
    elif schedule.kind == "uncertainty":
        pdu = pdu + PDU_STEP
    return PolicyState(rates, pdu, params.applied | {t})


# sweep targets: short name -> dotted config key
SWEEP_TARGETS = {
    "m1": "interbank.weights.m1",
    "m2": "interbank.weights.m2",
    "m3": "interbank.weights.m3",
    "m4": "interbank.weights.m4",
    "m5": "interbank.weights.m5",
    "r": "real_sector.debt_ratio",
    "delta": "real_sector.depreciation",
    "l": "banking.npl_share",
    "gamma": "real_sector.leverage",
    "g_d": "real_sector.deposit_propensity",
}
WEIGHT_PARAMS = ("m1", "m2", "m3", "m4", "m5")

ROBUSTNESS_GRIDS = {
    "r": (0.4, 0.6, 0.8),
    "delta": (0.01, 0.02, 0.05),
    "l": (0.005, 0.01, 0.02),
    "gamma": (0.25, 0.5, 0.75),
    "g_d": (0.1, 0.3, 0.5),
}


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse ``start:stop:step`` (inclusive stop) or a comma list."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigError(f"bad grid {text!r}; expected start:stop:step")
        start, stop, step = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + k * step, 10) for k in range(max(n, 0)))
    return tuple(float(p) for p in text.split(",") if p.strip())


def weight_grid() -> tuple[float, ...]:
    return parse_grid("0:1:0.1")


@dataclass
class SweepSpec:
    param: str
    grid: tuple[float, ...]
    scenario: str | None = None
    single_run: bool | None = None

    def __post_init__(self):
        if self.param not in SWEEP_TARGETS:
            raise ConfigError(f"unknown sweep parameter {self.param!r}")
        self.grid = tuple(float(g) for g in self.grid)
        if self.param in WEIGHT_PARAMS:
            bad = [g for g in self.grid if not 0.0 <= g <= 1.0]
            if bad:
                raise ConfigError(f"weight grid values outside [0, 1]: {bad}")
        if self.scenario is None:
            self.scenario = "maturity" if self.param in WEIGHT_PARAMS else "baseline"
        if self.single_run is None:
            self.single_run = self.param in WEIGHT_PARAMS

    @property
    def key(self) -> str:
        return SWEEP_TARGETS[self.param]

    def configs(self, base: RunConfig, replicates: int | None = None) -> list[tuple[float, RunConfig]]:
        reps = 1 if self.single_run else (replicates or base.replicates)
        out = []
        for val in self.grid:
            cfg = base.with_overrides(**{self.key: val, "interbank.scenario": self.scenario,
                                         "shock": "missing", "replicates": reps})
            out.append((val, cfg))
        return out


def run_sweep(spec: SweepSpec, base_config: RunConfig, replicates: int | None = None,
              workers: int = 1) -> list:
    """Run every grid point with the same base seed.  Returns ``[(value, Ensemble)]``."""
    from .engine import run_ensemble

    return [(val, run_ensemble(cfg, workers=workers)) for val, cfg in spec.configs(base_config, replicates)]
