"""Run configuration: one dataclass per model section, loadable from YAML/JSON."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

SCENARIOS = ("baseline", "maturity")
SHOCKS = ("missing", "corridor", "width", "uncertainty")


class ConfigError(ValueError):
    pass


@dataclass
class RealSectorParams:
    n_households: int = 500
    n_firms: int = 100
    markup: float = 0.2
    unit_wage: float = 1.0
    productivity: float = 1.0
    inventory_share: float = 0.1
    expectation_speed: float = 0.25
    alpha_income: float = 0.8
    alpha_wealth: float = 0.02
    tax_rate: float = 0.2
    leverage: float = 0.5  # gamma
    household_repayment: float = 0.05
    firm_repayment: float = 0.05
    depreciation: float = 0.02  # delta
    deposit_propensity: float = 0.3  # g_d
    dividend_payout: float = 1.0
    firm_debt_share: float = 0.5  # target loans over capital plus inventories
    net_worth_adjustment: float = 0.1
    subset_size: int = 3
    intensity_of_choice: float = 10.0
    debt_ratio: float = 0.6  # r, relative to annual GDP
    periods_per_year: int = 12
    fiscal_adjustment: float = 0.05
    # initial endowments
    household_deposits0: float = 15.0
    household_loans0: float = 0.5
    firm_capital0: float = 40.0
    firm_deposits0: float = 2.0
    firm_loans0: float = 20.0


@dataclass
class BankingParams:
    mu: float = 0.01
    v: float = 0.01
    npl_share: float = 0.01  # l
    markup_loans: float = 0.5
    markdown_deposits: float = 0.5
    n_commercial: int = 10
    n_business: int = 10
    bills_rate: float = 0.01
    bonds_rate: float = 0.012


@dataclass
class NsfrWeights:
    m1: float = 0.1
    m2: float = 0.5
    m3: float = 0.05
    m4: float = 0.9
    m5: float = 0.5

    def __post_init__(self):
        for k, val in asdict(self).items():
            if not 0.0 <= val <= 1.0:
                raise ConfigError(f"NSFR weight {k}={val} outside [0, 1]")


@dataclass
class InterbankParams:
    scenario: str = "baseline"
    icb_d: float = 0.005
    icb_l: float = 0.015
    pdu0: float = 0.0
    # None: derived so that |excess| = sigma_gdp_share of reference GDP moves the rate
    # 80% of the half-width
    sigma_ib: float | None = None
    sigma_gdp_share: float = 0.0003
    weights: NsfrWeights = field(default_factory=NsfrWeights)

    def __post_init__(self):
        if isinstance(self.weights, dict):
            self.weights = NsfrWeights(**self.weights)
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.icb_d > self.icb_l:
            raise ConfigError("corridor floor above ceiling")
        if self.sigma_ib is not None and self.sigma_ib <= 0:
            raise ConfigError("sigma_ib must be positive")
        if self.sigma_gdp_share <= 0:
            raise ConfigError("sigma_gdp_share must be positive")


@dataclass
class RunConfig:
    steps: int = 1200
    replicates: int = 100
    burn_in: int = 100
    seed: int = 0
    shock: str = "missing"
    audit_tolerance: float = 1e-8
    halt_on_audit_failure: bool = True
    real_sector: RealSectorParams = field(default_factory=RealSectorParams)
    banking: BankingParams = field(default_factory=BankingParams)
    interbank: InterbankParams = field(default_factory=InterbankParams)

    def __post_init__(self):
        for name, cls in (("real_sector", RealSectorParams), ("banking", BankingParams),
                          ("interbank", InterbankParams)):
            val = getattr(self, name)
            if isinstance(val, dict):
                setattr(self, name, cls(**val))
        if self.shock not in SHOCKS:
            raise ConfigError(f"shock must be one of {SHOCKS}, got {self.shock!r}")
        if not 0 <= self.burn_in < self.steps:
            raise ConfigError("burn-in must be smaller than the number of steps")
        if self.replicates < 1:
            raise ConfigError("need at least one replicate")

    @property
    def scenario(self) -> str:
        return self.interbank.scenario

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def with_overrides(self, **dotted: Any) -> "RunConfig":
        """Return a copy with ``section.key`` (or top-level ``key``) overrides applied."""
        data = self.to_dict()
        for key, val in dotted.items():
            set_dotted(data, key, val)
        return from_dict(data)


def set_dotted(data: dict, key: str, val: Any) -> None:
    parts = key.split(".")
    node = data
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise ConfigError(f"unknown config section {key!r}")
        node = node[p]
    if parts[-1] not in node:
        raise ConfigError(f"unknown config key {key!r}")
    node[parts[-1]] = val


def _check_keys(cls, data: dict, where: str) -> None:
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")


def from_dict(data: dict[str, Any]) -> RunConfig:
    data = json.loads(json.dumps(data))  # deep copy, plain types
    _check_keys(RunConfig, data, "run config")
    for name, cls in (("real_sector", RealSectorParams), ("banking", BankingParams),
                      ("interbank", InterbankParams)):
        if name in data:
            _check_keys(cls, data[name], name)
    if "weights" in data.get("interbank", {}):
        _check_keys(NsfrWeights, data["interbank"]["weights"], "interbank.weights")
    return RunConfig(**data)


def load_config(path: str | Path) -> RunConfig:
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return from_dict(data)


def dump_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))


__all__ = [
    "BankingParams", "ConfigError", "InterbankParams", "NsfrWeights", "RealSectorParams",
    "RunConfig", "SCENARIOS", "SHOCKS", "dump_config", "from_dict", "load_config",
]
