"""Period scheduler, economy state, single runs and ensembles.

One call to :func:`step` executes the six events of a period in fixed order
and audits the balance sheet matrix at the end.  Everything dated t-1 is read
from ``state.prev``, a frozen copy of the banks taken when the period opens.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import banking as bk
from . import interbank as ib
from . import real_sector as rs
from .config import RunConfig
from .experiments import PolicyState, ShockSchedule, apply_shocks
from .ledger import AuditFailure, SectorBalance, assemble_matrix, audit

log = logging.getLogger(__name__)

# margins of stability are unbounded for banks without required stable funding;
# averages use this cap
MS_CAP = 10.0

# per-period random streams, one per decision, so that a parameter change which alters
# how many draws one event takes does not shift the draws of every later event
GOODS, CREDIT, INTERBANK, MATCHING = range(4)


@dataclass
class Government:
    bills: float = 0.0  # B, outstanding bills
    bonds: float = 0.0  # B^lr
    debt: float = 0.0  # GD
    spending: float = 0.0
    taxes: float = 0.0


@dataclass
class CentralBank:
    hpm: float = 0.0
    advances: float = 0.0
    bills: float = 0.0
    lending_facility: float = 0.0
    deposit_facility: float = 0.0
    profit: float = 0.0


@dataclass
class MarketState:
    pdu: float = 0.0
    i_on: float = 0.0
    i_term: float = 0.0
    sigma: float = 1.0
    theta: float = 0.0
    lbw: float = 0.0


@dataclass
class EconomyState:
    period: int
    households: rs.Households
    firms: rs.Firms
    banks: list[bk.BankState]
    government: Government
    central_bank: CentralBank
    policy: PolicyState
    market: MarketState
    rng: np.random.Generator
    seed: int = 0
    gdp: float = 0.0
    gdp_ref: float = 0.0
    prev: list[bk.BankState] = field(default_factory=list)
    prev_rates: bk.PolicyRates | None = None
    book: ib.SegmentBook | None = None
    # within-period carry-overs from the settlement stage
    gov_interest: float = 0.0
    household_income: np.ndarray | None = None
    firm_interest: np.ndarray | None = None

    @property
    def rates(self) -> bk.PolicyRates:
        return self.policy.rates

    @property
    def n_commercial(self) -> int:
        return sum(b.kind == bk.COMMERCIAL for b in self.banks)

    def stream(self, purpose: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.period, purpose])

    def bank_array(self, attr: str) -> np.ndarray:
        return np.array([getattr(b, attr) for b in self.banks], dtype=float)

    def sector_balances(self) -> list[SectorBalance]:
        h, f, g, cb = self.households, self.firms, self.government, self.central_bank
        inv_value = float(np.sum(f.inventory)) * _inventory_unit_value(self)
        firms = SectorBalance("firms", {
            "capital": math.fsum(f.capital), "inventories": inv_value,
            "loans": -math.fsum(f.loans), "deposits": math.fsum(f.deposits),
            "balance": -math.fsum(f.net_worth)})
        hh = SectorBalance("households", {
            "loans": -math.fsum(h.loans), "deposits": math.fsum(h.deposits),
            "balance": -math.fsum(h.net_worth)})

        def tot(attr):
            return math.fsum(getattr(b, attr) for b in self.banks)

        banks = SectorBalance("banks", {
            "loans": tot("loans"), "deposits": -tot("deposits"), "bills": tot("bills"),
            "bonds": tot("bonds"), "hpm": tot("hpm"), "advances": -tot("advances"),
            "lending_facility": -tot("lending_facility"), "deposit_facility": tot("deposit_facility"),
            "interbank_on": tot("iba_on") - tot("ibl_on"),
            "interbank_term": tot("iba_term") - tot("ibl_term"),
            "balance": -tot("net_worth")})
        gov = SectorBalance("government", {"bills": -g.bills, "bonds": -g.bonds, "balance": g.debt})
        cbank = SectorBalance("central_bank", {
            "bills": cb.bills, "hpm": -cb.hpm, "advances": cb.advances,
            "lending_facility": cb.lending_facility, "deposit_facility": -cb.deposit_facility,
            "balance": 0.0})
        return [firms, hh, banks, gov, cbank]

    def to_dict(self) -> dict:
        """Plain-type snapshot used by ``state-dump``."""
        def arr(x):
            return [float(v) if v.dtype.kind == "f" else int(v) for v in x]

        return {
            "period": self.period,
            "households": {k: arr(v) for k, v in vars(self.households).items()},
            "firms": {k: arr(v) for k, v in vars(self.firms).items()},
            "banks": [b.as_dict() for b in self.banks],
            "government": vars(self.government).copy(),
            "central_bank": vars(self.central_bank).copy(),
            "policy": {**vars(self.policy.rates), "pdu": self.policy.pdu,
                       "icb_t": self.policy.rates.icb_t},
            "market": vars(self.market).copy(),
        }


def _inventory_unit_value(state_or_cfg) -> float:
    # inventories are carried at the (fixed) unit labour cost
    return float(state_or_cfg.firms.unit_cost[0]) if state_or_cfg.firms.n else 1.0


def _post(banks: list[bk.BankState], attr: str, bank_idx: np.ndarray, amounts: np.ndarray) -> None:
    sums = np.bincount(bank_idx, weights=amounts, minlength=len(banks))
    for b, d in zip(banks, sums):
        if d:
            setattr(b, attr, getattr(b, attr) + float(d))


# ---------------------------------------------------------------------------
# initialisation


def default_sigma(gdp_ref: float, half_width_share: float = 0.8, gdp_share: float = 0.1) -> float:
    """Slope putting the rate ``half_width_share`` of the way to the bound when |excess|
    equals ``gdp_share`` of reference GDP."""
    p = 0.5 + 0.5 * half_width_share
    return math.log(p / (1 - p)) / (gdp_share * gdp_ref)


def initial_state(cfg: RunConfig, seed: int | None = None) -> EconomyState:
    rsp, bp, ibp = cfg.real_sector, cfg.banking, cfg.interbank
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    nh, nf, nc, nb = rsp.n_households, rsp.n_firms, bp.n_commercial, bp.n_business
    if nh < nf:
        raise ValueError("need at least as many households as firms")

    cost = rsp.unit_wage / rsp.productivity
    price = (1 + rsp.markup) * cost
    # random but balanced links: every firm starts with the same number of workers and customers
    employer = np.empty(nh, dtype=np.int64)
    employer[rng.permutation(nh)] = np.arange(nh) % nf
    supplier = np.empty(nh, dtype=np.int64)
    supplier[rng.permutation(nh)] = np.arange(nh) % nf
    hh = rs.Households(
        deposits=np.full(nh, rsp.household_deposits0, dtype=float),
        loans=np.full(nh, rsp.household_loans0, dtype=float),
        bank=rng.integers(0, nc, nh),
        supplier=supplier,
        employer=employer,
        expected_income=np.full(nh, rsp.unit_wage * (1 - rsp.tax_rate)),
        income=np.full(nh, rsp.unit_wage * (1 - rsp.tax_rate)),
        wage=np.zeros(nh), consumption=np.zeros(nh), taxes=np.zeros(nh),
        credit_demand=np.zeros(nh),
        net_worth=np.full(nh, rsp.household_deposits0 - rsp.household_loans0),
    )
    workers = np.bincount(employer, minlength=nf).astype(float)
    exp_sales = workers * rsp.productivity / (1 + rsp.inventory_share)
    firms = rs.Firms(
        deposits=np.full(nf, rsp.firm_deposits0, dtype=float),
        loans=np.full(nf, rsp.firm_loans0, dtype=float),
        bank=nc + rng.integers(0, nb, nf),
        capital=np.full(nf, rsp.firm_capital0, dtype=float),
        inventory=rsp.inventory_share * exp_sales,
        price=np.full(nf, price),
        unit_cost=np.full(nf, cost),
        overhead=np.zeros(nf),
        expected_sales=exp_sales.copy(),
        sales=exp_sales.copy(),
        demand=exp_sales.copy(),
        output=exp_sales.copy(),
        wage_bill=np.zeros(nf),
        household_revenue=np.zeros(nf),
        profit=np.zeros(nf),
        credit_demand=np.zeros(nf),
        net_worth=None,
    )
    firms.net_worth = firms.capital + firms.inventory * cost + firms.deposits - firms.loans

    rates = bk.PolicyRates(icb_d=ibp.icb_d, icb_l=ibp.icb_l, bills_rate=bp.bills_rate,
                           bonds_rate=bp.bonds_rate, mu=bp.mu, v=bp.v)
    banks = [bk.BankState(bk.COMMERCIAL) for _ in range(nc)] + [bk.BankState(bk.BUSINESS) for _ in range(nb)]
    i_l, i_d = bk.update_credit_rates(rates.icb_t, bp.markup_loans, bp.markdown_deposits)
    for b in banks:
        b.loan_rate, b.deposit_rate, b.funding_cost = i_l, i_d, rates.icb_t
    _post(banks, "loans", hh.bank, hh.loans)
    _post(banks, "deposits", hh.bank, hh.deposits)
    _post(banks, "loans", firms.bank, firms.loans)
    _post(banks, "deposits", firms.bank, firms.deposits)

    gov = Government()
    gov.debt = float(np.sum(hh.deposits - hh.loans) + np.sum(firms.deposits - firms.loans))
    gov.bills = gov.debt
    # value of full-capacity output: the fiscal anchor and the scale for sigma
    gdp_ref = float(nh * rsp.productivity) * price
    sigma = ibp.sigma_ib if ibp.sigma_ib is not None else default_sigma(gdp_ref, gdp_share=ibp.sigma_gdp_share)
    state = EconomyState(
        period=0, households=hh, firms=firms, banks=banks, government=gov,
        central_bank=CentralBank(), policy=PolicyState(rates, ibp.pdu0),
        market=MarketState(pdu=ibp.pdu0, i_on=rates.icb_t, i_term=rates.icb_t, sigma=sigma),
        rng=rng, seed=seed, gdp=gdp_ref, gdp_ref=gdp_ref,
    )
    _securities(state)
    state.prev = [b.copy() for b in banks]
    state.prev_rates = rates
    return state


# ---------------------------------------------------------------------------
# the period


class Recorder:
    """Column store for per-period statistics."""

    def __init__(self):
        self.columns: dict[str, list[float]] = {}

    def add(self, **values: float) -> None:
        for k, v in values.items():
            self.columns.setdefault(k, []).append(float(v))

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: np.asarray(v) for k, v in self.columns.items()}


def step(state: EconomyState, cfg: RunConfig, schedule: ShockSchedule | None = None,
         recorder: Recorder | None = None, dump_dir: Path | None = None) -> EconomyState:
    """Advance ``state`` by one period in place and return it."""
    schedule = schedule or ShockSchedule(cfg.shock)
    t = state.period + 1
    state.period = t
    state.prev = [b.copy() for b in state.banks]
    prev_rates = state.rates
    state.prev_rates = prev_rates
    state.policy = apply_shocks(schedule, t, state.policy, horizon=cfg.steps)
    state.market.pdu = state.policy.pdu
    rec: dict[str, float] = {}

    _settle_interest_and_income(state, cfg, prev_rates)
    _pricing(state, cfg)
    _production(state, cfg)
    _goods_market(state, cfg, rec)
    _credit_market(state, cfg)
    _interbank(state, cfg, rec)
    _securities(state)

    report = audit(assemble_matrix(state), cfg.audit_tolerance)
    rec["max_residual"] = report.max_residual / report.scale
    rec["audit_pass"] = float(report.passed)
    if recorder is not None:
        recorder.add(period=t, **rec)
    if not report.passed and cfg.halt_on_audit_failure:
        path = None
        if dump_dir is not None:
            path = assemble_matrix(state).dump(Path(dump_dir) / f"audit_failure_t{t}.csv")
        raise AuditFailure(report, path)
    return state


def _settle_interest_and_income(state: EconomyState, cfg: RunConfig, prev_rates: bk.PolicyRates) -> None:
    """Carry-overs: interest on t-1 stocks, bank profits, CB remittance, dividends."""
    h, f, banks, prev = state.households, state.firms, state.banks, state.prev
    g, cb = state.government, state.central_bank
    lr = np.array([b.loan_rate for b in prev])
    dr = np.array([b.deposit_rate for b in prev])

    h_income = np.zeros(h.n)
    for agents, is_h in ((h, True), (f, False)):
        recv = dr[agents.bank] * agents.deposits
        due = lr[agents.bank] * agents.loans
        agents.deposits += recv
        from_dep = np.minimum(due, np.maximum(agents.deposits, 0.0))
        agents.deposits -= from_dep
        capitalised = due - from_dep
        agents.loans += capitalised
        agents.net_worth += recv - due
        _post(banks, "deposits", agents.bank, recv - from_dep)
        _post(banks, "loans", agents.bank, capitalised)
        if is_h:
            h_income += recv - due
        else:
            f_int = recv - due

    # government pays interest on bills and bonds; the central bank remits its profit
    bills_banks = math.fsum(b.bills for b in prev)
    bonds_banks = math.fsum(b.bonds for b in prev)
    cb.profit = (prev_rates.icb_t * cb.advances + prev_rates.icb_l * cb.lending_facility
                 + prev_rates.bills_rate * cb.bills - prev_rates.icb_t * cb.hpm
                 - prev_rates.icb_d * cb.deposit_facility)
    g.debt += (prev_rates.bills_rate * (bills_banks + cb.bills) + prev_rates.bonds_rate * bonds_banks
               - cb.profit)
    state.gov_interest = (prev_rates.bills_rate * (bills_banks + cb.bills)
                           + prev_rates.bonds_rate * bonds_banks - cb.profit)

    # bank profits on t-1 stocks go to the owning households; losses are charged to them
    # too, otherwise retained losses would be financed by central bank money indefinitely
    nh = h.n
    for i, (b, p) in enumerate(zip(banks, prev)):
        payout = bk.profits(p, prev_rates)
        if payout == 0:
            continue
        customers = np.flatnonzero(h.bank == i) if b.kind == bk.COMMERCIAL else np.empty(0, int)
        if len(customers) == 0:
            customers = np.arange(nh)
        share = np.zeros(nh)
        share[customers] = payout / len(customers)
        _credit_households(state, share)
        h_income += share

    state.household_income = h_income
    state.firm_interest = f_int


def _credit_households(state: EconomyState, amounts: np.ndarray) -> None:
    h = state.households
    h.deposits += amounts
    h.net_worth += amounts
    _post(state.banks, "deposits", h.bank, amounts)


def _pricing(state: EconomyState, cfg: RunConfig) -> None:
    """Event 1: mark-up prices and bank rates from last period's funding costs."""
    f, bp = state.firms, cfg.banking
    f.price = rs.update_price(f.unit_cost, cfg.real_sector.markup, f.overhead)
    for b in state.banks:
        b.loan_rate, b.deposit_rate = bk.update_credit_rates(b.funding_cost, bp.markup_loans,
                                                             bp.markdown_deposits)


def _production(state: EconomyState, cfg: RunConfig) -> None:
    """Event 2: plan output, pay wages (investment included)."""
    rsp, f, h = cfg.real_sector, state.firms, state.households
    f.expected_sales = rs.adaptive(f.expected_sales, f.demand, rsp.expectation_speed)
    investment = rsp.depreciation * f.capital
    output, wb, credit = rs.plan_and_produce(f.expected_sales, f.inventory, rsp.inventory_share,
                                             rsp.unit_wage, rsp.productivity, investment,
                                             f.deposits, rsp.deposit_propensity)
    f.output, f.credit_demand = output, credit
    f.unit_cost = rs.unit_cost(wb, output, f.unit_cost)
    paid = wb + investment
    f.wage_bill = paid
    f.deposits -= paid
    f.inventory = f.inventory + output
    # labour cost of goods is capitalised into inventories; investment replaces depreciation
    f.net_worth += -paid + output * _inventory_unit_value(state) + investment - rsp.depreciation * f.capital
    f.capital = f.capital + investment - rsp.depreciation * f.capital
    _post(state.banks, "deposits", f.bank, -paid)

    workers = np.bincount(h.employer, minlength=f.n)
    h.wage = paid[h.employer] / workers[h.employer]
    _credit_households(state, h.wage)


def _goods_market(state: EconomyState, cfg: RunConfig, rec: dict) -> None:
    """Event 3: supplier choice, consumption with pro-rata rationing, taxes, government purchases."""
    rsp, h, f, g = cfg.real_sector, state.households, state.firms, state.government
    rng = state.stream(GOODS)
    h.supplier = rs.choose_partners(h.supplier, f.price, rsp.subset_size, rsp.intensity_of_choice, rng)
    h.expected_income = rs.adaptive(h.expected_income, h.income, rsp.expectation_speed)

    taxes = rsp.tax_rate * h.wage
    h.deposits -= taxes
    h.net_worth -= taxes
    _post(state.banks, "deposits", h.bank, -taxes)
    g.taxes = float(taxes.sum())
    g.debt -= g.taxes

    consumption, credit, _ = rs.consume_and_tax(h.expected_income, h.deposits, h.wage, 0.0,
                                                rsp.alpha_income, rsp.alpha_wealth, rsp.leverage)
    h.credit_demand = credit

    # fiscal rule: spend what is left after interest and last period's bond purchases of
    # bad loans, corrected toward a debt target of r times annual reference GDP
    target = rsp.debt_ratio * rsp.periods_per_year * state.gdp_ref
    spending = max(0.0, g.taxes - state.gov_interest - g.bonds
                   + rsp.fiscal_adjustment * (target - g.debt))
    gov_units = np.full(f.n, spending / f.n) / f.price

    ratio, f.demand = rs.ration(consumption / f.price[h.supplier], h.supplier, f.inventory, gov_units)
    consumption = consumption * ratio[h.supplier]
    gov_paid = gov_units * ratio * f.price
    h.consumption = consumption
    h.deposits -= consumption
    h.net_worth -= consumption
    _post(state.banks, "deposits", h.bank, -consumption)

    hh_rev = np.bincount(h.supplier, weights=consumption, minlength=f.n)
    revenue = hh_rev + gov_paid
    units = revenue / f.price
    cost = _inventory_unit_value(state)
    f.inventory = np.maximum(f.inventory - units, 0.0)
    f.sales = units
    f.household_revenue = hh_rev
    f.deposits += revenue
    f.net_worth += revenue - units * cost
    _post(state.banks, "deposits", f.bank, revenue)
    g.spending = float(gov_paid.sum())
    g.debt += g.spending

    depreciation = cfg.real_sector.depreciation * f.capital
    f.profit = revenue - units * cost + state.firm_interest - depreciation
    # interest is passed through at the industry average so that a firm losing
    # customers does not spiral into ever higher prices
    f.overhead = np.full(f.n, rs.unit_overhead(-state.firm_interest.sum(), units.sum(), f.overhead[0]))
    h.income = state.household_income + h.wage - taxes
    h.taxes = taxes
    state.gdp = float(consumption.sum() + g.spending + cfg.real_sector.depreciation * f.capital.sum())
    rec.update(output=float(f.output.sum()), consumption=float(consumption.sum()),
               gov_spending=g.spending, taxes=g.taxes, gdp=state.gdp,
               wages=float(h.wage.sum()))


def _switch_bank(state: EconomyState, agents, new_bank: np.ndarray) -> None:
    moved = new_bank != agents.bank
    if not moved.any():
        return
    banks = state.banks
    old = agents.bank[moved]
    new = new_bank[moved]
    for attr, vals in (("deposits", agents.deposits[moved]), ("loans", agents.loans[moved])):
        _post(banks, attr, old, -vals)
        _post(banks, attr, new, vals)
    agents.bank = new_bank


def _credit_market(state: EconomyState, cfg: RunConfig) -> None:
    """Event 4: bank choice on loan rates, new loans, repayments, non-performing loans."""
    rsp, bp, h, f, banks = cfg.real_sector, cfg.banking, state.households, state.firms, state.banks
    rng = state.stream(CREDIT)
    nc = state.n_commercial
    lr = state.bank_array("loan_rate")
    _switch_bank(state, h, rs.choose_partners(h.bank, lr[:nc], rsp.subset_size,
                                              rsp.intensity_of_choice, rng))
    _switch_bank(state, f, rs.choose_partners(f.bank, lr[nc:], rsp.subset_size,
                                              rsp.intensity_of_choice, rng, offset=nc))

    # old loans are amortised before new ones are granted
    for agents, repay_rate, demand in ((h, rsp.household_repayment, h.credit_demand),
                                       (f, rsp.firm_repayment, f.credit_demand)):
        repay = np.minimum(repay_rate * agents.loans, np.maximum(agents.deposits, 0.0))
        agents.loans -= repay
        agents.deposits -= repay
        _post(banks, "loans", agents.bank, -repay)
        _post(banks, "deposits", agents.bank, -repay)
        agents.loans += demand
        agents.deposits += demand
        _post(banks, "loans", agents.bank, demand)
        _post(banks, "deposits", agents.bank, demand)

    for b in banks:
        b.npl = 0.0
    for agents in (h, f):
        npl = bp.npl_share * agents.loans
        agents.loans -= npl
        agents.net_worth += npl
        _post(banks, "loans", agents.bank, -npl)
        _post(banks, "npl", agents.bank, npl)
    for b in banks:
        b.net_worth -= b.npl

    # firms pay out profit, corrected toward a target net worth, from cash above a
    # buffer of g_d times the wage bill; remaining excess cash pays down debt
    cost = _inventory_unit_value(state)
    nw_target = (1 - rsp.firm_debt_share) * (f.capital + f.inventory * cost)
    buffer = rsp.deposit_propensity * f.wage_bill
    free_cash = np.maximum(f.deposits - buffer, 0.0)
    wanted = rsp.dividend_payout * (f.profit + rsp.net_worth_adjustment * (f.net_worth - nw_target))
    div = np.minimum(np.maximum(wanted, 0.0), free_cash)
    f.deposits -= div
    f.net_worth -= div
    _post(banks, "deposits", f.bank, -div)
    _credit_households(state, np.full(h.n, div.sum() / h.n))
    extra = np.minimum(free_cash - div, f.loans)
    f.loans -= extra
    f.deposits -= extra
    _post(banks, "loans", f.bank, -extra)
    _post(banks, "deposits", f.bank, -extra)
    h.income = h.income + div.sum() / h.n


def _interbank(state: EconomyState, cfg: RunConfig, rec: dict) -> None:
    """Event 5: payment flows, positions, maturity splits, matching, facilities, rates, funding costs."""
    ibp, banks, prev, rates = cfg.interbank, state.banks, state.prev, state.rates
    h, f, m, rng = state.households, state.firms, state.market, state.stream(INTERBANK)
    n = len(banks)
    nc = state.n_commercial
    maturity = ibp.scenario == ib.MATURITY

    cw = np.bincount(h.bank, weights=h.consumption - h.wage, minlength=n)
    fw = np.bincount(f.bank, weights=f.wage_bill - f.household_revenue, minlength=n)
    flows = np.where(np.arange(n) < nc, cw, fw)

    # one market-wide a0 per period enters both willingness parameters
    a0 = rng.random()
    m.theta = ib.theta(m.i_on, m.i_term, rates.icb_l, m.pdu, a0)
    m.lbw = ib.lbw(m.i_on, m.i_term, rates.icb_d, m.pdu, a0)
    draws = rng.random(n)

    borrowers, lenders, profiles = [], [], []
    for i, b in enumerate(banks):
        b.flow = float(flows[i])
        dhpm = bk.required_reserves(b.deposits, rates) - prev[i].hpm
        b.status, df, lf = bk.interbank_position(b.flow, dhpm)
        prof = ib.nsfr_components(prev[i], ibp.weights)
        profiles.append(prof)
        if df > 0:
            on, term = ib.borrower_split(df, prof, m.theta, draws[i], use_stability=maturity)
            borrowers.append(ib.InterbankOrder(i, df, on, term, prof.asf_share))
        elif lf > 0:
            on, term = ib.lender_split(lf, prof, m.lbw, draws[i], use_stability=maturity)
            lenders.append(ib.InterbankOrder(i, lf, on, term, prof.ms))

    match = ib.match_maturity if maturity else ib.match_baseline
    book = match(borrowers, lenders, state.stream(MATCHING), n_banks=n)
    i_on, i_term = ib.clear_rates(book, rates.icb_d, rates.icb_l, m.sigma)
    book.gamma_on, book.gamma_term = ib.book_rationing(book)
    g_on_m, g_term_m = ib.book_rationing(book, matched_only=True)
    got_on, got_term = book.borrowed()
    gave_on, gave_term = book.lent()
    for i, b in enumerate(banks):
        b.ibl_on, b.ibl_term = float(got_on[i]), float(got_term[i])
        b.iba_on, b.iba_term = float(gave_on[i]), float(gave_term[i])
        b.lending_facility = float(book.lending_facility[i])
        b.deposit_facility = float(book.deposit_facility[i])
        b.excess_reserves = 0.0
        b.funding_cost = ib.funding_costs(rates.icb_t, rates.icb_l, i_on, i_term,
                                          b.ibl_on > 0, b.ibl_term > 0, b.lending_facility > 0)
    m.i_on, m.i_term = i_on, i_term
    state.book = book

    status = np.array([b.status for b in banks])
    ms = np.minimum(np.array([p.ms for p in profiles]), MS_CAP)
    deficit, surplus = status == bk.DEFICIT, status == bk.SURPLUS
    loans = state.bank_array("loans")
    settled_on, settled_term = book.settled()

    def mean_of(x, mask):
        return float(x[mask].mean()) if mask.any() else float("nan")

    rec.update(
        icb_d=rates.icb_d, icb_l=rates.icb_l, icb_t=rates.icb_t, pdu=m.pdu,
        theta=m.theta, lbw=m.lbw,
        df_on=float(book.df_on.sum()), df_term=float(book.df_term.sum()),
        lf_on=float(book.lf_on.sum()), lf_term=float(book.lf_term.sum()),
        settled_on=settled_on, settled_term=settled_term,
        excess_on=book.excess_on, excess_term=book.excess_term,
        rate_on=i_on, rate_term=i_term,
        gamma_on=book.gamma_on, gamma_term=book.gamma_term,
        gamma_on_matched=g_on_m, gamma_term_matched=g_term_m,
        lending_facility=float(book.lending_facility.sum()),
        deposit_facility=float(book.deposit_facility.sum()),
        n_deficit=float(deficit.sum()), n_surplus=float(surplus.sum()),
        n_matches=float(len(book.matches)),
        ms_mean=float(ms.mean()), ms_deficit=mean_of(ms, deficit), ms_surplus=mean_of(ms, surplus),
        asf_mean=float(np.mean([p.asf_share for p in profiles])),
        rsf_mean=float(np.mean([p.rsf_share for p in profiles])),
        pi_b_mean=mean_of(np.array([p.pi_b for p in profiles]), deficit),
        pi_l_mean=mean_of(np.array([p.pi_l for p in profiles]), surplus),
        flow_sum=float(flows.sum()), flow_abs=float(np.abs(flows).sum()),
        flow_commercial=float(flows[:nc].sum()), flow_business=float(flows[nc:].sum()),
        loans_deficit=float(loans[deficit].sum()), loans_surplus=float(loans[surplus].sum()),
        funding_cost_mean=float(np.mean([b.funding_cost for b in banks])),
    )


def _securities(state: EconomyState) -> None:
    """Event 6: bonds absorb the period's NPLs, bills fill banks' buffers, the central bank takes the rest."""
    g, cb, banks, rates = state.government, state.central_bank, state.banks, state.rates
    # last period's bonds are refinanced with bills; this period's NPLs are bought with new bonds
    g.bonds = 0.0
    for b in banks:
        b.bonds = b.npl
        b.net_worth += b.npl
        g.bonds += b.npl
    g.debt += g.bonds
    g.bills = g.debt - g.bonds
    cap = g.bills / len(banks)
    for b in banks:
        b.hpm = bk.required_reserves(b.deposits, rates)
        b.deposit_facility -= b.excess_reserves
        b.excess_reserves = 0.0
        bills, adv, overflow = bk.bills_and_advances(b, cap, rates)
        b.bills, b.advances = bills, adv
        b.deposit_facility += overflow
        b.excess_reserves = overflow
    cb.hpm = math.fsum(b.hpm for b in banks)
    cb.advances = math.fsum(b.advances for b in banks)
    cb.lending_facility = math.fsum(b.lending_facility for b in banks)
    cb.deposit_facility = math.fsum(b.deposit_facility for b in banks)
    cb.bills = g.bills - math.fsum(b.bills for b in banks)


# ---------------------------------------------------------------------------
# runs and ensembles


@dataclass
class RunResult:
    replicate: int
    seed: int
    columns: dict[str, np.ndarray]
    failed: bool = False
    error: str = ""

    @property
    def steps(self) -> int:
        return len(self.columns.get("period", ()))


def run(cfg: RunConfig, replicate: int = 0, dump_dir: Path | None = None) -> RunResult:
    """Single run with seed ``cfg.seed + replicate``."""
    seed = cfg.seed + replicate
    state = initial_state(cfg, seed)
    recorder = Recorder()
    schedule = ShockSchedule(cfg.shock)
    try:
        for _ in range(cfg.steps):
            step(state, cfg, schedule, recorder, dump_dir)
    except AuditFailure as exc:
        log.error("replicate %d: %s", replicate, exc)
        return RunResult(replicate, seed, recorder.arrays(), failed=True, error=str(exc))
    return RunResult(replicate, seed, recorder.arrays())


def run_until(cfg: RunConfig, period: int, seed: int | None = None) -> EconomyState:
    state = initial_state(cfg, seed)
    schedule = ShockSchedule(cfg.shock)
    for _ in range(period):
        step(state, cfg, schedule)
    return state


@dataclass
class Ensemble:
    config: RunConfig
    runs: list[RunResult]

    @property
    def failed(self) -> bool:
        return any(r.failed for r in self.runs)

    def stack(self, column: str) -> np.ndarray:
        """Replicates x periods array (runs of unequal length are truncated)."""
        n = min(r.steps for r in self.runs)
        return np.vstack([r.columns[column][:n] for r in self.runs])

    def summary(self, quantiles=(0.25, 0.75)) -> dict[str, dict[str, np.ndarray]]:
        out = {}
        for col in self.runs[0].columns:
            data = self.stack(col)
            entry = {"mean": data.mean(axis=0)}
            for q in quantiles:
                entry[f"q{int(round(q * 100)):02d}"] = np.quantile(data, q, axis=0)
            out[col] = entry
        return out

    def post_burn_in_mean(self, column: str) -> float:
        return float(np.nanmean(self.stack(column)[:, self.config.burn_in:]))


def _run_one(args):
    cfg, r, dump_dir = args
    return run(cfg, r, dump_dir)


def run_ensemble(cfg: RunConfig, workers: int = 1, dump_dir: Path | None = None) -> Ensemble:
    jobs = [(cfg, r, dump_dir) for r in range(cfg.replicates)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, jobs))
    else:
        runs = [_run_one(j) for j in jobs]
    return Ensemble(cfg, runs)


__all__ = [
    "CentralBank", "EconomyState", "Ensemble", "Government", "MarketState", "Recorder",
    "RunResult", "default_sigma", "initial_state", "run", "run_ensemble", "run_until", "step",
]
