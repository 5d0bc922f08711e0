"""Bank balance-sheet mechanics: reserves, bills/advances buffers, NPLs, profits,
payment flows and interbank position sizing."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .ledger import StructuralError

COMMERCIAL = "commercial"
BUSINESS = "business"

SURPLUS = "surplus"
DEFICIT = "deficit"
NEUTRAL = "neutral"


@dataclass
class PolicyRates:
    icb_d: float = 0.005
    icb_l: float = 0.015
    bills_rate: float = 0.01
    bonds_rate: float = 0.012
    mu: float = 0.01
    v: float = 0.01

    @property
    def icb_t(self) -> float:
        return 0.5 * (self.icb_l + self.icb_d)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.icb_l - self.icb_d)


@dataclass
class BankState:
    kind: str
    loans: float = 0.0
    deposits: float = 0.0
    hpm: float = 0.0
    bills: float = 0.0
    bonds: float = 0.0
    advances: float = 0.0
    lending_facility: float = 0.0
    deposit_facility: float = 0.0
    npl: float = 0.0
    iba_on: float = 0.0
    iba_term: float = 0.0
    ibl_on: float = 0.0
    ibl_term: float = 0.0
    net_worth: float = 0.0
    loan_rate: float = 0.0
    deposit_rate: float = 0.0
    funding_cost: float = 0.0
    flow: float = 0.0
    status: str = NEUTRAL
    # part of the deposit facility stock that holds bill-cap overflow, not interbank leftovers
    excess_reserves: float = 0.0

    def copy(self) -> "BankState":
        return replace(self)

    def assets(self) -> float:
        return (self.loans + self.hpm + self.bills + self.bonds + self.deposit_facility
                + self.iba_on + self.iba_term)

    def liabilities(self) -> float:
        return (self.deposits + self.advances + self.lending_facility
                + self.ibl_on + self.ibl_term)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def required_reserves(deposits: float, rates: PolicyRates) -> float:
    return (rates.mu + rates.v) * deposits


def funding_residual(bank: BankState, rates: PolicyRates) -> float:
    """Funds left for bills once every other stock is in place, with advances at v*D.

    Own funds (net worth) take the place of the NPL term so that the bank's
    balance sheet closes exactly; interbank positions enter like facility stocks.
    """
    return (bank.deposits + bank.net_worth + bank.lending_facility + bank.ibl_on + bank.ibl_term
            - bank.loans - rates.mu * bank.deposits - bank.bonds
            - (bank.deposit_facility - bank.excess_reserves) - bank.iba_on - bank.iba_term)


def bills_and_advances(bank: BankState, bills_cap: float, rates: PolicyRates) -> tuple[float, float, float]:
    """Bills/advances buffer rule.

    Returns ``(bills, advances, overflow)`` where ``overflow`` is the part of a
    positive residual above the bills cap; it is parked at the deposit facility.
    """
    residual = funding_residual(bank, rates)
    cap = max(bills_cap, 0.0)
    if residual < 0:
        advances = rates.v * bank.deposits - residual
        if advances < 0:
            # only reachable through round-off on an (almost) empty balance sheet
            if advances < -1e-9 * max(1.0, abs(bank.deposits), abs(residual)):
                raise StructuralError(f"negative advances {advances} for {bank.kind} bank")
            advances = 0.0
        return 0.0, advances, 0.0
    bills = min(residual, cap)
    return bills, rates.v * bank.deposits, residual - bills


def transfer_npl(loans: float, share: float) -> tuple[float, float, float]:
    """Return ``(npl, loans_after, bonds)``; bonds issued to the bank equal the NPLs."""
    npl = share * loans
    return npl, loans - npl, npl


def profits(prev: BankState, rates: PolicyRates) -> float:
    """Interest income minus interest expense on last period's stocks and rates."""
    return (prev.loan_rate * prev.loans
            + rates.icb_t * prev.hpm
            + rates.bills_rate * prev.bills
            + rates.bonds_rate * prev.bonds
            + rates.icb_d * prev.deposit_facility
            - prev.deposit_rate * prev.deposits
            - rates.icb_t * prev.advances
            - rates.icb_l * prev.lending_facility)


def payment_flow(kind: str, consumption: float, wages: float) -> float:
    """Net flow from customers' consumption spending and wage receipts/payments."""
    if kind == COMMERCIAL:
        return consumption - wages
    if kind == BUSINESS:
        return wages - consumption
    raise ValueError(f"unknown bank kind {kind!r}")


def interbank_position(flow: float, delta_hpm: float) -> tuple[str, float, float]:
    """Return ``(status, DF, LF)``; the inactive side is zero and both clamp at zero."""
    if flow < 0:
        return DEFICIT, max(0.0, abs(flow) - delta_hpm), 0.0
    if flow > 0:
        return SURPLUS, 0.0, max(0.0, flow - delta_hpm)
    return NEUTRAL, 0.0, 0.0


def update_credit_rates(funding_cost: float, markup: float, markdown: float) -> tuple[float, float]:
    return max(0.0, funding_cost * (1 + markup)), max(0.0, funding_cost * (1 - markdown))
