"""Households and firms.

Agents are stored column-wise (one numpy array per field) so that each event
is a handful of vectorised operations.  The scalar helpers below also accept
arrays and are what the engine calls.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np


@dataclass
class Households:
    deposits: np.ndarray
    loans: np.ndarray
    bank: np.ndarray
    supplier: np.ndarray
    employer: np.ndarray
    expected_income: np.ndarray
    income: np.ndarray
    wage: np.ndarray
    consumption: np.ndarray
    taxes: np.ndarray
    credit_demand: np.ndarray
    net_worth: np.ndarray

    @property
    def n(self) -> int:
        return len(self.deposits)

    def copy(self) -> "Households":
        return Households(**{f.name: getattr(self, f.name).copy() for f in fields(self)})


@dataclass
class Firms:
    deposits: np.ndarray
    loans: np.ndarray
    bank: np.ndarray
    capital: np.ndarray
    inventory: np.ndarray  # units
    price: np.ndarray
    unit_cost: np.ndarray  # labour cost per unit
    overhead: np.ndarray  # last period's industry net interest cost per unit sold
    expected_sales: np.ndarray
    sales: np.ndarray  # units, households and government
    demand: np.ndarray  # units asked for before rationing
    output: np.ndarray
    wage_bill: np.ndarray  # wages actually paid, including investment
    household_revenue: np.ndarray
    profit: np.ndarray
    credit_demand: np.ndarray
    net_worth: np.ndarray

    @property
    def n(self) -> int:
        return len(self.deposits)

    def copy(self) -> "Firms":
        return Firms(**{f.name: getattr(self, f.name).copy() for f in fields(self)})


def adaptive(expected, actual, speed: float):
    return expected + speed * (actual - expected)


def unit_cost(wage_bill, output, previous):
    """Wage bill per unit of output, carried forward when nothing was produced."""
    wage_bill, output, previous = np.broadcast_arrays(*map(np.asarray, (wage_bill, output, previous)))
    out = previous.astype(float).copy()
    np.divide(wage_bill, output, out=out, where=output > 0)
    return out if out.ndim else float(out)


def update_price(unit_cost_prev, markup: float, overhead=0.0):
    """Markup over labour cost; per-unit interest cost is passed through unmarked."""
    return (1.0 + markup) * np.asarray(unit_cost_prev, dtype=float) + np.asarray(overhead, dtype=float)


def unit_overhead(interest_cost, units_sold, previous):
    """Net interest cost per unit sold, carried forward when nothing was sold."""
    return unit_cost(np.maximum(np.asarray(interest_cost, dtype=float), 0.0), units_sold, previous)


def plan_and_produce(expected_sales, inventory, inventory_share: float, unit_wage: float,
                     productivity: float = 1.0, investment=0.0, deposits=0.0,
                     deposit_propensity: float = 0.0, capacity=None):
    """Return ``(output, wage_bill, credit_demand)``.

    ``wage_bill`` covers consumption-good production only; ``investment`` is
    paid on top and enters the credit need.  ``capacity`` caps output (labour force).
    """
    output = np.maximum(0.0, np.asarray(expected_sales) * (1 + inventory_share) - inventory)
    if capacity is not None:
        output = np.minimum(output, capacity)
    wage_bill = output * unit_wage / productivity
    credit = np.maximum(0.0, wage_bill + investment - np.asarray(deposits) * (1 - deposit_propensity))
    return output, wage_bill, credit


def switch_probability(x_old, x_new, intensity: float):
    """Probability of moving to a cheaper supplier: 1 - exp(eps * (x_new - x_old) / x_old)."""
    x_old = np.asarray(x_old, dtype=float)
    x_new = np.asarray(x_new, dtype=float)
    rel = np.divide(x_new - x_old, x_old, out=np.zeros(np.broadcast(x_old, x_new).shape),
                    where=x_old > 0)
    p = np.where(x_new < x_old, 1.0 - np.exp(intensity * rel), 0.0)
    return p if p.ndim else float(p)


def choose_partner(current: int, candidates, prices, intensity: float, rng: np.random.Generator) -> int:
    """Keep ``current`` or move to the cheapest of ``candidates``."""
    candidates = list(candidates)
    if not candidates:
        return current
    best = min(candidates, key=lambda c: (prices[c], c))
    if rng.random() < switch_probability(prices[current], prices[best], intensity):
        return best
    return current


def choose_partners(current: np.ndarray, prices: np.ndarray, subset: int, intensity: float,
                    rng: np.random.Generator, offset: int = 0) -> np.ndarray:
    """Vectorised partner choice.

    ``prices`` is indexed by supplier position; ``current`` holds supplier ids
    equal to position + ``offset``.  Each demander observes ``subset`` suppliers
    drawn uniformly (with replacement) and may switch to the cheapest one.
    """
    n, m = len(current), len(prices)
    k = max(1, min(subset, m))
    cands = rng.integers(0, m, size=(n, k))
    cand_prices = prices[cands]
    best_pos = cands[np.arange(n), np.argmin(cand_prices, axis=1)]
    p_old = prices[current - offset]
    p_switch = switch_probability(p_old, prices[best_pos], intensity)
    draws = rng.random(n)
    return np.where(draws < p_switch, best_pos + offset, current)


def consume_and_tax(expected_income, deposits, wage, tax_rate: float, alpha_income: float,
                    alpha_wealth: float, leverage: float):
    """Return ``(consumption, new_credit, taxes)``.

    ``deposits`` are what the household holds before spending (after taxes);
    borrowing fills the gap up to ``leverage * expected_income``.
    """
    expected_income = np.asarray(expected_income, dtype=float)
    deposits = np.asarray(deposits, dtype=float)
    taxes = tax_rate * np.asarray(wage, dtype=float)
    desired = np.maximum(0.0, alpha_income * expected_income + alpha_wealth * deposits)
    cash = np.maximum(deposits, 0.0)
    credit = np.minimum(np.maximum(0.0, desired - cash), np.maximum(leverage * expected_income, 0.0))
    consumption = np.minimum(desired, cash + credit)
    return consumption, credit, taxes


def ration(demand_units: np.ndarray, supplier: np.ndarray, available: np.ndarray,
           extra_demand: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Pro-rata goods rationing.

    Returns ``(fill_ratio_per_supplier, total_demand_per_supplier)``; a
    supplier's buyers all receive the same fraction of what they asked for.
    """
    total = np.bincount(supplier, weights=demand_units, minlength=len(available))
    if extra_demand is not None:
        total = total + extra_demand
    ratio = np.ones_like(total)
    short = total > available
    ratio[short] = np.maximum(available[short], 0.0) / total[short]
    return ratio, total
