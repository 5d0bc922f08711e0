"""Independent recomputations of the bank-level and interbank formulas.

Written against the equations directly and vectorised with numpy, so they
share no code path with the package implementation they check.
"""

import itertools

import numpy as np

from ibsfc.banking import BUSINESS, COMMERCIAL, BankState, PolicyRates
from ibsfc.config import NsfrWeights

STOCKS = ("loans", "deposits", "hpm", "bills", "bonds", "advances", "lending_facility",
          "deposit_facility", "npl", "iba_on", "iba_term", "ibl_on", "ibl_term", "net_worth")


def random_banks(n: int, seed: int = 0) -> list[BankState]:
    """Random balance sheets; about a fifth of the stocks are zeroed to reach edge branches."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        vals = rng.uniform(0, 1000, len(STOCKS)) * (rng.random(len(STOCKS)) > 0.2)
        b = BankState(kind=COMMERCIAL if rng.random() < 0.5 else BUSINESS, **dict(zip(STOCKS, vals)))
        b.net_worth = rng.uniform(-200, 200)
        b.loan_rate, b.deposit_rate = rng.uniform(0, 0.05, 2)
        out.append(b)
    return out


def random_rates(rng) -> PolicyRates:
    icb_d = rng.uniform(0, 0.02)
    return PolicyRates(icb_d=icb_d, icb_l=icb_d + rng.uniform(0.001, 0.02),
                       bills_rate=rng.uniform(0, 0.02), bonds_rate=rng.uniform(0, 0.02),
                       mu=rng.uniform(0, 0.1), v=rng.uniform(0, 0.1))


def stock_matrix(banks) -> dict[str, np.ndarray]:
    return {s: np.array([getattr(b, s) for b in banks]) for s in STOCKS}


# --- stability profile ------------------------------------------------------

def nsfr_oracle(banks, w: NsfrWeights):
    """(AM, LM, b_m, a_m, MS) per bank, from weight vectors over the stock vector."""
    s = stock_matrix(banks)
    asset_rows = ("loans", "hpm", "bills", "bonds", "iba_on", "iba_term", "deposit_facility")
    liab_rows = ("deposits", "ibl_on", "ibl_term", "lending_facility", "npl", "advances")
    A = np.vstack([s[r] for r in asset_rows])
    Lm = np.vstack([s[r] for r in liab_rows])
    wc = np.array([w.m2, 0, w.m2, w.m3, w.m1, w.m2, 0])   # commercial: loans weighted like bills
    wb = np.array([w.m1, 0, w.m2, w.m3, w.m1, w.m2, 0])   # business: loans weighted like overnight
    wl = np.array([w.m4, 0, w.m5, 0, 0, 0])
    commercial = np.array([b.kind == COMMERCIAL for b in banks])
    rsf = np.where(commercial, wc @ A, wb @ A)
    asf = wl @ Lm
    am, lm = A.sum(axis=0), Lm.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        b_m = np.where(am > 0, rsf / am, 0.0)
        a_m = np.where(lm > 0, asf / lm, 0.0)
        ms = np.where(rsf > 0, asf / rsf, np.where(asf > 0, np.inf, 1.0))
    return am, lm, b_m, a_m, ms


# --- splits -----------------------------------------------------------------

def split_oracle(amount, ratio, ms, param, u, borrower: bool):
    """Overnight and term amounts. ``ratio`` is BOR or LOR; the target takes the
    full ratio on the unconstrained side of MS = 1 and a uniform fraction otherwise."""
    amount, ratio, ms, u = map(np.asarray, (amount, ratio, ms, u))
    keep = ms < 1 if borrower else ms >= 1
    target = np.where(keep, ratio, u * ratio)
    pi = ratio - target
    share = np.clip(param * pi, 0, 1)
    return amount * share, amount - amount * share, pi


def theta_oracle(a0, icb_l, i_on, i_term, pdu):
    return a0 + icb_l + i_term - 2 * i_on - pdu


def lbw_oracle(a0, icb_d, i_on, i_term, pdu):
    return a0 + pdu + 2 * i_on - icb_d - i_term


# --- rates and funding costs -------------------------------------------------

def rate_oracle(excess, icb_d, icb_l, sigma):
    # logistic written through tanh
    return icb_d + (icb_l - icb_d) * 0.5 * (1 + np.tanh(0.5 * sigma * np.asarray(excess)))


def funding_cost_oracle(icb_t, icb_l, i_on, i_term, pattern):
    vals = [icb_t] + [x for x, used in zip((i_on, i_term, icb_l), pattern) if used]
    return sum(vals) / len(vals)


PATTERNS = list(itertools.product((False, True), repeat=3))


# --- bank mechanics ----------------------------------------------------------

def profits_oracle(banks, rates: PolicyRates):
    s = stock_matrix(banks)
    lr = np.array([b.loan_rate for b in banks])
    dr = np.array([b.deposit_rate for b in banks])
    income = np.vstack([lr * s["loans"], rates.icb_t * s["hpm"], rates.bills_rate * s["bills"],
                        rates.bonds_rate * s["bonds"], rates.icb_d * s["deposit_facility"]]).sum(axis=0)
    cost = np.vstack([dr * s["deposits"], rates.icb_t * s["advances"],
                      rates.icb_l * s["lending_facility"]]).sum(axis=0)
    return income - cost


def closes(bank: BankState, tol: float = 1e-10) -> bool:
    """Assets equal liabilities plus net worth."""
    gap = bank.assets() - bank.liabilities() - bank.net_worth
    return abs(gap) <= tol * max(1.0, bank.assets())


def short_side(demand, supply):
    return np.minimum(demand, supply)
