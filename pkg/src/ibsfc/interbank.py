"""Overnight/term interbank market: NSFR stability profiles, maturity splits,
the two matching protocols, standing facilities, rate clearing, funding costs
and rationing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .banking import COMMERCIAL, BankState
from .config import NsfrWeights

BASELINE = "baseline"
MATURITY = "maturity"


@dataclass
class StabilityProfile:
    am: float
    lm: float
    rsf_share: float  # b_m
    asf_share: float  # a_m
    ms: float
    bor: float = 0.0
    bor_target: float = 0.0
    pi_b: float = 0.0
    lor: float = 0.0
    lor_target: float = 0.0
    pi_l: float = 0.0

    @property
    def stable(self) -> bool:
        return self.ms >= 1.0


def nsfr_components(prev: BankState, w: NsfrWeights) -> StabilityProfile:
    """Stability profile from last period's balance sheet."""
    am = (prev.loans + prev.hpm + prev.bills + prev.bonds + prev.iba_on + prev.iba_term
          + prev.deposit_facility)
    lm = (prev.deposits + prev.ibl_on + prev.ibl_term + prev.lending_facility + prev.npl
          + prev.advances)
    if prev.kind == COMMERCIAL:
        rsf = (w.m1 * prev.iba_on + w.m2 * (prev.loans + prev.bills + prev.iba_term)
               + w.m3 * prev.bonds)
    else:
        rsf = (w.m1 * (prev.loans + prev.iba_on) + w.m2 * (prev.bills + prev.iba_term)
               + w.m3 * prev.bonds)
    asf = w.m4 * prev.deposits + w.m5 * prev.ibl_term
    b_m = rsf / am if am > 0 else 0.0
    a_m = asf / lm if lm > 0 else 0.0
    return StabilityProfile(am, lm, b_m, a_m, margin_of_stability(asf, rsf),
                            bor=1.0 - a_m, lor=1.0 - b_m)


# stocks below this are round-off left behind by customers moving between banks
STOCK_TOL = 1e-9


def margin_of_stability(asf: float, rsf: float) -> float:
    """ASF/RSF with the degenerate cases pinned: no required funding is maximally stable."""
    asf = 0.0 if abs(asf) < STOCK_TOL else asf
    rsf = 0.0 if abs(rsf) < STOCK_TOL else rsf
    if rsf > 0:
        return asf / rsf
    return math.inf if asf > 0 else 1.0


def theta(prev_on: float, prev_term: float, icb_l: float, pdu: float, a0: float) -> float:
    """Borrowers' willingness to go overnight."""
    return a0 + (icb_l - prev_on) + (prev_term - prev_on) - pdu


def lbw(prev_on: float, prev_term: float, icb_d: float, pdu: float, a0: float) -> float:
    """Lenders' willingness to go overnight."""
    return a0 + pdu + (prev_on - icb_d) - (prev_term - prev_on)


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def borrower_split(df: float, profile: StabilityProfile, theta_t: float, u: float,
                   use_stability: bool = True) -> tuple[float, float]:
    """Split demand DF into (overnight, term); ``u`` is a U(0,1) draw for the target ratio.

    With ``use_stability=False`` (Baseline protocol) only the market parameter matters.
    """
    if use_stability:
        profile.bor_target = profile.bor if profile.ms < 1 else u * profile.bor
        profile.pi_b = profile.bor - profile.bor_target
        share = _clip01(theta_t * profile.pi_b)
    else:
        share = _clip01(theta_t)
    on = df * share
    return on, df - on


def lender_split(lf: float, profile: StabilityProfile, lbw_t: float, u: float,
                 use_stability: bool = True) -> tuple[float, float]:
    if use_stability:
        profile.lor_target = profile.lor if profile.ms >= 1 else u * profile.lor
        profile.pi_l = profile.lor - profile.lor_target
        share = _clip01(lbw_t * profile.pi_l)
    else:
        share = _clip01(lbw_t)
    on = lf * share
    return on, lf - on


@dataclass
class InterbankOrder:
    bank: int
    amount: float
    on: float
    term: float
    # matching score input: a_m for borrowers, MS for lenders
    stability: float = 0.0


@dataclass
class Match:
    lender: int
    borrower: int
    amount_on: float
    amount_term: float

    @property
    def amount(self) -> float:
        return self.amount_on + self.amount_term


@dataclass
class SegmentBook:
    n_banks: int
    df_on: np.ndarray = None
    df_term: np.ndarray = None
    lf_on: np.ndarray = None
    lf_term: np.ndarray = None
    matches: list[Match] = field(default_factory=list)
    lending_facility: np.ndarray = None
    deposit_facility: np.ndarray = None
    excess_on: float = 0.0
    excess_term: float = 0.0
    rate_on: float = 0.0
    rate_term: float = 0.0
    gamma_on: float = 0.0
    gamma_term: float = 0.0

    def __post_init__(self):
        for name in ("df_on", "df_term", "lf_on", "lf_term", "lending_facility", "deposit_facility"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(self.n_banks))

    def borrowed(self) -> tuple[np.ndarray, np.ndarray]:
        on, term = np.zeros(self.n_banks), np.zeros(self.n_banks)
        for m in self.matches:
            on[m.borrower] += m.amount_on
            term[m.borrower] += m.amount_term
        return on, term

    def lent(self) -> tuple[np.ndarray, np.ndarray]:
        on, term = np.zeros(self.n_banks), np.zeros(self.n_banks)
        for m in self.matches:
            on[m.lender] += m.amount_on
            term[m.lender] += m.amount_term
        return on, term

    def settled(self) -> tuple[float, float]:
        return (math.fsum(m.amount_on for m in self.matches),
                math.fsum(m.amount_term for m in self.matches))

    def matched_borrowers(self) -> set[int]:
        return {m.borrower for m in self.matches}


def _new_book(n_banks, borrowers, lenders) -> SegmentBook:
    book = SegmentBook(n_banks)
    for o in borrowers:
        book.df_on[o.bank], book.df_term[o.bank] = o.on, o.term
    for o in lenders:
        book.lf_on[o.bank], book.lf_term[o.bank] = o.on, o.term
    return book


def match_baseline(borrowers: list[InterbankOrder], lenders: list[InterbankOrder],
                   rng: np.random.Generator, n_banks: int | None = None) -> SegmentBook:
    """Amount-based matching with fully accommodating lenders.

    Borrowers in random order take the unmatched lender with the largest LF that
    covers their DF (the largest LF overall when none does).  The lender supplies
    exactly the requested overnight and term amounts, so the segment books clear.
    """
    n_banks = n_banks or 1 + max([o.bank for o in borrowers + lenders], default=-1)
    book = _new_book(n_banks, borrowers, lenders)
    pool = {o.bank: o for o in lenders}
    for idx in rng.permutation(len(borrowers)):
        b = borrowers[idx]
        if not pool:
            break
        covering = [o for o in pool.values() if o.amount >= b.amount]
        cands = covering or list(pool.values())
        lender = max(cands, key=lambda o: (o.amount, -o.bank))
        del pool[lender.bank]
        book.matches.append(Match(lender.bank, b.bank, b.on, b.term))
    # accommodating lenders quote exactly what they are asked for; unmatched
    # banks go straight to the facilities and post nothing to either segment
    matched = book.matched_borrowers()
    book.excess_on = math.fsum(book.df_on[i] for i in matched) - book.settled()[0]
    book.excess_term = math.fsum(book.df_term[i] for i in matched) - book.settled()[1]
    standing_facilities(book, borrowers, lenders)
    return book


def stability_distance(lender_ms: float, borrower_asf: float) -> float:
    return abs((1.0 - lender_ms) - (1.0 - borrower_asf))


def match_maturity(borrowers: list[InterbankOrder], lenders: list[InterbankOrder],
                   rng: np.random.Generator, n_banks: int | None = None) -> SegmentBook:
    """Active search on stability: each borrower (random order) takes the unmatched
    lender whose maturity mismatch is closest to its own ASF share; each segment
    settles at the short side of the pair."""
    n_banks = n_banks or 1 + max([o.bank for o in borrowers + lenders], default=-1)
    book = _new_book(n_banks, borrowers, lenders)
    pool = {o.bank: o for o in lenders}
    for idx in rng.permutation(len(borrowers)):
        b = borrowers[idx]
        if not pool:
            break
        lender = min(pool.values(),
                     key=lambda o: (stability_distance(o.stability, b.stability), o.bank))
        del pool[lender.bank]
        book.matches.append(Match(lender.bank, b.bank, min(b.on, lender.on), min(b.term, lender.term)))
    book.excess_on = float(book.df_on.sum() - book.lf_on.sum())
    book.excess_term = float(book.df_term.sum() - book.lf_term.sum())
    standing_facilities(book, borrowers, lenders)
    return book


def standing_facilities(book: SegmentBook, borrowers: list[InterbankOrder],
                        lenders: list[InterbankOrder]) -> SegmentBook:
    """Unserved demand goes to the lending facility, unplaced supply to the deposit facility."""
    got_on, got_term = book.borrowed()
    gave_on, gave_term = book.lent()
    for o in borrowers:
        book.lending_facility[o.bank] = max(0.0, o.amount - got_on[o.bank] - got_term[o.bank])
    for o in lenders:
        book.deposit_facility[o.bank] = max(0.0, o.amount - gave_on[o.bank] - gave_term[o.bank])
    return book


def clear_rate(excess: float, icb_d: float, icb_l: float, sigma: float) -> float:
    z = sigma * excess
    # numerically safe logistic
    if z >= 0:
        s = 1.0 / (1.0 + math.exp(-z))
    else:
        ez = math.exp(z)
        s = ez / (1.0 + ez)
    return icb_d + (icb_l - icb_d) * s


def clear_rates(book: SegmentBook, icb_d: float, icb_l: float, sigma: float) -> tuple[float, float]:
    """Logistic clearing on the excess demand recorded by the matching protocol."""
    book.rate_on = clear_rate(book.excess_on, icb_d, icb_l, sigma)
    book.rate_term = clear_rate(book.excess_term, icb_d, icb_l, sigma)
    return book.rate_on, book.rate_term


def funding_costs(icb_t: float, icb_l: float, i_on: float, i_term: float,
                  borrowed_on: bool, borrowed_term: bool, used_lending_facility: bool) -> float:
    terms = [icb_t]
    if borrowed_on:
        terms.append(i_on)
    if borrowed_term:
        terms.append(i_term)
    if used_lending_facility:
        terms.append(icb_l)
    return math.fsum(terms) / len(terms)


def rationing(settled: float, demand: float) -> float:
    if demand <= 0:
        return 0.0
    return min(1.0, max(0.0, 1.0 - settled / demand))


def book_rationing(book: SegmentBook, matched_only: bool = False) -> tuple[float, float]:
    on, term = book.borrowed()
    idx = sorted(book.matched_borrowers()) if matched_only else slice(None)
    g_on = rationing(float(on[idx].sum()), float(book.df_on[idx].sum()))
    g_term = rationing(float(term[idx].sum()), float(book.df_term[idx].sum()))
    return g_on, g_term
