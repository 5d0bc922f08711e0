import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibsfc import banking as bk
from ibsfc.ledger import StructuralError

from oracles import closes, profits_oracle, random_banks, random_rates

RATES = bk.PolicyRates()


def settle_securities(bank, cap, rates):
    """The per-bank part of the securities event: reserves, then the bills/advances buffer."""
    bank.hpm = bk.required_reserves(bank.deposits, rates)
    bank.deposit_facility -= bank.excess_reserves
    bank.excess_reserves = 0.0
    bills, adv, overflow = bk.bills_and_advances(bank, cap, rates)
    bank.bills, bank.advances = bills, adv
    bank.deposit_facility += overflow
    bank.excess_reserves = overflow
    return bank


def test_policy_rates_corridor():
    assert RATES.icb_t == pytest.approx(0.010)
    assert RATES.icb_d <= RATES.icb_t <= RATES.icb_l
    assert RATES.half_width == pytest.approx(0.005)


def test_required_reserves():
    assert bk.required_reserves(1000.0, bk.PolicyRates(mu=0.01, v=0.01)) == pytest.approx(20.0)
    assert bk.required_reserves(0.0, RATES) == 0.0


def slack_bank(residual):
    # deposits 1000, loans chosen so the funding residual equals ``residual``
    d = 1000.0
    return bk.BankState(bk.COMMERCIAL, deposits=d, loans=d - RATES.mu * d - residual)


def test_bills_first_argument_binds():
    bills, adv, over = bk.bills_and_advances(slack_bank(50.0), 80.0, RATES)
    assert bills == pytest.approx(50.0) and adv == pytest.approx(RATES.v * 1000) and over == pytest.approx(0.0)


def test_bills_cap_binds():
    bills, adv, over = bk.bills_and_advances(slack_bank(120.0), 80.0, RATES)
    assert bills == 80.0 and over == pytest.approx(40.0)


def test_negative_residual_takes_advances_and_closes():
    b = slack_bank(-30.0)
    settle_securities(b, 80.0, RATES)
    assert b.bills == 0.0
    assert b.advances == pytest.approx(RATES.v * 1000 + 30.0)
    assert closes(b)


def test_negative_advances_is_structural():
    # only a negative deposit stock can push v*D below a negative residual
    b = bk.BankState(bk.COMMERCIAL, deposits=-1e6, net_worth=0.99e6 - 1.0)
    with pytest.raises(StructuralError):
        bk.bills_and_advances(b, 0.0, RATES)


def test_buffer_closes_random_balance_sheets():
    rng = np.random.default_rng(1)
    for b in random_banks(1000, seed=2):
        rates = random_rates(rng)
        b.excess_reserves = 0.0
        # net worth is the balancing item of whatever stocks were drawn
        b.net_worth = 0.0
        settle_securities(b, rng.uniform(0, 500), rates)
        b.net_worth = b.assets() - b.liabilities()
        settle_securities(b, rng.uniform(0, 500), rates)
        assert closes(b)
        # branch exclusivity
        normal = b.bills >= 0 and b.advances == pytest.approx(rates.v * b.deposits)
        takeover = b.bills == 0 and b.advances >= rates.v * b.deposits
        assert normal or takeover


def test_transfer_npl():
    assert bk.transfer_npl(1000.0, 0.01) == pytest.approx((10.0, 990.0, 10.0))
    assert bk.transfer_npl(1000.0, 0.0) == (0.0, 1000.0, 0.0)


def test_profits_examples():
    assert bk.profits(bk.BankState(bk.COMMERCIAL), RATES) == 0.0
    assert bk.profits(bk.BankState(bk.COMMERCIAL, loans=100.0, loan_rate=0.05), RATES) == pytest.approx(5.0)


def test_profits_oracle():
    rng = np.random.default_rng(3)
    banks = random_banks(1000, seed=4)
    rates = random_rates(rng)
    got = np.array([bk.profits(b, rates) for b in banks])
    np.testing.assert_allclose(got, profits_oracle(banks, rates), rtol=0, atol=1e-10)


def test_payment_flow_symmetry():
    assert bk.payment_flow(bk.COMMERCIAL, 10.0, 8.0) == 2.0
    assert bk.payment_flow(bk.BUSINESS, 10.0, 8.0) == -2.0
    with pytest.raises(ValueError):
        bk.payment_flow("shadow", 1.0, 1.0)


def test_interbank_position_examples():
    assert bk.interbank_position(-100.0, -20.0) == (bk.DEFICIT, 120.0, 0.0)
    assert bk.interbank_position(-100.0, 0.0) == (bk.DEFICIT, 100.0, 0.0)
    assert bk.interbank_position(100.0, 30.0) == (bk.SURPLUS, 0.0, 70.0)
    assert bk.interbank_position(0.0, 5.0) == (bk.NEUTRAL, 0.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(-1e5, 1e5))
def test_position_status_matches_flow(flow, dhpm):
    status, df, lf = bk.interbank_position(flow, dhpm)
    assert df >= 0 and lf >= 0 and not (df > 0 and lf > 0)
    assert (status == bk.DEFICIT) == (flow < 0)
    assert (status == bk.SURPLUS) == (flow > 0)


def test_credit_rates():
    il, id_ = bk.update_credit_rates(0.02, 0.5, 0.5)
    assert il == pytest.approx(0.03) and id_ == pytest.approx(0.01)
    assert bk.update_credit_rates(0.02, 0.5, 1.0)[1] == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 0.1), st.floats(0, 2), st.floats(0, 1))
def test_intermediation_margin_non_negative(zeta, markup, markdown):
    il, id_ = bk.update_credit_rates(zeta, markup, markdown)
    assert il >= id_ >= 0
