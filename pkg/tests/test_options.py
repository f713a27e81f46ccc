"""Bond option Monte Carlo tests.

The strike-axis checks are deterministic given the seed because strikes
share one set of simulated paths: (x - K)^+ is pointwise decreasing and
convex in K, so the sample means inherit both properties exactly.
"""

import math

import numpy as np
import pytest

from randmix.errors import DomainError
from randmix.esscher import MartingaleSpec
from randmix.filtering import BrownianLinearInfo
from randmix.mixers import BinaryExpDecay, DiscretePrior
from randmix.options import OptionQuote, OptionSpec, mc_bond_call, option_surface
from randmix.pricing import FlatCurve, PricingModel, bond_price
from randmix.processes import GammaParams
from randmix.rng import RngStream
from randmix.simulation import sample_states


def fig15_model():
    spec = MartingaleSpec(
        driver=GammaParams(m=0.5, kappa=0.5),
        mixer=BinaryExpDecay(c=-2.0, b=0.03),
        prior=DiscretePrior.binary(0.5),
        info=BrownianLinearInfo(sigma=0.1),
    )
    return PricingModel(spec, FlatCurve(0.04))


def state_at_2(model):
    return sample_states(model.spec, 2.0, 1, RngStream(4242)).state(0)


def test_option_spec_validation():
    rng = RngStream(1)
    with pytest.raises(DomainError):
        OptionSpec(s=3.0, t=2.0, T=10.0, strike=0.5, n_paths=100, rng=rng)
    with pytest.raises(DomainError):
        OptionSpec(s=1.0, t=10.0, T=10.0, strike=0.5, n_paths=100, rng=rng)
    with pytest.raises(DomainError):
        OptionSpec(s=1.0, t=2.0, T=10.0, strike=0.5, n_paths=1, rng=rng)
    with pytest.warns(UserWarning):
        OptionSpec(s=1.0, t=2.0, T=10.0, strike=1.5, n_paths=100, rng=rng)


def test_quote_rejects_negative_values():
    with pytest.raises(DomainError):
        OptionQuote(-0.1, 0.0, 10)
    with pytest.raises(DomainError):
        OptionQuote(0.1, -1e-3, 10)


def test_state_time_must_match_valuation_time():
    model = fig15_model()
    state = state_at_2(model)
    spec = OptionSpec(s=3.0, t=5.0, T=10.0, strike=0.5, n_paths=10, rng=RngStream(2))
    with pytest.raises(DomainError):
        mc_bond_call(model, state, spec)


def test_tiny_strike_recovers_bond_price():
    model = fig15_model()
    state = state_at_2(model)
    spec = OptionSpec(s=2.0, t=5.0, T=10.0, strike=1e-12, n_paths=20_000, rng=RngStream(7))
    quote = mc_bond_call(model, state, spec)
    want = bond_price(model, state, 10.0)
    assert abs(quote.price - want) < 3 * quote.std_error
    assert quote.std_error > 0


def test_unit_strike_is_worthless():
    model = fig15_model()
    state = state_at_2(model)
    with pytest.warns(UserWarning):
        spec = OptionSpec(s=2.0, t=5.0, T=10.0, strike=1.0, n_paths=2_000, rng=RngStream(8))
    quote = mc_bond_call(model, state, spec)
    assert quote.price == 0.0
    assert quote.std_error == 0.0


def test_immediate_expiry_is_deterministic():
    model = fig15_model()
    state = state_at_2(model)
    spec = OptionSpec(s=2.0, t=2.0, T=10.0, strike=0.5, n_paths=500, rng=RngStream(9))
    quote = mc_bond_call(model, state, spec)
    intrinsic = max(bond_price(model, state, 10.0) - 0.5, 0.0)
    assert quote.price == pytest.approx(intrinsic, rel=1e-9)
    assert quote.std_error == pytest.approx(0.0, abs=1e-12)


def test_prices_decrease_and_stay_convex_in_strike():
    model = fig15_model()
    state = state_at_2(model)
    strikes = np.arange(0.1, 0.95, 0.1)
    surf = option_surface(model, state, 10.0, [5.0], strikes, 4_000, RngStream(11))
    row = surf.prices[0]
    assert np.all(np.diff(row) <= 1e-15)
    assert np.all(np.diff(row, 2) >= -1e-12)


def test_surface_endpoints_and_coupling():
    model = fig15_model()
    state = state_at_2(model)
    surf = option_surface(
        model, state, 10.0, [4.0, 6.0], [1e-12, 0.5, 1.0], 8_000, RngStream(12)
    )
    p_sT = bond_price(model, state, 10.0)
    for i in range(2):
        assert abs(surf.prices[i, 0] - p_sT) < 3 * surf.std_errors[i, 0]
        assert surf.prices[i, 2] == 0.0
    assert np.all(surf.prices >= 0)


def test_surface_reproducible_by_seed():
    model = fig15_model()
    state = state_at_2(model)
    a = option_surface(model, state, 10.0, [5.0], [0.4, 0.6], 500, RngStream(13))
    b = option_surface(model, state, 10.0, [5.0], [0.4, 0.6], 500, RngStream(13))
    c = option_surface(model, state, 10.0, [5.0], [0.4, 0.6], 500, RngStream(14))
    assert np.array_equal(a.prices, b.prices)
    assert not np.array_equal(a.prices, c.prices)


def test_surface_rejects_bad_expiry():
    model = fig15_model()
    state = state_at_2(model)
    with pytest.raises(DomainError):
        option_surface(model, state, 10.0, [1.0], [0.5], 100, RngStream(15))
    with pytest.raises(DomainError):
        option_surface(model, state, 10.0, [10.0], [0.5], 100, RngStream(15))


def test_martingale_pricing_consistency_across_expiries():
    # the discounted bond makes E[pi_t P_tT] independent of the expiry date
    model = fig15_model()
    state = state_at_2(model)
    vals = []
    for i, t in enumerate((3.0, 7.0)):
        spec = OptionSpec(s=2.0, t=t, T=10.0, strike=1e-12, n_paths=20_000, rng=RngStream(60 + i))
        q = mc_bond_call(model, state, spec)
        vals.append((q.price, q.std_error))
    gap = abs(vals[0][0] - vals[1][0])
    assert gap < 3 * math.hypot(vals[0][1], vals[1][1])
