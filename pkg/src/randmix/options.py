"""Monte Carlo pricing of European calls on discount bonds.

C_st = (1/pi_s) E[pi_t (P_tT - K)^+ | F_s]: paths are evolved conditionally
on the time-s state, the kernel and bond price are evaluated per path with
the shared quadrature rule, and strikes reuse one simulation so that prices
along the strike axis are coupled (monotone and convex by construction).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .esscher import MarketState
from .pricing import PricingModel, bond_price_batch, pricing_kernel, pricing_kernel_batch
from .rng import RngStream
from .simulation import evolve, replicate_state


@dataclass(frozen=True)
class OptionSpec:
    """Call on the T-bond: valued at s, exercised at t, strike K in (0, 1)."""

    s: float
    t: float
    T: float
    strike: float
    n_paths: int
    rng: RngStream

    def __post_init__(self):
        if not 0 <= self.s <= self.t or not self.t < self.T:
            raise DomainError("need valuation s <= expiry t < bond maturity T")
        if self.n_paths < 2:
            raise DomainError("need at least 2 paths for a standard error")
        if not 0.0 < self.strike < 1.0:
            warnings.warn(
                f"strike {self.strike} outside (0, 1), the bond price range under positive rates",
                stacklevel=2,
            )


@dataclass(frozen=True)
class OptionQuote:
    price: float
    std_error: float
    n_paths: int

    def __post_init__(self):
        if self.price < 0 or self.std_error < 0:
            raise DomainError("quotes are non-negative")


@dataclass(frozen=True)
class OptionSurface:
    maturity: float
    expiries: np.ndarray
    strikes: np.ndarray
    prices: np.ndarray  # (n_expiries, n_strikes)
    std_errors: np.ndarray
    n_paths: int

    def quote(self, i: int, j: int) -> OptionQuote:
        return OptionQuote(float(self.prices[i, j]), float(self.std_errors[i, j]), self.n_paths)


def _expiry_samples(model: PricingModel, state: MarketState, expiry: float, maturity: float,
                    n_paths: int, rng: RngStream):
    """(pi_t, P_tT) per path after conditional evolution from the state."""
    batch = replicate_state(model.spec, state, n_paths)
    batch = evolve(model.spec, batch, expiry, rng)
    pi_t = pricing_kernel_batch(model, batch.t, batch.driver, batch.weights)
    p_tT = bond_price_batch(model, batch.t, batch.driver, batch.weights, [maturity])[:, 0]
    return pi_t, p_tT


def _quote_from_samples(pi_s: float, pi_t: np.ndarray, p_tT: np.ndarray, strike: float,
                        n_paths: int) -> OptionQuote:
    payoff = pi_t * np.maximum(p_tT - strike, 0.0) / pi_s
    price = float(payoff.mean())
    se = float(payoff.std(ddof=1) / math.sqrt(len(payoff)))
    return OptionQuote(price, se, n_paths)


def mc_bond_call(model: PricingModel, state: MarketState, spec: OptionSpec) -> OptionQuote:
    if abs(state.t - spec.s) > 1e-12:
        raise DomainError(f"state time {state.t} does not match valuation time {spec.s}")
    pi_s = pricing_kernel(model, state)
    pi_t, p_tT = _expiry_samples(model, state, spec.t, spec.T, spec.n_paths, spec.rng)
    return _quote_from_samples(pi_s, pi_t, p_tT, spec.strike, spec.n_paths)


def option_surface(model: PricingModel, state: MarketState, maturity: float, expiries,
                   strikes, n_paths: int, rng: RngStream) -> OptionSurface:
    """Price grid over expiries and strikes; strikes share paths per expiry."""
    expiries = np.atleast_1d(np.asarray(expiries, dtype=float))
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    for t in expiries:
        if not state.t <= t < maturity:
            raise DomainError(f"expiry {t} outside [valuation time, bond maturity)")
    pi_s = pricing_kernel(model, state)
    prices = np.empty((len(expiries), len(strikes)))
    errs = np.empty_like(prices)
    for i, t in enumerate(expiries):
        pi_t, p_tT = _expiry_samples(model, state, float(t), maturity, n_paths, rng.child(i))
        for j, k in enumerate(strikes):
            q = _quote_from_samples(pi_s, pi_t, p_tT, float(k), n_paths)
            prices[i, j] = q.price
            errs[i, j] = q.std_error
    return OptionSurface(maturity, expiries, strikes, prices, errs, n_paths)
