"""Bond pricing from filtered exponential martingales.

A pricing model combines a martingale specification with an initial discount
curve P_0t. The pricing kernel is pi_t = integral_t^inf rho(u) M_hat_tu du
with rho = -dP_0u/du, so every bond price is a ratio of two suffix integrals
of the same integrand, evaluated on one shared quadrature rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CurveError, DomainError
from .esscher import MarketState, MartingaleSpec, filtered_m_matrix, _signal_values
from .mixers import Chameleon, evaluate_mixer, prior_nodes
from .processes import BrownianParams
from .quadrature import QuadratureConfig, SemiInfiniteRule, build_rule

# Integrand chunking bound: states * quadrature nodes * prior nodes per block.
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class FlatCurve:
    """P_0t = exp(-rate * t); the workhorse for flat 4 percent examples."""

    rate: float

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate <= 0:
            raise DomainError(f"need rate > 0, got {self.rate}")

    def discount(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=float))

    def rho(self, t):
        t = np.asarray(t, dtype=float)
        return self.rate * np.exp(-self.rate * t)


@dataclass(frozen=True)
class TabulatedCurve:
    """Discount factors at pillar times, log-linear in between.

    Beyond the last pillar the curve extrapolates at the terminal forward
    rate, which must be positive for the pricing integrals to converge.
    """

    times: tuple
    discounts: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        d = np.asarray(self.discounts, dtype=float)
        if t.ndim != 1 or t.shape != d.shape or len(t) < 2:
            raise CurveError("need matching 1-d times and discounts with at least two pillars")
        if t[0] != 0.0 or not np.all(np.diff(t) > 0):
            raise CurveError("pillar times must start at 0 and increase strictly")
        if d[0] != 1.0:
            raise CurveError(f"need P(0) = 1, got {d[0]}")
        if np.any(d <= 0) or np.any(np.diff(d) >= 0):
            raise CurveError("discount factors must be positive and strictly decreasing")
        object.__setattr__(self, "times", tuple(float(v) for v in t))
        object.__setattr__(self, "discounts", tuple(float(v) for v in d))
        fwd = -np.diff(np.log(d)) / np.diff(t)
        object.__setattr__(self, "_log_d", np.log(d))
        object.__setattr__(self, "_t", t)
        object.__setattr__(self, "_terminal_forward", float(fwd[-1]))

    def discount(self, t):
        t = np.asarray(t, dtype=float)
        logd = np.interp(t, self._t, self._log_d)
        over = t > self._t[-1]
        if np.any(over):
            logd = np.where(over, self._log_d[-1] - self._terminal_forward * (t - self._t[-1]), logd)
        return np.exp(logd)

    def rho(self, t):
        t = np.asarray(t, dtype=float)
        step = 1e-6 * np.maximum(1.0, np.abs(t))
        lo = np.maximum(t - step, 0.0)
        hi = t + step
        return (self.discount(lo) - self.discount(hi)) / (hi - lo)


def _validate_curve(curve, u_max: float) -> None:
    p0 = float(np.asarray(curve.discount(0.0)))
    if abs(p0 - 1.0) > 1e-12:
        raise CurveError(f"need P(0) = 1, got {p0}")
    tail = float(np.asarray(curve.discount(u_max)))
    if tail >= 0.05:
        raise CurveError(
            f"P({u_max:g}) = {tail:.4g} has not decayed below 0.05; "
            "the quadrature horizon truncates too much mass"
        )
    probe = np.linspace(0.0, u_max, 512)
    rho = np.asarray(curve.rho(probe), dtype=float)
    if np.any(~np.isfinite(rho)) or np.any(rho <= 0):
        bad = probe[np.argmin(rho)]
        raise CurveError(f"initial curve admits arbitrage: rho({bad:.6g}) <= 0")


@dataclass(frozen=True)
class CurvePoint:
    t: float
    maturity: float
    price: float
    zero_rate: float


@dataclass(frozen=True)
class VolStructure:
    """Bond volatility loadings and market prices of risk at one state."""

    theta: np.ndarray  # kernel loading on the driver noise, per maturity
    nu: np.ndarray  # kernel loading on the information noise
    lambda1: float  # -theta_tt
    lambda2: float  # -nu_tt
    bond_theta: np.ndarray  # theta_tT - theta_tt
    bond_nu: np.ndarray


@dataclass(frozen=True)
class PricingModel:
    spec: MartingaleSpec
    curve: FlatCurve | TabulatedCurve
    quad: QuadratureConfig = QuadratureConfig()

    def __post_init__(self):
        x, _ = prior_nodes(self.spec.prior)
        caps = []
        for mixer in (self.spec.mixer, self.spec.mixer2):
            if isinstance(mixer, Chameleon) and mixer.alpha1 > 0:
                caps.append(math.pi / (4.0 * mixer.alpha1))
        if caps:
            quad = replace(
                self.quad,
                osc_cap_width=min(self.quad.osc_cap_width, min(caps)),
                osc_cap_until=max(self.quad.osc_cap_until, float(np.max(x))),
            )
            object.__setattr__(self, "quad", quad)
        _validate_curve(self.curve, self.quad.u_max)


def _as_batch(state: MarketState):
    dv = np.asarray(state.driver_value, dtype=float).reshape(1, -1)
    if dv.shape[1] == 1:
        dv = dv[:, 0]
    w = np.asarray(state.filter.weights, dtype=float).reshape(1, -1)
    return dv, w


def _rho_on_rule(model: PricingModel, rule: SemiInfiniteRule):
    rho_n = np.asarray(model.curve.rho(rule.nodes), dtype=float)
    rho_p = np.asarray(model.curve.rho(rule.probes), dtype=float)
    if np.any(rho_n <= 0) or np.any(rho_p <= 0):
        raise CurveError("initial curve admits arbitrage: rho(u) <= 0 on the pricing grid")
    return rho_n, rho_p


def _mhat_chunked(spec, t, driver_value, weights, u, factor=None):
    n = len(weights)
    n_x = weights.shape[1]
    block = max(1, _CHUNK_BUDGET // max(1, len(u) * n_x))
    if n <= block:
        return filtered_m_matrix(spec, t, driver_value, weights, u, factor)
    parts = [
        filtered_m_matrix(spec, t, driver_value[i : i + block], weights[i : i + block], u, factor)
        for i in range(0, n, block)
    ]
    return np.concatenate(parts, axis=0)


def _kernel_integrals(model: PricingModel, t, driver_value, weights, maturities):
    """Suffix integrals int_T^inf rho(u) M_hat_tu du for T in {t} + maturities.

    Returns (rule, den, nums) with den the T = t integral (the pricing
    kernel before normalisation) and nums of shape (n, k).
    """
    maturities = np.atleast_1d(np.asarray(maturities, dtype=float))
    if np.any(maturities < t):
        raise DomainError("maturities must not precede the state time")
    rule = build_rule(t, model.quad, breakpoints=np.unique(maturities))
    rho_n, rho_p = _rho_on_rule(model, rule)
    m_nodes = _mhat_chunked(model.spec, t, driver_value, weights, rule.nodes)
    m_probes = _mhat_chunked(model.spec, t, driver_value, weights, rule.probes)
    vals = rho_n * m_nodes
    probe_vals = rho_p * m_probes
    den = rule.integrate_values(vals, probe_vals)
    nums = np.stack(
        [rule.integrate_values(vals, probe_vals, from_point=T) for T in maturities], axis=-1
    )
    return rule, den, nums


def pricing_kernel_batch(model: PricingModel, t, driver_value, weights) -> np.ndarray:
    rule = build_rule(t, model.quad)
    rho_n, rho_p = _rho_on_rule(model, rule)
    m_nodes = _mhat_chunked(model.spec, t, driver_value, weights, rule.nodes)
    m_probes = _mhat_chunked(model.spec, t, driver_value, weights, rule.probes)
    return rule.integrate_values(rho_n * m_nodes, rho_p * m_probes)


def bond_price_batch(model: PricingModel, t, driver_value, weights, maturities) -> np.ndarray:
    _, den, nums = _kernel_integrals(model, t, driver_value, weights, maturities)
    return nums / den[..., None]


def short_rate_batch(model: PricingModel, t, driver_value, weights) -> np.ndarray:
    rule = build_rule(t, model.quad)
    rho_n, rho_p = _rho_on_rule(model, rule)
    m_nodes = _mhat_chunked(model.spec, t, driver_value, weights, rule.nodes)
    m_probes = _mhat_chunked(model.spec, t, driver_value, weights, rule.probes)
    den = rule.integrate_values(rho_n * m_nodes, rho_p * m_probes)
    m_t = _mhat_chunked(model.spec, t, driver_value, weights, np.array([t]))[:, 0]
    rho_t = float(np.asarray(model.curve.rho(t)))
    return rho_t * m_t / den


def pricing_kernel(model: PricingModel, state: MarketState) -> float:
    dv, w = _as_batch(state)
    return float(pricing_kernel_batch(model, state.t, dv, w)[0])


def bond_price(model: PricingModel, state: MarketState, maturity: float) -> float:
    dv, w = _as_batch(state)
    return float(bond_price_batch(model, state.t, dv, w, [maturity])[0, 0])


def short_rate(model: PricingModel, state: MarketState) -> float:
    dv, w = _as_batch(state)
    return float(short_rate_batch(model, state.t, dv, w)[0])


def forward_rate(model: PricingModel, state: MarketState, maturity: float) -> float:
    """Instantaneous forward rate r_tT = rho(T) M_hat_tT / int_T^inf rho M_hat du."""
    dv, w = _as_batch(state)
    _, _, nums = _kernel_integrals(model, state.t, dv, w, [maturity])
    m_T = filtered_m_matrix(model.spec, state.t, dv, w, np.array([maturity]))[0, 0]
    rho_T = float(np.asarray(model.curve.rho(maturity)))
    return rho_T * m_T / float(nums[0, 0])


def yield_curve(model: PricingModel, state: MarketState, tenors) -> list[CurvePoint]:
    tenors = np.atleast_1d(np.asarray(tenors, dtype=float))
    if np.any(tenors <= 0):
        raise DomainError("tenors must be positive")
    dv, w = _as_batch(state)
    maturities = state.t + tenors
    prices = bond_price_batch(model, state.t, dv, w, maturities)[0]
    zeros = -np.log(prices) / tenors
    return [
        CurvePoint(state.t, float(T), float(p), float(y))
        for T, p, y in zip(maturities, prices, zeros)
    ]


def yield_curve_batch(model: PricingModel, t, driver_value, weights, tenors) -> np.ndarray:
    """Zero yields, shape (n, k), for a batch of states sharing one time."""
    tenors = np.atleast_1d(np.asarray(tenors, dtype=float))
    if np.any(tenors <= 0):
        raise DomainError("tenors must be positive")
    prices = bond_price_batch(model, t, driver_value, weights, t + tenors)
    return -np.log(prices) / tenors


def bond_volatility_structure(model: PricingModel, state: MarketState, maturities) -> VolStructure:
    """Kernel and bond volatility loadings for a Brownian driver with noisy
    observation; the two loadings multiply the driver and information
    innovations respectively."""
    spec = model.spec
    if not isinstance(spec.driver, BrownianParams):
        raise DomainError("volatility structure requires the Brownian driver")
    maturities = np.atleast_1d(np.asarray(maturities, dtype=float))
    dv, w = _as_batch(state)
    x, _ = prior_nodes(spec.prior)
    rule, den, nums = _kernel_integrals(model, state.t, dv, w, maturities)
    rho_n, rho_p = _rho_on_rule(model, rule)

    def loading(factor_fn):
        f_nodes = factor_fn(rule.nodes)
        f_probes = factor_fn(rule.probes)
        a_nodes = rho_n * filtered_m_matrix(spec, state.t, dv, w, rule.nodes, f_nodes)
        a_probes = rho_p * filtered_m_matrix(spec, state.t, dv, w, rule.probes, f_probes)
        num_t = float(rule.integrate_values(a_nodes, a_probes)[0])
        num_T = np.array(
            [float(rule.integrate_values(a_nodes, a_probes, from_point=T)[0]) for T in maturities]
        )
        return num_T, num_t

    h_factor = lambda u: evaluate_mixer(spec.mixer, u[:, None], x[None, :])
    sig = _signal_values(spec.info, state.t, x)
    ell_bar = float(sig @ np.asarray(state.filter.weights))
    v_factor = lambda u: np.broadcast_to(sig - ell_bar, (len(u), len(x)))

    num_h_T, num_h_t = loading(h_factor)
    num_v_T, num_v_t = loading(v_factor)
    den0 = float(den[0])
    nums0 = nums[0]
    theta = num_h_T / nums0
    nu = num_v_T / nums0
    lambda1 = -num_h_t / den0
    lambda2 = -num_v_t / den0
    return VolStructure(
        theta=theta,
        nu=nu,
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        bond_theta=theta + lambda1,
        bond_nu=nu + lambda2,
    )


def filtered_payoff_at(model: PricingModel, state: MarketState, maturity: float) -> float:
    """E[m_tT(X) h(T, X) | F_t] / M_hat_tT, the drift-side term in the
    forward-rate sensitivity identity."""
    dv, w = _as_batch(state)
    x, _ = prior_nodes(model.spec.prior)
    u = np.array([maturity])
    h = evaluate_mixer(model.spec.mixer, u[:, None], x[None, :])
    num = filtered_m_matrix(model.spec, state.t, dv, w, u, h)[0, 0]
    den = filtered_m_matrix(model.spec, state.t, dv, w, u)[0, 0]
    return float(num / den)
