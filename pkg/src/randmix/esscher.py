"""Randomised Esscher martingales and filtered projections.

For a Levy driver L and mixer value x, the normalised exponential
m_tu(x) = exp(h(u,x) L_t - t psi(h(u,x))) is a positive unit-mean
martingale in t for each fixed u. Filtering X from market information
replaces m by its posterior mixture M_hat_tu = E[m_tu(X) | F_t], the
object all bond prices are built from.

The paired gamma + compound-Poisson driver carries two mixers (h1 on the
gamma component, h2 on the jumps); its martingale is the product of the
component ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, DomainError
from .filtering import (
    BrownianGeneralInfo,
    BrownianLinearInfo,
    FilterDensity,
    GammaNoiseInfo,
)
from .mixers import evaluate_mixer, prior_nodes, validate_admissibility
from .processes import (
    BrownianParams,
    CompoundPoissonParams,
    GammaCPParams,
    GammaParams,
    SamplePath,
    VGParams,
    log_mgf_rate,
)

__all__ = [
    "MartingaleSpec",
    "MarketState",
    "m_tu",
    "filtered_m_tu",
    "filtered_m_matrix",
    "filtered_dynamics_coefficients",
]


@dataclass(frozen=True)
class MartingaleSpec:
    """Driver + mixer(s) + prior + information model, admissibility-checked.

    mixer2 is required exactly when the driver is the gamma/compound-Poisson
    pair; it modulates the jump component.
    """

    driver: object
    mixer: object
    prior: object
    info: object
    mixer2: object = None

    def __post_init__(self):
        is_pair = isinstance(self.driver, GammaCPParams)
        if is_pair and self.mixer2 is None:
            raise DomainError("paired driver requires mixer2 for the jump component")
        if not is_pair and self.mixer2 is not None:
            raise DomainError("mixer2 is only meaningful for the paired driver")
        if isinstance(self.info, GammaNoiseInfo):
            x, _ = prior_nodes(self.prior)
            if np.any(x <= 0):
                raise DomainError("gamma information requires strictly positive prior support")
        rep = validate_admissibility(self.driver, self.mixer, self.prior, mixer2=self.mixer2)
        if not rep.ok:
            raise AdmissibilityError(
                f"inadmissible mixer for driver: {rep.constraint}; witness (u, x, h) = {rep.witness}",
                witness=rep.witness,
            )

    def initial_state(self) -> "MarketState":
        from .filtering import initial_filter

        driver0 = (0.0, 0.0) if isinstance(self.driver, GammaCPParams) else 0.0
        return MarketState(0.0, driver0, 0.0, initial_filter(self.prior))


@dataclass(frozen=True)
class MarketState:
    """Market information at time t: driver value, information level, filter.

    driver_value is a scalar, or a (gamma, cp) pair for the paired driver.
    info_value holds I_t for Markov information models; path-functional
    models carry the full information SamplePath instead.
    """

    t: float
    driver_value: object
    info_value: object
    filter: FilterDensity

    def __post_init__(self):
        if self.t < 0:
            raise DomainError("need t >= 0")
        if abs(self.filter.t - self.t) > 1e-9 * max(1.0, self.t):
            raise DomainError("filter time does not match state time")


def _log_m(driver, h, driver_value, t: float):
    """log m_tu = h L_t - t psi(h), broadcasting over h."""
    h = np.asarray(h, dtype=float)
    return h * driver_value - t * log_mgf_rate(driver, h)


def m_tu(driver, h, driver_value, t: float):
    """Randomised Esscher martingale value for explicit mixer values h.

    For the paired driver pass h = (h1, h2) and driver_value = (gamma, cp);
    both components broadcast like the scalar case.
    """
    if t < 0:
        raise DomainError("need t >= 0")
    if isinstance(driver, GammaCPParams):
        h1, h2 = h
        g_val, c_val = driver_value
        return np.exp(_log_m(driver.gamma, h1, g_val, t) + _log_m(driver.cp, h2, c_val, t))
    return np.exp(_log_m(driver, h, driver_value, t))


def filtered_m_matrix(spec: MartingaleSpec, t: float, driver_value, weights, u, factor=None) -> np.ndarray:
    """E[m_tu(X) g(u, X) | F_t] on a maturity grid for a batch of states.

    driver_value: (n,) scalars or (n, 2) for the paired driver; weights:
    (n, n_x) filter weights on the prior support nodes; u: (n_u,) maturities.
    factor, when given, is the extra (n_u, n_x) payoff g(u, x); default 1
    yields M_hat_tu itself. Returns (n, n_u); a single state is n = 1.
    """
    x, _ = prior_nodes(spec.prior)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    h = evaluate_mixer(spec.mixer, u[:, None], x[None, :])  # (n_u, n_x)
    if isinstance(spec.driver, GammaCPParams):
        dv = np.asarray(driver_value, dtype=float).reshape(-1, 2)
        h2 = evaluate_mixer(spec.mixer2, u[:, None], x[None, :])
        log_m = (
            h[None, :, :] * dv[:, 0, None, None]
            + h2[None, :, :] * dv[:, 1, None, None]
            - t * (log_mgf_rate(spec.driver.gamma, h) + log_mgf_rate(spec.driver.cp, h2))[None, :, :]
        )
    else:
        dv = np.asarray(driver_value, dtype=float).reshape(-1)
        log_m = h[None, :, :] * dv[:, None, None] - t * log_mgf_rate(spec.driver, h)[None, :, :]
    w = np.asarray(weights, dtype=float).reshape(len(dv), -1)
    m_vals = np.exp(log_m)
    if factor is not None:
        m_vals = m_vals * np.broadcast_to(factor, m_vals.shape[1:])[None, :, :]
    return np.einsum("nux,nx->nu", m_vals, w)


def filtered_m_tu(spec: MartingaleSpec, state: MarketState, u) -> float:
    """E[m_tu(X) | F_t] under the state's filter; positive, equals 1 at t = 0."""
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    out = filtered_m_matrix(spec, state.t, _driver_rows(spec, state), state.filter.weights[None, :], u_arr)[0]
    return float(out[0]) if np.isscalar(u) or np.asarray(u).ndim == 0 else out


def _driver_rows(spec, state):
    if isinstance(spec.driver, GammaCPParams):
        return np.asarray(state.driver_value, dtype=float).reshape(1, 2)
    return np.asarray([state.driver_value], dtype=float)


def _signal_values(info, t: float, x: np.ndarray) -> np.ndarray:
    """l(t, x) on the support nodes for Brownian information models."""
    if isinstance(info, BrownianLinearInfo):
        return info.sigma * x
    if isinstance(info, BrownianGeneralInfo):
        return np.asarray(info.ell(t, x), dtype=float) * np.ones_like(x)
    raise DomainError("dynamics coefficients need Brownian information")


def filtered_dynamics_coefficients(spec: MartingaleSpec, state: MarketState, u) -> tuple:
    """Diffusion loadings of dM_hat_tu on (dW, dZ) for Brownian driver and info.

    Returns (E[m_tu(X) h(u,X) | F_t], E[m_tu(X) V_t(X) | F_t]) where
    V_t(x) = l(t,x) - E[l(t,X) | F_t] and Z is the innovations process.
    """
    if not isinstance(spec.driver, BrownianParams):
        raise DomainError("dynamics coefficients are defined for the Brownian driver")
    x = state.filter.points
    w = state.filter.weights
    h = evaluate_mixer(spec.mixer, float(u), x)
    m = m_tu(spec.driver, h, state.driver_value, state.t)
    ell = _signal_values(spec.info, state.t, x)
    v = ell - float(ell @ w)
    return float((m * h) @ w), float((m * v) @ w)
