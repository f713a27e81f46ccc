"""Nonlinear filtering of the hidden mixer from information processes.

Three observation models are supported:

* BrownianLinearInfo:  I_t = sigma * X * t + B_t
* BrownianGeneralInfo: I_t = int_0^t l(s, X) ds + B_t
* GammaNoiseInfo:      I_t = X * gamma_t  (independent gamma noise)

The first and third are Markov in (I_t, t) and admit closed-form posteriors;
the general Brownian case is computed from the whole path, discretising the
stochastic integral at left endpoints and the time integral by trapezoid.
All posterior weights are accumulated in log space and normalised after
subtracting the maximum, so degenerate priors and long horizons are safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .mixers import prior_nodes
from .processes import SamplePath, TimeGrid, simulate_brownian, simulate_gamma, GammaParams
from .rng import RngStream

__all__ = [
    "BrownianLinearInfo",
    "BrownianGeneralInfo",
    "GammaNoiseInfo",
    "FilterDensity",
    "initial_filter",
    "posterior_brownian_linear",
    "posterior_brownian_general",
    "posterior_gamma_info",
    "simulate_information",
]


@dataclass(frozen=True)
class BrownianLinearInfo:
    """I_t = sigma X t + B_t."""

    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise DomainError("information flow rate sigma must be positive")


@dataclass(frozen=True)
class BrownianGeneralInfo:
    """I_t = int_0^t l(s, X) ds + B_t for a user signal function l(s, x).

    l must be integrable in s on bounded intervals; it is evaluated
    vectorised over x (and over s where possible).
    """

    ell: Callable


@dataclass(frozen=True)
class GammaNoiseInfo:
    """I_t = X * gamma_t with an independent gamma noise process.

    Requires the prior support to be strictly positive.
    """

    m: float
    kappa: float

    def __post_init__(self):
        if self.m <= 0 or self.kappa <= 0:
            raise DomainError("gamma information requires m > 0 and kappa > 0")


@dataclass(frozen=True)
class FilterDensity:
    """Posterior law of X at time t, as point masses on fixed support nodes.

    For discrete priors the nodes are the prior atoms; for continuous
    uniform priors they are the Gauss-Legendre representation nodes, and the
    weights fold in both the quadrature weight and the conditional density.
    """

    points: np.ndarray
    weights: np.ndarray
    t: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if pts.shape != w.shape or pts.ndim != 1:
            raise DomainError("points and weights must be matching 1-d arrays")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("filter weights must be non-negative and sum to 1")

    def expectation(self, g) -> float:
        return float(np.asarray(g(self.points)) @ self.weights)

    def mass(self) -> float:
        return float(self.weights.sum())


def initial_filter(prior) -> FilterDensity:
    x, w = prior_nodes(prior)
    return FilterDensity(x, w, 0.0)


def _normalise_log_weights(logw: np.ndarray) -> np.ndarray:
    """Stable softmax along the last axis; -inf entries keep zero mass."""
    m = np.max(logw, axis=-1, keepdims=True)
    w = np.exp(logw - m)
    return w / w.sum(axis=-1, keepdims=True)


def _log_prior(prior):
    x, w = prior_nodes(prior)
    with np.errstate(divide="ignore"):
        return x, np.log(w)


# --- closed-form posteriors -----------------------------------------------------


def brownian_linear_log_lik(x: np.ndarray, sigma: float, i_t, t: float) -> np.ndarray:
    """log-likelihood factor exp(sigma x I_t - sigma^2 x^2 t / 2), batched over i_t."""
    i_t = np.asarray(i_t, dtype=float)
    return sigma * np.multiply.outer(i_t, x) - 0.5 * sigma**2 * x**2 * t


def posterior_brownian_linear(prior, sigma: float, i_t: float, t: float) -> FilterDensity:
    """Posterior f_t(x) proportional to f_0(x) exp(sigma x I_t - sigma^2 x^2 t / 2)."""
    if t < 0:
        raise DomainError("need t >= 0")
    x, logw0 = _log_prior(prior)
    logw = logw0 + brownian_linear_log_lik(x, sigma, float(i_t), t)
    return FilterDensity(x, _normalise_log_weights(logw), t)


def gamma_info_log_lik(x: np.ndarray, m: float, kappa: float, i_t, t: float) -> np.ndarray:
    i_t = np.asarray(i_t, dtype=float)
    return -m * t * np.log(x) - np.multiply.outer(i_t, 1.0 / (kappa * x))


def posterior_gamma_info(prior, m: float, kappa: float, i_t: float, t: float) -> FilterDensity:
    """Posterior f_t(x) proportional to f_0(x) x^{-m t} exp(-I_t / (kappa x)).

    At t = 0 the information is degenerate and the prior is returned.
    """
    if t < 0:
        raise DomainError("need t >= 0")
    x, logw0 = _log_prior(prior)
    if np.any(x <= 0):
        raise DomainError("gamma information requires strictly positive support")
    if t == 0.0:
        return initial_filter(prior)
    if not i_t > 0:
        raise DomainError("gamma information I_t must be positive for t > 0")
    logw = logw0 + gamma_info_log_lik(x, m, kappa, float(i_t), t)
    return FilterDensity(x, _normalise_log_weights(logw), t)


def posterior_brownian_general(prior, ell: Callable, info_path: SamplePath) -> FilterDensity:
    """Path-functional posterior for I_t = int l(s, X) ds + B_t.

    Uses f_t(x) proportional to
    f_0(x) exp( int_0^t l(s,x) dI_s - (1/2) int_0^t l(s,x)^2 ds ),
    with the stochastic integral discretised at left endpoints and the time
    integral by the trapezoid rule on the path's grid.
    """
    x, logw0 = _log_prior(prior)
    times = info_path.grid.t
    i_vals = np.asarray(info_path.values, dtype=float)
    if i_vals.ndim != 1:
        raise DomainError("posterior_brownian_general expects a single path")
    ell_grid = np.asarray(ell(times[:, None], x[None, :]), dtype=float)  # (n_t, n_x)
    d_i = np.diff(i_vals)
    stoch = ell_grid[:-1].T @ d_i  # left endpoint
    dt = np.diff(times)
    sq = ell_grid**2
    time_int = 0.5 * (sq[:-1] + sq[1:]).T @ dt  # trapezoid
    logw = logw0 + stoch - 0.5 * time_int
    return FilterDensity(x, _normalise_log_weights(logw), float(times[-1]))


# --- information-path simulation -------------------------------------------------


def simulate_information(info, x_true, grid: TimeGrid, rng: RngStream, n_paths: int | None = None) -> SamplePath:
    """Information paths given realised mixer values x_true.

    x_true broadcasts over paths: a scalar applies to every column of the
    returned (n_times, n_paths) array.
    """
    x = np.atleast_1d(np.asarray(x_true, dtype=float))
    n = len(x) if n_paths is None else int(n_paths)
    if len(x) not in (1, n):
        raise ValueError("x_true must be scalar or one per path")
    xs = x if len(x) == n else np.repeat(x, n)
    t = grid.t
    if isinstance(info, BrownianLinearInfo):
        noise = simulate_brownian(grid, rng, n).values
        return SamplePath(grid, info.sigma * np.multiply.outer(t, xs) + noise)
    if isinstance(info, BrownianGeneralInfo):
        noise = simulate_brownian(grid, rng, n).values
        ell_grid = np.asarray(info.ell(t[:-1, None], xs[None, :]), dtype=float)
        drift = np.vstack([np.zeros((1, n)), np.cumsum(ell_grid * np.diff(t)[:, None], axis=0)])
        return SamplePath(grid, drift + noise)
    if isinstance(info, GammaNoiseInfo):
        if np.any(xs <= 0):
            raise DomainError("gamma information requires x > 0")
        noise = simulate_gamma(GammaParams(info.m, info.kappa), grid, rng, n).values
        return SamplePath(grid, noise * xs)
    raise TypeError(f"unknown information model {type(info).__name__}")
