"""Driver process simulation and Esscher normalisation.

Four Levy-type drivers (Brownian motion, gamma, compound Poisson, variance
gamma) plus an Ornstein-Uhlenbeck diffusion for heat-kernel models. All
simulators sample exact transition laws on the supplied grid, so there is
no discretisation bias in the marginals at grid times.

The Esscher normaliser E[exp(h L_t)] factorises as exp(t * psi(h)) for
every Levy driver; psi is exposed through log_mgf_rate and the normaliser
through esscher_normalizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rng import RngStream

__all__ = [
    "TimeGrid",
    "SamplePath",
    "BrownianParams",
    "GammaParams",
    "CompoundPoissonParams",
    "VGParams",
    "GammaCPParams",
    "OUParams",
    "simulate_brownian",
    "simulate_gamma",
    "simulate_compound_poisson",
    "simulate_vg",
    "simulate_ou",
    "ou_conditional_moments",
    "log_mgf_rate",
    "esscher_normalizer",
]


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing simulation times starting at 0."""

    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        object.__setattr__(self, "t", t)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("grid must be a non-empty 1-d array of times")
        if t[0] != 0.0:
            raise ValueError("grid must start at t = 0")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("grid times must be strictly increasing")
        if not np.all(np.isfinite(t)):
            raise ValueError("grid times must be finite")

    @staticmethod
    def regular(horizon: float, dt: float) -> "TimeGrid":
        """Uniform grid covering [0, horizon] with steps of (approximately) dt."""
        if horizon <= 0 or dt <= 0:
            raise ValueError("horizon and dt must be positive")
        n = max(1, int(round(horizon / dt)))
        return TimeGrid(np.linspace(0.0, horizon, n + 1))

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.t)

    def index_of(self, time: float) -> int:
        """Index of the grid point matching `time` up to rounding error."""
        i = int(np.argmin(np.abs(self.t - time)))
        if abs(self.t[i] - time) > 1e-9 * max(1.0, abs(time)):
            raise ValueError(f"time {time} not on grid")
        return i

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class SamplePath:
    """Values of a process on a grid; columns index Monte Carlo paths."""

    grid: TimeGrid
    values: np.ndarray  # shape (n_times,) or (n_times, n_paths)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape[0] != len(self.grid):
            raise ValueError("values must have one row per grid time")


# --- driver parameter sets -------------------------------------------------


@dataclass(frozen=True)
class BrownianParams:
    """Standard Brownian motion; no free parameters."""


@dataclass(frozen=True)
class GammaParams:
    """Gamma process with rate m and scale kappa: E[gamma_t] = kappa*m*t."""

    m: float
    kappa: float

    def __post_init__(self):
        if self.m <= 0 or self.kappa <= 0:
            raise DomainError("gamma process requires m > 0 and kappa > 0")


@dataclass(frozen=True)
class CompoundPoissonParams:
    """Compound Poisson with Gaussian jumps Y_i ~ N(jump_mean, jump_std^2).

    jump_std = 0 degenerates to constant jumps, so jump_mean = 1 recovers a
    plain Poisson counting process.
    """

    lam: float
    jump_mean: float = 1.0
    jump_std: float = 0.0

    def __post_init__(self):
        if self.lam <= 0:
            raise DomainError("compound Poisson requires lam > 0")
        if self.jump_std < 0:
            raise DomainError("jump_std must be non-negative")

    def jump_mgf(self, h):
        return np.exp(self.jump_mean * h + 0.5 * self.jump_std**2 * h**2)


@dataclass(frozen=True)
class VGParams:
    """Variance gamma: L_t = theta*g_t + sigma*B_{g_t}, subordinator variance rate nu.

    The gamma subordinator has unit mean rate (m = 1/nu, scale nu), giving
    E[L_t] = theta*t and Var[L_t] = (sigma^2 + theta^2 nu) t.
    """

    theta: float
    sigma: float
    nu: float

    def __post_init__(self):
        if self.sigma <= 0 or self.nu <= 0:
            raise DomainError("variance gamma requires sigma > 0 and nu > 0")


@dataclass(frozen=True)
class GammaCPParams:
    """Paired driver (gamma_t, C_t), independent components."""

    gamma: GammaParams
    cp: CompoundPoissonParams


@dataclass(frozen=True)
class OUParams:
    """Ornstein-Uhlenbeck dY = delta*(beta - Y) dt + upsilon dW, started at y0."""

    delta: float
    beta: float
    upsilon: float
    y0: float

    def __post_init__(self):
        if self.delta <= 0:
            raise DomainError("OU requires delta > 0")
        if self.upsilon < 0:
            raise DomainError("OU requires upsilon >= 0")


# --- simulators --------------------------------------------------------------


def _empty_paths(grid: TimeGrid, n_paths: int, start: float = 0.0) -> np.ndarray:
    out = np.empty((len(grid), n_paths))
    out[0] = start
    return out


def simulate_brownian(grid: TimeGrid, rng: RngStream, n_paths: int = 1) -> SamplePath:
    """Exact Brownian paths on the grid, started at 0.

    Parameters
    ----------
    grid : TimeGrid
    rng : RngStream
        Identical streams reproduce identical paths.
    n_paths : int
        Number of independent columns.
    """
    g = rng.generator()
    dt = grid.steps
    out = _empty_paths(grid, n_paths)
    if dt.size:
        z = g.standard_normal((dt.size, n_paths))
        np.cumsum(np.sqrt(dt)[:, None] * z, axis=0, out=out[1:])
    return SamplePath(grid, out)


def simulate_gamma(params: GammaParams, grid: TimeGrid, rng: RngStream, n_paths: int = 1) -> SamplePath:
    """Gamma process paths; increments are Gamma(m*dt, kappa), so paths are
    non-decreasing and start at 0."""
    g = rng.generator()
    dt = grid.steps
    out = _empty_paths(grid, n_paths)
    if dt.size:
        inc = g.gamma(shape=np.broadcast_to((params.m * dt)[:, None], (dt.size, n_paths)), scale=params.kappa)
        np.cumsum(inc, axis=0, out=out[1:])
    return SamplePath(grid, out)


def simulate_compound_poisson(
    params: CompoundPoissonParams, grid: TimeGrid, rng: RngStream, n_paths: int = 1
) -> SamplePath:
    """Compound Poisson paths sampled exactly at grid times.

    Per increment the jump count is Poisson(lam*dt) and the conditional jump
    sum is Gaussian N(n*jump_mean, n*jump_std^2); paths are piecewise
    constant between jumps.
    """
    g = rng.generator()
    dt = grid.steps
    out = _empty_paths(grid, n_paths)
    if dt.size:
        counts = g.poisson(lam=np.broadcast_to((params.lam * dt)[:, None], (dt.size, n_paths)))
        inc = counts * params.jump_mean
        if params.jump_std > 0:
            inc = inc + np.sqrt(counts) * params.jump_std * g.standard_normal(counts.shape)
        np.cumsum(inc, axis=0, out=out[1:])
    return SamplePath(grid, out)


def simulate_vg(params: VGParams, grid: TimeGrid, rng: RngStream, n_paths: int = 1) -> SamplePath:
    """Variance gamma paths via the gamma subordinator representation."""
    g = rng.generator()
    dt = grid.steps
    out = _empty_paths(grid, n_paths)
    if dt.size:
        sub = g.gamma(shape=np.broadcast_to((dt / params.nu)[:, None], (dt.size, n_paths)), scale=params.nu)
        z = g.standard_normal(sub.shape)
        np.cumsum(params.theta * sub + params.sigma * np.sqrt(sub) * z, axis=0, out=out[1:])
    return SamplePath(grid, out)


def ou_conditional_moments(params: OUParams, y_s, s, t):
    """Mean and variance of Y_t given Y_s = y_s, t >= s (exact Gaussian law).

    y_s, s and t broadcast together, so one call covers a panel of lags.
    """
    if np.any(np.asarray(t) < np.asarray(s)):
        raise ValueError("need t >= s")
    e = np.exp(-params.delta * (np.asarray(t) - np.asarray(s)))
    mean = np.asarray(y_s) * e + params.beta * (1.0 - e)
    var = params.upsilon**2 / (2.0 * params.delta) * (1.0 - e * e)
    return mean, var


def simulate_ou(params: OUParams, grid: TimeGrid, rng: RngStream, n_paths: int = 1) -> SamplePath:
    """OU paths using the exact Gaussian transition on each step."""
    g = rng.generator()
    out = _empty_paths(grid, n_paths, start=params.y0)
    dt = grid.steps
    if dt.size:
        z = g.standard_normal((dt.size, n_paths))
        e = np.exp(-params.delta * dt)
        sd = np.sqrt(params.upsilon**2 / (2.0 * params.delta) * (1.0 - e * e))
        for i in range(dt.size):
            out[i + 1] = out[i] * e[i] + params.beta * (1.0 - e[i]) + sd[i] * z[i]
    return SamplePath(grid, out)


# --- Esscher normalisation ----------------------------------------------------


def log_mgf_rate(driver, h):
    """psi(h) = (1/t) log E[exp(h L_t)] for a Levy driver.

    Vectorised in h. Raises DomainError (naming the violated constraint) when
    any h leaves the driver's admissible set.
    """
    h = np.asarray(h, dtype=float)
    if isinstance(driver, BrownianParams):
        return 0.5 * h * h
    if isinstance(driver, GammaParams):
        q = 1.0 - driver.kappa * h
        if np.any(q <= 0.0):
            raise DomainError(
                f"gamma driver requires h < 1/kappa = {1.0 / driver.kappa:.6g}; got max h = {h.max():.6g}"
            )
        return -driver.m * np.log(q)
    if isinstance(driver, CompoundPoissonParams):
        return driver.lam * (driver.jump_mgf(h) - 1.0)
    if isinstance(driver, VGParams):
        q = 1.0 - driver.theta * driver.nu * h - 0.5 * driver.sigma**2 * driver.nu * h * h
        if np.any(q <= 0.0):
            raise DomainError(
                "variance gamma driver requires 1 - theta*nu*h - (sigma^2*nu/2)*h^2 > 0; "
                f"violated at h = {h.flat[int(np.argmin(q))]:.6g}"
            )
        return -np.log(q) / driver.nu
    raise TypeError(f"no Esscher normaliser for driver {type(driver).__name__}")


def esscher_normalizer(driver, h, t: float):
    """E[exp(h L_t)] = exp(t * psi(h)); h may be an array."""
    if t < 0:
        raise ValueError("need t >= 0")
    return np.exp(t * log_mgf_rate(driver, h))
