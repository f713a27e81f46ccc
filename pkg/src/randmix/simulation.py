"""Joint simulation of driver, information process, and filter states.

A StateBatch holds n market states at a common time: driver values, the
information level, and posterior filter weights on the prior support nodes.
States can be sampled directly at a time (exact transition laws, Markov
information models), extracted from simulated joint paths, or evolved
forward conditionally on the current information (X redrawn from the
filter, as the conditional law requires).

Driver, information noise, and mixer draws always use distinct child
streams of the supplied RngStream, so the three sources are independent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .esscher import MarketState, MartingaleSpec
from .filtering import (
    BrownianGeneralInfo,
    BrownianLinearInfo,
    FilterDensity,
    GammaNoiseInfo,
    brownian_linear_log_lik,
    gamma_info_log_lik,
)
from .mixers import DiscretePrior, UniformPrior, prior_nodes
from .processes import (
    BrownianParams,
    CompoundPoissonParams,
    GammaCPParams,
    GammaParams,
    SamplePath,
    TimeGrid,
    VGParams,
)
from .rng import RngStream

__all__ = ["StateBatch", "JointPaths", "sample_states", "simulate_joint_paths", "evolve"]

# child-stream purposes
_DRIVER, _INFO, _MIXER, _EVOLVE = 0, 1, 2, 3


@dataclass(frozen=True)
class StateBatch:
    """n market states at a common time, vectorised."""

    spec: MartingaleSpec
    t: float
    driver: np.ndarray  # (n,) or (n, 2) for the paired driver
    info: np.ndarray  # (n,) information level I_t
    x_points: np.ndarray  # (n_x,) filter support nodes
    weights: np.ndarray  # (n, n_x) posterior weights
    x_true: np.ndarray | None = None  # realised mixer per path, when known
    # accumulators for path-functional information: int l dI and int l^2 ds
    gen_acc: tuple | None = None

    def __len__(self) -> int:
        return len(self.info)

    def state(self, i: int) -> MarketState:
        dv = tuple(self.driver[i]) if self.driver.ndim == 2 else float(self.driver[i])
        f = FilterDensity(self.x_points, self.weights[i], self.t)
        return MarketState(self.t, dv, float(self.info[i]), f)


def _log_prior_weights(prior) -> tuple:
    x, w = prior_nodes(prior)
    with np.errstate(divide="ignore"):
        return x, np.log(w)


def _normalise_rows(logw: np.ndarray) -> np.ndarray:
    m = logw.max(axis=1, keepdims=True)
    w = np.exp(logw - m)
    return w / w.sum(axis=1, keepdims=True)


def _markov_weights(info, x, logw0, i_t, t) -> np.ndarray:
    if t == 0.0:
        return np.broadcast_to(np.exp(logw0) / np.exp(logw0).sum(), (len(i_t), len(x))).copy()
    if isinstance(info, BrownianLinearInfo):
        return _normalise_rows(logw0[None, :] + brownian_linear_log_lik(x, info.sigma, i_t, t))
    if isinstance(info, GammaNoiseInfo):
        return _normalise_rows(logw0[None, :] + gamma_info_log_lik(x, info.m, info.kappa, i_t, t))
    raise DomainError("closed-form filter needs a Markov information model")


def _sample_prior(prior, n: int, g: np.random.Generator) -> np.ndarray:
    if isinstance(prior, DiscretePrior):
        return g.choice(prior.points, size=n, p=prior.weights)
    if isinstance(prior, UniformPrior):
        return g.uniform(prior.a, prior.b, size=n)
    raise TypeError(f"unknown prior {type(prior).__name__}")


def _sample_rows(x_points: np.ndarray, weights: np.ndarray, g: np.random.Generator) -> np.ndarray:
    """One draw per row from row-wise categorical weights."""
    cum = np.cumsum(weights, axis=1)
    u = g.random(len(weights))
    idx = np.minimum((u[:, None] > cum).sum(axis=1), len(x_points) - 1)
    return x_points[idx]


def _driver_increment(driver, dt: float, n: int, g: np.random.Generator) -> np.ndarray:
    if dt < 0:
        raise ValueError("need dt >= 0")
    if dt == 0.0:
        return np.zeros((n, 2)) if isinstance(driver, GammaCPParams) else np.zeros(n)
    if isinstance(driver, BrownianParams):
        return np.sqrt(dt) * g.standard_normal(n)
    if isinstance(driver, GammaParams):
        return g.gamma(shape=driver.m * dt, scale=driver.kappa, size=n)
    if isinstance(driver, CompoundPoissonParams):
        counts = g.poisson(lam=driver.lam * dt, size=n)
        inc = counts * driver.jump_mean
        if driver.jump_std > 0:
            inc = inc + np.sqrt(counts) * driver.jump_std * g.standard_normal(n)
        return inc
    if isinstance(driver, VGParams):
        sub = g.gamma(shape=dt / driver.nu, scale=driver.nu, size=n)
        return driver.theta * sub + driver.sigma * np.sqrt(sub) * g.standard_normal(n)
    if isinstance(driver, GammaCPParams):
        return np.column_stack(
            [_driver_increment(driver.gamma, dt, n, g), _driver_increment(driver.cp, dt, n, g)]
        )
    raise TypeError(f"unknown driver {type(driver).__name__}")


def sample_states(spec: MartingaleSpec, t: float, n_paths: int, rng: RngStream) -> StateBatch:
    """Exact draw of n joint states at time t (Markov information models)."""
    if isinstance(spec.info, BrownianGeneralInfo):
        raise DomainError("path-functional information needs simulate_joint_paths")
    x, logw0 = _log_prior_weights(spec.prior)
    g_mix = rng.child(_MIXER).generator()
    x_true = _sample_prior(spec.prior, n_paths, g_mix)
    driver = _driver_increment(spec.driver, t, n_paths, rng.child(_DRIVER).generator())
    g_info = rng.child(_INFO).generator()
    if isinstance(spec.info, BrownianLinearInfo):
        i_t = spec.info.sigma * x_true * t + np.sqrt(t) * g_info.standard_normal(n_paths) if t > 0 else np.zeros(n_paths)
    else:  # GammaNoiseInfo
        noise = g_info.gamma(shape=spec.info.m * t, scale=spec.info.kappa, size=n_paths) if t > 0 else np.zeros(n_paths)
        i_t = x_true * noise
    weights = _markov_weights(spec.info, x, logw0, i_t, t)
    return StateBatch(spec, t, driver, i_t, x, weights, x_true=x_true)


def replicate_state(spec: MartingaleSpec, state: MarketState, n_paths: int) -> StateBatch:
    """n identical copies of one market state, ready for conditional evolution."""
    if isinstance(spec.info, BrownianGeneralInfo):
        raise DomainError("replication needs a Markov information model")
    if n_paths < 1:
        raise ValueError("need n_paths >= 1")
    if isinstance(spec.driver, GammaCPParams):
        driver = np.tile(np.asarray(state.driver_value, dtype=float), (n_paths, 1))
    else:
        driver = np.full(n_paths, float(state.driver_value))
    info = np.full(n_paths, float(state.info_value))
    weights = np.tile(np.asarray(state.filter.weights, dtype=float), (n_paths, 1))
    return StateBatch(
        spec, state.t, driver, info, state.filter.points.copy(), weights,
        x_true=np.full(n_paths, np.nan),
    )


@dataclass(frozen=True)
class JointPaths:
    """Full joint paths on a grid; states extracted per time on demand."""

    spec: MartingaleSpec
    grid: TimeGrid
    x_true: np.ndarray  # (n,)
    driver: np.ndarray  # (n_t, n) or (n_t, n, 2)
    info: np.ndarray  # (n_t, n)

    def states_at(self, time: float) -> StateBatch:
        idx = self.grid.index_of(time)
        t = float(self.grid.t[idx])
        x, logw0 = _log_prior_weights(self.spec.prior)
        driver = self.driver[idx]
        i_t = self.info[idx]
        if isinstance(self.spec.info, BrownianGeneralInfo):
            ts = self.grid.t[: idx + 1]
            ell_grid = np.asarray(self.spec.info.ell(ts[:, None], x[None, :]), dtype=float)
            d_i = np.diff(self.info[: idx + 1], axis=0)  # (idx, n)
            a = np.einsum("tn,tx->nx", d_i, ell_grid[:-1])
            sq = ell_grid**2
            b = np.einsum("t,tx->x", np.diff(ts), 0.5 * (sq[:-1] + sq[1:]))[None, :] * np.ones((len(i_t), 1))
            weights = _normalise_rows(logw0[None, :] + a - 0.5 * b)
            return StateBatch(self.spec, t, driver, i_t, x, weights, x_true=self.x_true, gen_acc=(a, b))
        weights = _markov_weights(self.spec.info, x, logw0, i_t, t)
        return StateBatch(self.spec, t, driver, i_t, x, weights, x_true=self.x_true)


def simulate_joint_paths(spec: MartingaleSpec, grid: TimeGrid, n_paths: int, rng: RngStream) -> JointPaths:
    """Simulate X from the prior, then driver and information paths on the grid."""
    from .filtering import simulate_information
    from .processes import (
        simulate_brownian,
        simulate_compound_poisson,
        simulate_gamma,
        simulate_vg,
    )

    x_true = _sample_prior(spec.prior, n_paths, rng.child(_MIXER).generator())
    d_rng = rng.child(_DRIVER)
    if isinstance(spec.driver, BrownianParams):
        driver = simulate_brownian(grid, d_rng, n_paths).values
    elif isinstance(spec.driver, GammaParams):
        driver = simulate_gamma(spec.driver, grid, d_rng, n_paths).values
    elif isinstance(spec.driver, CompoundPoissonParams):
        driver = simulate_compound_poisson(spec.driver, grid, d_rng, n_paths).values
    elif isinstance(spec.driver, VGParams):
        driver = simulate_vg(spec.driver, grid, d_rng, n_paths).values
    elif isinstance(spec.driver, GammaCPParams):
        driver = np.stack(
            [
                simulate_gamma(spec.driver.gamma, grid, d_rng.child(0), n_paths).values,
                simulate_compound_poisson(spec.driver.cp, grid, d_rng.child(1), n_paths).values,
            ],
            axis=-1,
        )
    else:
        raise TypeError(f"unknown driver {type(spec.driver).__name__}")
    info = simulate_information(spec.info, x_true, grid, rng.child(_INFO)).values
    return JointPaths(spec, grid, x_true, driver, info)


def evolve(spec: MartingaleSpec, batch: StateBatch, to_t: float, rng: RngStream, n_steps: int | None = None) -> StateBatch:
    """Evolve states from batch.t to to_t conditionally on each state's filter.

    The hidden mixer is redrawn per path from the current posterior (its
    conditional law given F_t); driver and information noise increments are
    then simulated independently, exactly in one step for Markov information
    models and on an Euler grid for path-functional ones.
    """
    s, dt = batch.t, to_t - batch.t
    if dt < 0:
        raise ValueError("can only evolve forward")
    n = len(batch)
    g = rng.child(_EVOLVE).generator()
    x_pts, logw0 = _log_prior_weights(spec.prior)
    x_new = _sample_rows(batch.x_points, batch.weights, g)
    if isinstance(spec.info, BrownianGeneralInfo):
        if batch.gen_acc is None:
            raise DomainError("evolving path-functional information needs accumulator state")
        steps = n_steps or max(1, int(round(dt * 250)))
        a, b = batch.gen_acc[0].copy(), batch.gen_acc[1].copy()
        t_cur, i_cur = s, batch.info.copy()
        driver = batch.driver + _driver_increment(spec.driver, dt, n, g)
        for k in range(steps):
            h = dt / steps
            ell_lo = np.asarray(spec.info.ell(t_cur, x_pts), dtype=float) * np.ones_like(x_pts)
            ell_hi = np.asarray(spec.info.ell(t_cur + h, x_pts), dtype=float) * np.ones_like(x_pts)
            drift = np.asarray(spec.info.ell(t_cur, x_new), dtype=float) * np.ones(n)
            d_i = drift * h + np.sqrt(h) * g.standard_normal(n)
            a += np.multiply.outer(d_i, ell_lo)
            b += 0.5 * (ell_lo**2 + ell_hi**2) * h
            i_cur = i_cur + d_i
            t_cur += h
        weights = _normalise_rows(logw0[None, :] + a - 0.5 * b)
        return StateBatch(spec, to_t, driver, i_cur, x_pts, weights, x_true=x_new, gen_acc=(a, b))
    driver = batch.driver + _driver_increment(spec.driver, dt, n, g)
    if isinstance(spec.info, BrownianLinearInfo):
        i_new = batch.info + spec.info.sigma * x_new * dt + np.sqrt(dt) * g.standard_normal(n)
    elif isinstance(spec.info, GammaNoiseInfo):
        if dt > 0:
            noise_s = batch.info / x_new  # realised gamma noise level given X
            i_new = x_new * (noise_s + g.gamma(shape=spec.info.m * dt, scale=spec.info.kappa, size=n))
        else:
            i_new = batch.info.copy()
    else:
        raise TypeError(f"unknown information model {type(spec.info).__name__}")
    weights = _markov_weights(spec.info, x_pts, logw0, i_new, to_t)
    return StateBatch(spec, to_t, driver, i_new, x_pts, weights, x_true=x_new)
