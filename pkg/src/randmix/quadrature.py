"""Semi-infinite quadrature for maturity integrals.

Integrals of the form int_t^inf f(u) du are computed with panel-wise
Gauss-Legendre rules on [t, u_max]: panels start at panels_per_year density
near t and widen geometrically, with an optional width cap over an initial
window for oscillatory integrands. Beyond u_max the integrand is modelled
as C*exp(-r*u); the decay rate is fitted from two fixed probe points just
inside u_max (independent of the panelisation, so refining panels never
perturbs the tail term). A non-decaying probe pair raises HorizonError.

Requested breakpoints are forced onto panel edges, so the integral from any
breakpoint is an exact suffix sum over panels of a single evaluation pass.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import HorizonError

__all__ = [
    "QuadratureConfig",
    "SemiInfiniteRule",
    "build_rule",
    "integrate_semi_infinite",
    "refine",
    "expectation_over_prior",
]

_TAIL_PROBE_GAP = 1.0  # years between the two tail-fit probes
_MIN_DECAY_RATE = 1e-6


@dataclass(frozen=True)
class QuadratureConfig:
    u_max: float = 200.0
    panels_per_year: int = 4
    nodes_per_panel: int = 16
    rel_tol: float = 1e-8
    growth: float = 1.12
    max_panel_width: float = 8.0
    # cap panel width while u < osc_cap_until (resolves oscillatory mixers)
    osc_cap_width: float = np.inf
    osc_cap_until: float = 0.0

    def __post_init__(self):
        if self.u_max <= 0 or self.panels_per_year < 1 or self.nodes_per_panel < 2:
            raise ValueError("invalid quadrature configuration")
        if self.growth < 1.0 or self.max_panel_width <= 0:
            raise ValueError("invalid quadrature configuration")


def refine(cfg: QuadratureConfig) -> QuadratureConfig:
    """Double the panel density everywhere (self-convergence checks)."""
    return replace(
        cfg,
        panels_per_year=2 * cfg.panels_per_year,
        max_panel_width=0.5 * cfg.max_panel_width,
        osc_cap_width=0.5 * cfg.osc_cap_width,
    )


@lru_cache(maxsize=8)
def _leggauss(n: int):
    xi, wi = np.polynomial.legendre.leggauss(n)
    return xi, wi


def _panel_edges(t: float, cfg: QuadratureConfig, breakpoints) -> np.ndarray:
    bps = sorted({float(b) for b in breakpoints if t < b < cfg.u_max})
    edges = [t]
    width = 1.0 / cfg.panels_per_year
    u = t
    k = 0
    while u < cfg.u_max:
        w = min(width, cfg.max_panel_width)
        if u < cfg.osc_cap_until:
            w = min(w, cfg.osc_cap_width)
        target = min(u + w, cfg.u_max)
        while k < len(bps) and bps[k] <= u:
            k += 1
        if k < len(bps) and bps[k] < target:
            target = bps[k]  # chop the panel so the breakpoint is an edge
            k += 1
        edges.append(target)
        u = target
        width *= cfg.growth
    return np.asarray(edges)


@dataclass(frozen=True)
class SemiInfiniteRule:
    """Evaluated-once quadrature rule shared across breakpoints and states."""

    t: float
    cfg: QuadratureConfig
    edges: np.ndarray  # (K+1,) panel edges, edges[0] = t, edges[-1] = u_max
    nodes: np.ndarray  # (K * nodes_per_panel,)
    weights: np.ndarray
    probes: np.ndarray  # (2,) tail-fit abscissae

    def start_index(self, point: float) -> int:
        """Node index where the suffix integral from `point` begins."""
        j = int(np.searchsorted(self.edges, point))
        if j >= len(self.edges) or abs(self.edges[j] - point) > 1e-9 * max(1.0, abs(point)):
            raise ValueError(f"{point} is not a breakpoint of this rule")
        return j * self.cfg.nodes_per_panel

    def tail(self, probe_values: np.ndarray):
        """Analytic exponential tail beyond u_max, fitted from the two probes."""
        pv = np.asarray(probe_values, dtype=float)
        f1, f2 = pv[..., 0], pv[..., 1]
        zero = (f1 == 0.0) & (f2 == 0.0)
        decayed = (f2 == 0.0) & ~zero
        live = ~zero & ~decayed
        bad = live & ((np.sign(f1) != np.sign(f2)) | (np.abs(f2) >= np.abs(f1)))
        if np.any(bad):
            raise HorizonError(
                f"integrand does not decay at u_max = {self.cfg.u_max:.6g}; "
                "increase u_max in the quadrature configuration"
            )
        with np.errstate(divide="ignore", invalid="ignore"):
            rate = np.log(np.abs(f1) / np.abs(f2)) / (self.probes[1] - self.probes[0])
        if np.any(live & (rate < _MIN_DECAY_RATE)):
            raise HorizonError(
                f"integrand decay rate below {_MIN_DECAY_RATE:g} at u_max = {self.cfg.u_max:.6g}; "
                "increase u_max in the quadrature configuration"
            )
        out = np.zeros_like(f1)
        np.divide(f2, rate, out=out, where=live)
        return out if out.ndim else float(out)

    def integrate_values(self, node_values: np.ndarray, probe_values: np.ndarray, from_point: float | None = None):
        """Suffix integral from a breakpoint plus the tail term.

        node_values has the node axis last; broadcasting over leading state
        axes is supported.
        """
        j0 = 0 if from_point is None else self.start_index(from_point)
        vals = np.asarray(node_values, dtype=float)
        body = vals[..., j0:] @ self.weights[j0:]
        return body + self.tail(probe_values)

    def integrate_function(self, f, from_point: float | None = None):
        return self.integrate_values(f(self.nodes), f(self.probes), from_point)


def build_rule(t: float, cfg: QuadratureConfig = QuadratureConfig(), breakpoints=()) -> SemiInfiniteRule:
    if t < 0:
        raise ValueError("need t >= 0")
    if t >= cfg.u_max - 2 * _TAIL_PROBE_GAP:
        raise HorizonError(f"state time {t} too close to quadrature horizon u_max = {cfg.u_max}")
    for b in breakpoints:
        if b >= cfg.u_max - 2 * _TAIL_PROBE_GAP:
            raise HorizonError(f"breakpoint {b} too close to quadrature horizon u_max = {cfg.u_max}")
    edges = _panel_edges(t, cfg, breakpoints)
    xi, wi = _leggauss(cfg.nodes_per_panel)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    weights = (half[:, None] * wi[None, :]).ravel()
    probes = np.array([cfg.u_max - _TAIL_PROBE_GAP, cfg.u_max])
    return SemiInfiniteRule(t, cfg, edges, nodes, weights, probes)


def integrate_semi_infinite(f, t: float, cfg: QuadratureConfig = QuadratureConfig()) -> float:
    """int_t^inf f(u) du for a vectorised integrand f."""
    rule = build_rule(t, cfg)
    return float(rule.integrate_function(f))


def expectation_over_prior(g, density) -> float:
    """E[g(X)] under a prior or filter density.

    Accepts anything exposing point masses: an object with .points/.weights
    (discrete priors, filter densities) or one handled by mixers.prior_nodes
    (continuous uniform priors, represented on Gauss-Legendre nodes).
    """
    if hasattr(density, "points") and hasattr(density, "weights"):
        x, w = np.asarray(density.points), np.asarray(density.weights)
    else:
        from .mixers import prior_nodes

        x, w = prior_nodes(density)
    return float(np.asarray(g(x)) @ w)
