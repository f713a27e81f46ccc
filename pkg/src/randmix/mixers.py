"""Mixer families h(u, x) and priors for the hidden mixing variable X.

A mixer maps (maturity u, mixer value x) to the Esscher exponent applied to
the driver. Admissibility of a (driver, mixer, prior) triple means every
attainable h(u, x) stays inside the driver's normaliser domain; it is
checked on a dense u-grid over [0, u_max] plus analytic extremum candidates
(peaks of the Gaussian bump and of the chameleon sine branch, interval
endpoints), and reported with a witness when violated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .processes import (
    BrownianParams,
    CompoundPoissonParams,
    GammaCPParams,
    GammaParams,
    VGParams,
)

__all__ = [
    "ExpDecay",
    "BinaryExpDecay",
    "GaussBump",
    "Chameleon",
    "OUQuadratic",
    "evaluate_mixer",
    "DiscretePrior",
    "UniformPrior",
    "prior_nodes",
    "AdmissibilityReport",
    "validate_admissibility",
]

UNIFORM_PRIOR_NODES = 201  # Gauss-Legendre nodes used for continuous priors


# --- mixer families ----------------------------------------------------------


@dataclass(frozen=True)
class ExpDecay:
    """h(u, x) = c * exp(-u x)."""

    c: float


@dataclass(frozen=True)
class BinaryExpDecay:
    """h(u, x) = c * exp(-b u (1 - x)); constant in u at x = 1."""

    c: float
    b: float

    def __post_init__(self):
        if self.b < 0:
            raise DomainError("BinaryExpDecay requires b >= 0")


@dataclass(frozen=True)
class GaussBump:
    """h(u, x) = c * exp(-b (u - x)^2), peaked at u = x."""

    c: float
    b: float

    def __post_init__(self):
        if self.b < 0:
            raise DomainError("GaussBump requires b >= 0")


@dataclass(frozen=True)
class Chameleon:
    """Oscillates as c1*sin(alpha1*u) up to u = x, decays as c2*exp(-alpha2*u) after."""

    c1: float
    alpha1: float
    c2: float
    alpha2: float

    def __post_init__(self):
        if self.alpha1 <= 0:
            raise DomainError("Chameleon requires alpha1 > 0")
        if self.alpha2 < 0:
            raise DomainError("Chameleon requires alpha2 >= 0")


@dataclass(frozen=True)
class OUQuadratic:
    """h(s, x) = c1 * exp(-c2 (s - x)) * s; positive, as heat-kernel models require."""

    c1: float
    c2: float

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise DomainError("OUQuadratic requires c1 > 0 and c2 > 0")


def evaluate_mixer(mixer, u, x):
    """h(u, x) with numpy broadcasting over both arguments."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    if isinstance(mixer, ExpDecay):
        return mixer.c * np.exp(-u * x)
    if isinstance(mixer, BinaryExpDecay):
        return mixer.c * np.exp(-mixer.b * u * (1.0 - x))
    if isinstance(mixer, GaussBump):
        return mixer.c * np.exp(-mixer.b * (u - x) ** 2)
    if isinstance(mixer, Chameleon):
        u, x = np.broadcast_arrays(u, x)
        return np.where(
            u <= x,
            mixer.c1 * np.sin(mixer.alpha1 * u),
            mixer.c2 * np.exp(-mixer.alpha2 * u),
        )
    if isinstance(mixer, OUQuadratic):
        return mixer.c1 * np.exp(-mixer.c2 * (u - x)) * u
    raise TypeError(f"unknown mixer {type(mixer).__name__}")


# --- priors -------------------------------------------------------------------


@dataclass(frozen=True)
class DiscretePrior:
    """Finitely supported prior; weights sum to one, zero weights allowed."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if pts.shape != w.shape or pts.ndim != 1:
            raise DomainError("points and weights must be 1-d arrays of equal length")
        if len(np.unique(pts)) != len(pts):
            raise DomainError("prior points must be distinct")
        if np.any(w < 0) or not np.any(w > 0):
            raise DomainError("prior weights must be non-negative with positive total")
        if abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("prior weights must sum to 1")

    @staticmethod
    def binary(p1: float) -> "DiscretePrior":
        """Two-point prior on {0, 1} with P(X = 1) = p1."""
        if not 0.0 <= p1 <= 1.0:
            raise DomainError("binary prior requires 0 <= p1 <= 1")
        return DiscretePrior(np.array([0.0, 1.0]), np.array([1.0 - p1, p1]))

    def mean(self) -> float:
        return float(self.points @ self.weights)


@dataclass(frozen=True)
class UniformPrior:
    """Continuous uniform prior on (a, b)."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError("uniform prior requires a < b")

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)


def prior_nodes(prior, n_nodes: int = UNIFORM_PRIOR_NODES):
    """Quadrature representation (x, w) of the prior with sum(w) = 1.

    Discrete priors return their own atoms; continuous uniform priors are
    represented on Gauss-Legendre nodes mapped into (a, b).
    """
    if isinstance(prior, DiscretePrior):
        return prior.points.copy(), prior.weights.copy()
    if isinstance(prior, UniformPrior):
        xi, wi = np.polynomial.legendre.leggauss(n_nodes)
        x = prior.a + 0.5 * (xi + 1.0) * (prior.b - prior.a)
        return x, 0.5 * wi  # GL weights sum to 2; density 1/(b-a) cancels the map Jacobian
    raise TypeError(f"unknown prior {type(prior).__name__}")


# --- admissibility -------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    constraint: str
    witness: tuple | None = None  # (u, x, h) attaining the violation

    def __bool__(self) -> bool:
        return self.ok


def _candidate_u_grid(mixer, x_pts: np.ndarray, u_max: float, n_u: int) -> np.ndarray:
    u = np.linspace(0.0, u_max, n_u)
    extra = [np.array([0.0, u_max])]
    if isinstance(mixer, GaussBump):
        extra.append(x_pts)  # |h| peaks at u = x
    if isinstance(mixer, Chameleon):
        # sine-branch peaks, and the exp branch's supremum just past each x
        k_max = int(mixer.alpha1 * u_max / np.pi) + 1
        peaks = (0.5 * np.pi + np.pi * np.arange(k_max + 1)) / mixer.alpha1
        extra.append(peaks[peaks <= u_max])
        extra.append(np.nextafter(x_pts, np.inf))
    u = np.unique(np.concatenate([u] + extra))
    return u[(u >= 0.0) & (u <= u_max * (1 + 1e-12))]


def _check_h_domain(driver, h: np.ndarray, u: np.ndarray, x: np.ndarray) -> AdmissibilityReport:
    """Domain test for one scalar driver against an (n_u, n_x) matrix of h values."""
    if isinstance(driver, (BrownianParams, CompoundPoissonParams)):
        # Brownian: all h admissible. Gaussian jump law: MGF finite everywhere.
        return AdmissibilityReport(True, "all real h admissible")
    if isinstance(driver, GammaParams):
        bound = 1.0 / driver.kappa
        i = np.unravel_index(int(np.argmax(h)), h.shape)
        if h[i] >= bound:
            return AdmissibilityReport(
                False,
                f"gamma driver requires h < 1/kappa = {bound:.6g}",
                (float(u[i[0]]), float(x[i[1]]), float(h[i])),
            )
        return AdmissibilityReport(True, f"max h = {h[i]:.6g} < 1/kappa = {bound:.6g}")
    if isinstance(driver, VGParams):
        q = 1.0 - driver.theta * driver.nu * h - 0.5 * driver.sigma**2 * driver.nu * h * h
        i = np.unravel_index(int(np.argmin(q)), q.shape)
        if q[i] <= 0.0:
            return AdmissibilityReport(
                False,
                "variance gamma driver requires 1 - theta*nu*h - (sigma^2*nu/2)*h^2 > 0",
                (float(u[i[0]]), float(x[i[1]]), float(h[i])),
            )
        return AdmissibilityReport(True, f"min normaliser argument = {q[i]:.6g} > 0")
    raise TypeError(f"unknown driver {type(driver).__name__}")


def validate_admissibility(
    driver,
    mixer,
    prior,
    mixer2=None,
    u_max: float = 200.0,
    n_u: int = 10_000,
) -> AdmissibilityReport:
    """Check that attainable mixer values keep the Esscher normaliser finite.

    For the paired gamma + compound-Poisson driver, `mixer` applies to the
    gamma component and `mixer2` to the jump component; both are checked.
    """
    x_pts, _ = prior_nodes(prior)
    if isinstance(prior, UniformPrior):
        x_pts = np.unique(np.concatenate([x_pts, [prior.a, prior.b]]))
    if isinstance(driver, GammaCPParams):
        if mixer2 is None:
            raise DomainError("paired driver needs a second mixer for the jump component")
        rep = validate_admissibility(driver.gamma, mixer, prior, u_max=u_max, n_u=n_u)
        if not rep.ok:
            return rep
        return validate_admissibility(driver.cp, mixer2, prior, u_max=u_max, n_u=n_u)
    u = _candidate_u_grid(mixer, x_pts, u_max, n_u)
    h = evaluate_mixer(mixer, u[:, None], x_pts[None, :])
    return _check_h_domain(driver, h, u, x_pts)
