"""Scenario configuration: sectioned TOML files mapped onto model objects.

A scenario file has three top-level tables. `[model]` selects the pricing
framework (`kind = "fh"` or `"heat_kernel"`) and its ingredients as
sub-tables; `[run]` carries command parameters (seed, grid, tenors, strikes);
`[output]` says where artifacts go. The full grammar is documented in the
README.

Parsing is strict: every key is checked against the schema and unknown keys
are rejected, so a typo cannot silently fall back to a default. Constructing
the model objects also runs their own validation (Esscher admissibility,
curve arbitrage checks, kernel integrability), so a config that parses is a
config that prices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .errors import ConfigError
from .filtering import BrownianLinearInfo, GammaNoiseInfo
from .heatkernel import HeatKernelModel, SeparableExp
from .mixers import (
    BinaryExpDecay,
    Chameleon,
    DiscretePrior,
    ExpDecay,
    GaussBump,
    OUQuadratic,
    UniformPrior,
)
from .pricing import FlatCurve, PricingModel, TabulatedCurve
from .processes import (
    BrownianParams,
    CompoundPoissonParams,
    GammaCPParams,
    GammaParams,
    OUParams,
    VGParams,
)
from .quadrature import QuadratureConfig

__all__ = [
    "RunSettings",
    "OutputSettings",
    "ScenarioConfig",
    "parse_config",
    "load_config",
]

_REQUIRED = object()


class _Section:
    """One TOML table with schema checking and consumed-key bookkeeping."""

    def __init__(self, table, path: tuple):
        if not isinstance(table, dict):
            raise ConfigError(f"[{'.'.join(path)}] must be a table")
        self.table = table
        self.path = path
        self.seen: set = set()

    def _ctx(self) -> str:
        return ".".join(self.path) if self.path else "(top level)"

    def _raw(self, key: str, required: bool):
        self.seen.add(key)
        if key not in self.table:
            if required:
                raise ConfigError(f"[{self._ctx()}] missing required key '{key}'")
            return None, False
        return self.table[key], True

    def number(self, key: str, default=_REQUIRED) -> float:
        v, ok = self._raw(key, default is _REQUIRED)
        if not ok:
            return default
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"[{self._ctx()}] '{key}' must be a number")
        return float(v)

    def integer(self, key: str, default=_REQUIRED) -> int:
        v, ok = self._raw(key, default is _REQUIRED)
        if not ok:
            return default
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"[{self._ctx()}] '{key}' must be an integer")
        return int(v)

    def string(self, key: str, default=_REQUIRED, choices=None) -> str:
        v, ok = self._raw(key, default is _REQUIRED)
        if not ok:
            return default
        if not isinstance(v, str):
            raise ConfigError(f"[{self._ctx()}] '{key}' must be a string")
        if choices is not None and v not in choices:
            raise ConfigError(
                f"[{self._ctx()}] '{key}' must be one of {sorted(choices)}, got '{v}'"
            )
        return v

    def numbers(self, key: str, default=_REQUIRED) -> tuple:
        v, ok = self._raw(key, default is _REQUIRED)
        if not ok:
            return default
        if not isinstance(v, list) or any(
            isinstance(x, bool) or not isinstance(x, (int, float)) for x in v
        ):
            raise ConfigError(f"[{self._ctx()}] '{key}' must be an array of numbers")
        return tuple(float(x) for x in v)

    def section(self, key: str, required: bool = False) -> "_Section | None":
        v, ok = self._raw(key, required)
        if not ok:
            return None
        return _Section(v, self.path + (key,))

    def finish(self) -> None:
        unknown = sorted(set(self.table) - self.seen)
        if unknown:
            raise ConfigError(f"[{self._ctx()}] unknown key(s): {unknown}")


# --- section parsers ----------------------------------------------------------


def _parse_driver(sec: _Section):
    kind = sec.string(
        "type",
        choices=("brownian", "gamma", "compound_poisson", "vg", "gamma_cp", "ou"),
    )
    if kind == "brownian":
        out = BrownianParams()
    elif kind == "gamma":
        out = GammaParams(sec.number("m"), sec.number("kappa"))
    elif kind == "compound_poisson":
        out = CompoundPoissonParams(
            sec.number("lam"), sec.number("jump_mean", 1.0), sec.number("jump_std", 0.0)
        )
    elif kind == "vg":
        out = VGParams(sec.number("theta"), sec.number("sigma"), sec.number("nu"))
    elif kind == "gamma_cp":
        g = sec.section("gamma", required=True)
        cp = sec.section("cp", required=True)
        out = GammaCPParams(
            GammaParams(g.number("m"), g.number("kappa")),
            CompoundPoissonParams(
                cp.number("lam"), cp.number("jump_mean", 1.0), cp.number("jump_std", 0.0)
            ),
        )
        g.finish()
        cp.finish()
    else:
        out = OUParams(
            sec.number("delta"), sec.number("beta"), sec.number("upsilon"), sec.number("y0")
        )
    sec.finish()
    return out


def _parse_mixer(sec: _Section):
    kind = sec.string(
        "type",
        choices=("exp_decay", "binary_exp_decay", "gauss_bump", "chameleon", "ou_quadratic"),
    )
    if kind == "exp_decay":
        out = ExpDecay(sec.number("c"))
    elif kind == "binary_exp_decay":
        out = BinaryExpDecay(sec.number("c"), sec.number("b"))
    elif kind == "gauss_bump":
        out = GaussBump(sec.number("c"), sec.number("b"))
    elif kind == "chameleon":
        out = Chameleon(
            sec.number("c1"), sec.number("alpha1"), sec.number("c2"), sec.number("alpha2")
        )
    else:
        out = OUQuadratic(sec.number("c1"), sec.number("c2"))
    sec.finish()
    return out


def _parse_prior(sec: _Section):
    kind = sec.string("type", choices=("binary", "discrete", "uniform"))
    if kind == "binary":
        out = DiscretePrior.binary(sec.number("p1"))
    elif kind == "discrete":
        out = DiscretePrior(np.array(sec.numbers("points")), np.array(sec.numbers("weights")))
    else:
        out = UniformPrior(sec.number("a"), sec.number("b"))
    sec.finish()
    return out


def _parse_info(sec: _Section):
    kind = sec.string("type", choices=("brownian_linear", "gamma_noise"))
    if kind == "brownian_linear":
        out = BrownianLinearInfo(sec.number("sigma"))
    else:
        out = GammaNoiseInfo(sec.number("m"), sec.number("kappa"))
    sec.finish()
    return out


def _parse_curve(sec: _Section):
    kind = sec.string("type", choices=("flat", "tabulated"))
    if kind == "flat":
        out = FlatCurve(sec.number("rate"))
    else:
        out = TabulatedCurve(
            np.array(sec.numbers("times")), np.array(sec.numbers("discounts"))
        )
    sec.finish()
    return out


def _parse_quadrature(sec: _Section | None) -> QuadratureConfig:
    if sec is None:
        return QuadratureConfig()
    kwargs = {}
    for key in ("u_max", "rel_tol", "growth", "max_panel_width"):
        v = sec.number(key, None)
        if v is not None:
            kwargs[key] = v
    for key in ("panels_per_year", "nodes_per_panel"):
        v = sec.integer(key, None)
        if v is not None:
            kwargs[key] = v
    sec.finish()
    try:
        return QuadratureConfig(**kwargs)
    except ValueError as e:
        raise ConfigError(f"[model.quadrature] {e}") from e


# --- run / output sections ------------------------------------------------------


@dataclass(frozen=True)
class RunSettings:
    """Command parameters; each subcommand reads the fields it needs."""

    seed: int = 0
    n_paths: int = 8
    horizon: float = 5.0
    dt: float = 0.01
    bond_maturity: float | None = None  # defaults to horizon
    times: tuple = ()  # valuation times (yield-curves)
    tenors: tuple = ()
    expiries: tuple = ()
    strikes: tuple = ()
    valuation_time: float = 0.0  # option valuation date s

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError("[run] seed must be non-negative")
        if self.n_paths < 1:
            raise ConfigError("[run] n_paths must be at least 1")
        if self.horizon <= 0 or self.dt <= 0:
            raise ConfigError("[run] horizon and dt must be positive")
        if self.bond_maturity is not None and self.bond_maturity <= 0:
            raise ConfigError("[run] bond_maturity must be positive")
        if any(t < 0 for t in self.times):
            raise ConfigError("[run] times must be non-negative")
        if any(tau <= 0 for tau in self.tenors):
            raise ConfigError("[run] tenors must be positive")
        if self.valuation_time < 0:
            raise ConfigError("[run] valuation_time must be non-negative")


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    format: str = "csv"

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ConfigError("[output] format must be 'csv' or 'json'")


def _parse_run(sec: _Section | None) -> RunSettings:
    if sec is None:
        return RunSettings()
    out = RunSettings(
        seed=sec.integer("seed", 0),
        n_paths=sec.integer("n_paths", 8),
        horizon=sec.number("horizon", 5.0),
        dt=sec.number("dt", 0.01),
        bond_maturity=sec.number("bond_maturity", None),
        times=sec.numbers("times", ()),
        tenors=sec.numbers("tenors", ()),
        expiries=sec.numbers("expiries", ()),
        strikes=sec.numbers("strikes", ()),
        valuation_time=sec.number("valuation_time", 0.0),
    )
    sec.finish()
    return out


def _parse_output(sec: _Section | None) -> OutputSettings:
    if sec is None:
        return OutputSettings()
    out = OutputSettings(
        directory=sec.string("directory", "out"),
        format=sec.string("format", "csv", choices=("csv", "json")),
    )
    sec.finish()
    return out


# --- top level -------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully validated scenario: model objects plus run/output settings."""

    kind: str  # "fh" | "heat_kernel"
    model: object  # PricingModel | HeatKernelModel
    run: RunSettings
    output: OutputSettings
    source: dict = field(repr=False, default_factory=dict)

    @property
    def bond_maturity(self) -> float:
        if self.run.bond_maturity is not None:
            return self.run.bond_maturity
        return self.run.horizon


def parse_config(data: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a parsed TOML document (a plain dict)."""
    from .esscher import MartingaleSpec

    top = _Section(data, ())
    model_sec = top.section("model", required=True)
    run = _parse_run(top.section("run"))
    output = _parse_output(top.section("output"))
    top.finish()

    kind = model_sec.string("kind", choices=("fh", "heat_kernel"))
    driver = _parse_driver(model_sec.section("driver", required=True))
    mixer = _parse_mixer(model_sec.section("mixer", required=True))
    prior = _parse_prior(model_sec.section("prior", required=True))
    info = _parse_info(model_sec.section("info", required=True))
    quad = _parse_quadrature(model_sec.section("quadrature"))

    if kind == "fh":
        if isinstance(driver, OUParams):
            raise ConfigError("[model.driver] fh models use a Levy driver, not 'ou'")
        mixer2_sec = model_sec.section("mixer2")
        mixer2 = _parse_mixer(mixer2_sec) if mixer2_sec is not None else None
        curve = _parse_curve(model_sec.section("initial_curve", required=True))
        model_sec.finish()
        spec = MartingaleSpec(driver, mixer, prior, info, mixer2=mixer2)
        model = PricingModel(spec, curve, quad)
    else:
        if not isinstance(driver, OUParams):
            raise ConfigError("[model.driver] heat_kernel models need the 'ou' driver")
        weight_sec = model_sec.section("weight", required=True)
        weight = SeparableExp(weight_sec.number("j"))
        weight_sec.finish()
        model_sec.finish()
        model = HeatKernelModel(driver, mixer, prior, info, weight, quad)

    return ScenarioConfig(kind, model, run, output, source=data)


def load_config(path) -> ScenarioConfig:
    """Parse a scenario TOML file; raises ConfigError on malformed input."""
    raw = Path(path).read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"{path}: not valid TOML: {e}") from e
    return parse_config(data)
