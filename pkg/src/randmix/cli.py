"""Command-line front end: scenario configs in, CSV/JSON artifacts out.

Four subcommands: simulate-paths writes per-path time series of the driver,
information process, short rate, bond price and pricing kernel; yield-curves
writes discount/zero-curve tables for sampled states; option-surface writes
Monte Carlo bond option prices; validate runs the model invariant suite and
emits a machine-readable report.

All randomness flows from one seed via per-purpose child streams, recorded
in the metadata written next to every artifact. CSV output is RFC-4180 style
with a header row and 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, load_config
from .errors import ConfigError, RandmixError
from .esscher import filtered_m_matrix
from .heatkernel import (
    HeatKernelModel,
    bond_price_whk_batch,
    fh_equivalence,
    heat_kernel_states_on_grid,
    pricing_kernel_whk_batch,
    sample_heat_kernel_states,
    short_rate_whk_batch,
    simulate_heat_kernel_paths,
)
from .mixers import evaluate_mixer, prior_nodes
from .options import option_surface
from .pricing import (
    PricingModel,
    _kernel_integrals,
    bond_price,
    bond_price_batch,
    short_rate_batch,
)
from .processes import GammaCPParams, TimeGrid
from .quadrature import refine
from .rng import RngStream
from .simulation import sample_states, simulate_joint_paths

__all__ = ["main", "run_validation"]

# child-stream purposes at the command level
_STATE, _MC = 0, 1


# --- writers --------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _write_table(outdir: Path, name: str, header: list, rows, fmt: str) -> str:
    if fmt == "csv":
        path = outdir / f"{name}.csv"
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])
    else:
        path = outdir / f"{name}.json"
        doc = {"columns": list(header), "rows": [[_num(v) for v in row] for row in rows]}
        path.write_text(json.dumps(doc) + "\n")
    return path.name


def _num(v):
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


def _path_table(grid: TimeGrid, values: np.ndarray):
    """(header, rows) for a (n_times, n_paths) matrix keyed by grid time."""
    n = values.shape[1]
    header = ["t"] + [f"path_{i}" for i in range(n)]
    rows = [[t] + list(vals) for t, vals in zip(grid.t, values)]
    return header, rows


def _write_metadata(outdir: Path, command: str, cfg: ScenarioConfig, files: list,
                    streams: dict, extra: dict | None = None) -> str:
    meta = {
        "command": command,
        "version": __version__,
        "kind": cfg.kind,
        "seed": cfg.run.seed,
        "n_paths": cfg.run.n_paths,
        "rng_streams": streams,
        "files": files,
        "model": cfg.source.get("model", {}),
    }
    if extra:
        meta.update(extra)
    path = outdir / "metadata.json"
    path.write_text(json.dumps(meta, indent=2) + "\n")
    return path.name


def _outdir(cfg: ScenarioConfig) -> Path:
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- simulate-paths ----------------------------------------------------------------


def _fh_panel(model: PricingModel, paths, maturity: float):
    """Pricing kernel, bond price and short rate on the full grid, per path."""
    grid = paths.grid
    n_t, n = len(grid), paths.info.shape[1]
    pi = np.empty((n_t, n))
    bond = np.empty((n_t, n))
    rate = np.empty((n_t, n))
    for i, t in enumerate(grid.t):
        b = paths.states_at(float(t))
        _, den, nums = _kernel_integrals(model, b.t, b.driver, b.weights, [maturity])
        m_t = filtered_m_matrix(model.spec, b.t, b.driver, b.weights, np.array([b.t]))[:, 0]
        pi[i] = den
        bond[i] = nums[:, 0] / den
        rate[i] = float(np.asarray(model.curve.rho(b.t))) * m_t / den
    return pi, bond, rate


def _whk_panel(model: HeatKernelModel, grid: TimeGrid, y, info, maturity: float):
    n_t, n = len(grid), y.values.shape[1]
    pi = np.empty((n_t, n))
    bond = np.empty((n_t, n))
    rate = np.empty((n_t, n))
    for i in range(n_t):
        hb = heat_kernel_states_on_grid(model, grid, y, info, i)
        pi[i] = pricing_kernel_whk_batch(model, hb.t, hb.y, hb.weights)
        bond[i] = bond_price_whk_batch(model, hb.t, hb.y, hb.weights, maturity)
        rate[i] = short_rate_whk_batch(model, hb.t, hb.y, hb.weights)
    return pi, bond, rate


def cmd_simulate_paths(cfg: ScenarioConfig, config_path: str) -> int:
    run, fmt = cfg.run, cfg.output.format
    maturity = cfg.bond_maturity
    if maturity < run.horizon:
        raise ConfigError("[run] bond_maturity must not precede the simulation horizon")
    grid = TimeGrid.regular(run.horizon, run.dt)
    rng = RngStream(run.seed)
    out = _outdir(cfg)
    files = []
    if isinstance(cfg.model, PricingModel):
        paths = simulate_joint_paths(cfg.model.spec, grid, run.n_paths, rng)
        if isinstance(cfg.model.spec.driver, GammaCPParams):
            files.append(_write_table(out, "driver_gamma", *_path_table(grid, paths.driver[:, :, 0]), fmt))
            files.append(_write_table(out, "driver_cp", *_path_table(grid, paths.driver[:, :, 1]), fmt))
        else:
            files.append(_write_table(out, "driver", *_path_table(grid, paths.driver), fmt))
        files.append(_write_table(out, "info", *_path_table(grid, paths.info), fmt))
        pi, bond, rate = _fh_panel(cfg.model, paths, maturity)
        streams = {"driver": 0, "info": 1, "mixer": 2}
    else:
        y, info, _ = simulate_heat_kernel_paths(cfg.model, grid, run.n_paths, rng)
        files.append(_write_table(out, "driver", *_path_table(grid, y.values), fmt))
        files.append(_write_table(out, "info", *_path_table(grid, info.values), fmt))
        pi, bond, rate = _whk_panel(cfg.model, grid, y, info, maturity)
        streams = {"ou": 0, "info": 1, "mixer": 2}
    files.append(_write_table(out, "short_rate", *_path_table(grid, rate), fmt))
    files.append(_write_table(out, "bond_price", *_path_table(grid, bond), fmt))
    files.append(_write_table(out, "pricing_kernel", *_path_table(grid, pi), fmt))
    _write_metadata(out, "simulate-paths", cfg, files, streams,
                    extra={"config": config_path, "bond_maturity": maturity,
                           "horizon": run.horizon, "dt": run.dt})
    return 0


# --- yield-curves -------------------------------------------------------------------


def cmd_yield_curves(cfg: ScenarioConfig, config_path: str) -> int:
    run, fmt = cfg.run, cfg.output.format
    if not run.times or not run.tenors:
        raise ConfigError("[run] yield-curves needs non-empty 'times' and 'tenors'")
    tenors = np.asarray(run.tenors, dtype=float)
    rng = RngStream(run.seed)
    rows = []
    for k, t in enumerate(run.times):
        child = rng.child(k)
        if isinstance(cfg.model, PricingModel):
            b = sample_states(cfg.model.spec, t, run.n_paths, child)
            prices = bond_price_batch(cfg.model, b.t, b.driver, b.weights, t + tenors)
        else:
            hb = sample_heat_kernel_states(cfg.model, t, run.n_paths, child)
            prices = np.stack(
                [bond_price_whk_batch(cfg.model, hb.t, hb.y, hb.weights, t + tau) for tau in tenors],
                axis=-1,
            )
        yields = -np.log(prices) / tenors[None, :]
        for i in range(run.n_paths):
            for j, tau in enumerate(tenors):
                rows.append([t, tau, prices[i, j], yields[i, j], i])
    out = _outdir(cfg)
    files = [_write_table(out, "yield_curves", ["t", "tau", "P", "Y", "path_id"], rows, fmt)]
    _write_metadata(out, "yield-curves", cfg, files, {"per_time_child": "k"},
                    extra={"config": config_path, "times": list(run.times),
                           "tenors": list(run.tenors)})
    return 0


# --- option-surface ----------------------------------------------------------------


def cmd_option_surface(cfg: ScenarioConfig, config_path: str) -> int:
    run, fmt = cfg.run, cfg.output.format
    if not isinstance(cfg.model, PricingModel):
        raise ConfigError("option-surface prices bond options under fh models only")
    if not run.expiries or not run.strikes:
        raise ConfigError("[run] option-surface needs non-empty 'expiries' and 'strikes'")
    maturity = cfg.bond_maturity
    rng = RngStream(run.seed)
    s = run.valuation_time
    if s == 0.0:
        state = cfg.model.spec.initial_state()
    else:
        state = sample_states(cfg.model.spec, s, 1, rng.child(_STATE)).state(0)
    surf = option_surface(cfg.model, state, maturity, run.expiries, run.strikes,
                          run.n_paths, rng.child(_MC))
    rows = []
    for i, expiry in enumerate(surf.expiries):
        for j, k in enumerate(surf.strikes):
            rows.append([expiry, k, surf.prices[i, j], surf.std_errors[i, j]])
    out = _outdir(cfg)
    files = [_write_table(out, "option_surface",
                          ["expiry", "strike", "price", "std_error"], rows, fmt)]
    _write_metadata(out, "option-surface", cfg, files,
                    {"state": _STATE, "mc": _MC, "per_expiry_child": "i"},
                    extra={"config": config_path, "valuation_time": s,
                           "bond_maturity": maturity})
    return 0


# --- validate ----------------------------------------------------------------------


def _check(name: str, passed: bool, **details) -> dict:
    return {"name": name, "passed": bool(passed), "details": details}


def _forward0(curve, t: float) -> float:
    return float(np.asarray(curve.rho(t))) / float(np.asarray(curve.discount(t)))


def _mixer_flat_in_u(spec) -> bool:
    """True when h(u, x) is constant in u on the prior support (flat-rate case)."""
    x, w = prior_nodes(spec.prior)
    xs = x[w > 0]
    u = np.linspace(0.0, 30.0, 64)
    for mixer in (spec.mixer, spec.mixer2):
        if mixer is None:
            continue
        h = evaluate_mixer(mixer, u[:, None], xs[None, :])
        if np.max(np.abs(h - h[0])) > 1e-12:
            return False
    return True


def _validate_fh(cfg: ScenarioConfig, rng: RngStream) -> list:
    model: PricingModel = cfg.model
    spec = model.spec
    checks = []

    mats = [1.0, 2.0, 5.0, 10.0, 20.0]
    state0 = spec.initial_state()
    errs = [abs(bond_price(model, state0, T) - float(np.asarray(model.curve.discount(T))))
            for T in mats]
    checks.append(_check("initial_curve_reproduction", max(errs) <= 1e-6,
                         maturities=mats, max_abs_error=max(errs), tol=1e-6))

    if _mixer_flat_in_u(spec):
        grid = TimeGrid.regular(5.0, 1.0)
        paths = simulate_joint_paths(spec, grid, 20, rng.child(1))
        worst = 0.0
        for t in (1.0, 2.0, 3.0, 4.0, 5.0):
            b = paths.states_at(t)
            r = short_rate_batch(model, b.t, b.driver, b.weights)
            worst = max(worst, float(np.max(np.abs(r - _forward0(model.curve, t)))))
        checks.append(_check("degenerate_flat_rate", worst <= 1e-6,
                             applicable=True, max_abs_error=worst, tol=1e-6))
    else:
        checks.append(_check("degenerate_flat_rate", True, applicable=False))

    b = sample_states(spec, 2.0, 200, rng.child(2))
    r = short_rate_batch(model, b.t, b.driver, b.weights)
    prices = bond_price_batch(model, b.t, b.driver, b.weights, b.t + np.array([1.0, 2.0, 5.0, 10.0, 18.0]))
    mono = bool(np.all(np.diff(prices, axis=1) < 0.0))
    checks.append(_check("positivity_and_monotonicity", bool(np.all(r > 0.0)) and mono,
                         n_states=200, min_short_rate=float(np.min(r)),
                         bond_strictly_decreasing=mono))

    mass = float(np.max(np.abs(b.weights.sum(axis=1) - 1.0)))
    checks.append(_check("filter_mass", mass <= 1e-10, max_abs_error=mass, tol=1e-10))

    fine = PricingModel(spec, model.curve, refine(model.quad))
    gaps = [abs(bond_price(model, state0, T) - bond_price(fine, state0, T)) for T in mats]
    checks.append(_check("quadrature_self_convergence", max(gaps) <= 1e-6,
                         max_abs_change=max(gaps), tol=1e-6))
    return checks


def _validate_whk(cfg: ScenarioConfig, rng: RngStream) -> list:
    model: HeatKernelModel = cfg.model
    checks = []

    hb = sample_heat_kernel_states(model, 2.0, 200, rng.child(2))
    r = short_rate_whk_batch(model, hb.t, hb.y, hb.weights)
    prices = np.stack(
        [bond_price_whk_batch(model, hb.t, hb.y, hb.weights, hb.t + tau)
         for tau in (1.0, 2.0, 5.0, 10.0, 18.0)],
        axis=-1,
    )
    mono = bool(np.all(np.diff(prices, axis=1) < 0.0))
    checks.append(_check("positivity_and_monotonicity", bool(np.all(r > 0.0)) and mono,
                         n_states=200, min_short_rate=float(np.min(r)),
                         bond_strictly_decreasing=mono))

    mass = float(np.max(np.abs(hb.weights.sum(axis=1) - 1.0)))
    checks.append(_check("filter_mass", mass <= 1e-10, max_abs_error=mass, tol=1e-10))

    reports = [fh_equivalence(model, hb.state(i)) for i in range(5)]
    gap = max(rep.rel_gap for rep in reports)
    ok = all(rep.ok for rep in reports)
    checks.append(_check("fh_equivalence", ok, n_states=5, max_rel_gap=gap, tol=1e-4))

    fine = HeatKernelModel(model.ou, model.mixer, model.prior, model.info, model.weight,
                           refine(model.quad))
    state0 = model.initial_state()
    from .heatkernel import bond_price_whk

    gaps = [abs(bond_price_whk(model, state0, T) - bond_price_whk(fine, state0, T))
            for T in (2.0, 5.0, 10.0)]
    checks.append(_check("quadrature_self_convergence", max(gaps) <= 1e-6,
                         max_abs_change=max(gaps), tol=1e-6))
    return checks


def run_validation(cfg: ScenarioConfig) -> list:
    """Model invariant checks; returns a list of {name, passed, details} dicts."""
    rng = RngStream(cfg.run.seed)
    driver = cfg.model.spec.driver if isinstance(cfg.model, PricingModel) else cfg.model.ou
    checks = [_check("admissibility", True,
                     driver=type(driver).__name__,
                     mixer=type(cfg.model.mixer if isinstance(cfg.model, HeatKernelModel)
                                else cfg.model.spec.mixer).__name__)]
    if isinstance(cfg.model, PricingModel):
        checks.extend(_validate_fh(cfg, rng))
    else:
        checks.extend(_validate_whk(cfg, rng))
    return checks


def _emit_report(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2)
    print(text)
    if out is not None:
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "validate_report.json").write_text(text + "\n")


def cmd_validate(args) -> int:
    t0 = time.perf_counter()
    try:
        cfg = _load_cfg(args)
    except RandmixError as e:
        report = {
            "config": args.config,
            "passed": False,
            "error": {"type": type(e).__name__, "message": str(e)},
        }
        witness = getattr(e, "witness", None)
        if witness is not None:
            report["error"]["witness"] = [float(v) for v in witness]
        _emit_report(report, args.out)
        return 1
    checks = run_validation(cfg)
    passed = all(c["passed"] for c in checks)
    report = {
        "config": args.config,
        "kind": cfg.kind,
        "seed": cfg.run.seed,
        "passed": passed,
        "checks": checks,
        "elapsed_s": round(time.perf_counter() - t0, 3),
    }
    _emit_report(report, args.out)
    return 0 if passed else 1


# --- entry point --------------------------------------------------------------------


def _load_cfg(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    run, out = cfg.run, cfg.output
    if args.seed is not None:
        run = replace(run, seed=args.seed)
    if args.paths is not None:
        run = replace(run, n_paths=args.paths)
    if args.out is not None:
        out = replace(out, directory=args.out)
    if args.format is not None:
        out = replace(out, format=args.format)
    return replace(cfg, run=run, output=out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="scenario TOML file")
    common.add_argument("--seed", type=int, default=None, help="override run.seed")
    common.add_argument("--out", default=None, metavar="DIR", help="override output.directory")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="override output.format")
    common.add_argument("--paths", type=int, default=None, help="override run.n_paths")

    p = argparse.ArgumentParser(
        prog="randmix",
        description="Simulate and price randomised-mixture interest rate models.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    cmds = {
        "simulate-paths": (cmd_simulate_paths, "write per-path time series (driver, info, rates, bond, kernel)"),
        "yield-curves": (cmd_yield_curves, "write discount and zero-coupon curves for sampled states"),
        "option-surface": (cmd_option_surface, "write Monte Carlo bond call prices over expiries and strikes"),
    }
    for name, (fn, help_text) in cmds.items():
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(fn=fn)
    sv = sub.add_parser("validate", parents=[common],
                        help="run the model invariant suite, emit a JSON report")
    sv.set_defaults(fn=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args)
    try:
        cfg = _load_cfg(args)
        return args.fn(cfg, args.config)
    except RandmixError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
