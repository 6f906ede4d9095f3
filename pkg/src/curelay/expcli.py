"""Scenario configuration, relay-selection policy, experiment orchestration,
and CSV emission.

Config files are flat UTF-8 `key = value` lines with `#` comments. Node
placement is given as coordinates (BS1 at the origin, BS2 on the x-axis);
the pairwise distances feeding the analysis are recomputed at load time.
CSV output is deterministic for a given (config, seed) and independent of
the worker count.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .analysis import outage_mc, rate_curve
from .channels import PowerConfig, ScenarioGeometry, derive_etas, dist_t, sample_fading
from .mathkernel import (
    BracketError,
    IntegrationError,
    NumericTolerance,
    exp_e1,
    gauss_2f1,
    integrate,
    tricomi_psi11,
)
from .power import closed_form_check, solve_water_level
from .relaying import sir_sample, sinr_bs, symbol_level_oracle

__all__ = [
    "ConfigError",
    "PuEntry",
    "NodeInventory",
    "ExperimentConfig",
    "select_relay",
    "load_config",
    "run_experiment",
    "main",
]

SUBCOMMANDS = ("outage-bs", "outage-su", "rate", "water-level", "validate")

_DEFAULTS = {
    "bs2_x": 2.0,
    "su1_x": 1.0,
    "pu1_x": 0.75,
    "pu4_offset": 0.4,
    "pu4_angle_deg": 30.0,
    "epsilon": 4.0,
    "w_db": 5.0,
    "cci_db": 20.0,
    "gamma_bar_db": 30.0,
    "gamma_th": 3.0,
    "sir_grid_db": "0:5:40",
    "trials": 1_000_000,
    "workers": 1,
    "out": None,
}

_OUTAGE_COLUMNS = ("gamma_bar_db", "w_db", "cci_db", "gamma_th", "side", "p_out",
                   "ci_halfwidth", "lower_bound", "upper_bound", "trials", "excluded_draws")
_RATE_COLUMNS = ("gamma_bar_db", "w_db", "cci_db", "policy", "rate_objective",
                 "rate_endtoend", "ci_halfwidth", "trials")
_WATER_COLUMNS = ("w_db", "cci_db", "lambda", "residual", "closed_form_printed",
                  "closed_form_consistent", "target_w_lin")
_VALIDATE_COLUMNS = ("check", "status", "value", "threshold")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# relay selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PuEntry:
    position: tuple[float, float]
    idle: bool
    priority: int = 0

    def __post_init__(self):
        if self.priority < 0:
            raise ValueError(f"priority must be >= 0, got {self.priority}")


@dataclass(frozen=True)
class NodeInventory:
    su_position: tuple[float, float]
    pu_entries: tuple[PuEntry, ...]


def select_relay(inv: NodeInventory):
    """Pick the idle PU nearest to the SU; ties break to the lowest index.

    Returns the index into inv.pu_entries, or None (suspension: the SU must
    wait for a non-empty idle candidate set).
    """
    best = None
    best_dist = math.inf
    for i, pu in enumerate(inv.pu_entries):
        if not pu.idle:
            continue
        dist = math.hypot(pu.position[0] - inv.su_position[0],
                          pu.position[1] - inv.su_position[1])
        if dist < best_dist:
            best, best_dist = i, dist
    return best


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: ScenarioGeometry
    power: PowerConfig
    gamma_th: float
    sir_grid_db: tuple[float, ...]
    trials: int
    seed: int
    workers: int
    out: str | None


def _parse_grid(text, key, line):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"line {line}: {key} must be LO:STEP:HI, got {text!r}")
    try:
        lo, step, hi = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"line {line}: {key} has non-numeric component in {text!r}") from None
    if step <= 0 or hi < lo:
        raise ConfigError(f"line {line}: {key} needs STEP > 0 and HI >= LO, got {text!r}")
    grid = tuple(float(v) for v in np.arange(lo, hi + step / 2.0, step))
    if not grid:
        raise ConfigError(f"line {line}: {key} produced an empty grid")
    return grid


def _geometry_from_placement(vals, lines):
    su1_x = vals["su1_x"]
    pu1_x = vals["pu1_x"]
    bs2_x = vals["bs2_x"]
    off = vals["pu4_offset"]
    ang = math.radians(vals["pu4_angle_deg"])
    pu4 = (su1_x + off * math.sin(ang), off * math.cos(ang))
    try:
        return ScenarioGeometry(
            s=pu1_x,
            l=abs(su1_x - pu1_x),
            r=math.hypot(pu4[0] - pu1_x, pu4[1]),
            q=math.hypot(pu4[0], pu4[1]),
            z=off,
            d=abs(bs2_x - su1_x),
            epsilon=vals["epsilon"],
        )
    except ValueError as exc:
        line = lines.get("epsilon", lines.get("su1_x", "?"))
        raise ConfigError(f"line {line}: invalid geometry: {exc}") from None


def _build_config(vals, lines):
    if "seed" not in vals:
        raise ConfigError("missing mandatory key 'seed' (wall-clock seeding is not supported)")
    geom = _geometry_from_placement(vals, lines)
    power = PowerConfig(p_cci_db=vals["cci_db"], w_db=vals["w_db"],
                        gamma_bar_db=vals["gamma_bar_db"])
    grid = vals["sir_grid_db"]
    if isinstance(grid, str):
        grid = _parse_grid(grid, "sir_grid_db", lines.get("sir_grid_db", "?"))
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("sir_grid_db must be strictly increasing")
    for key in ("trials", "seed", "workers"):
        if vals[key] != int(vals[key]) or int(vals[key]) < (0 if key == "seed" else 1):
            line = lines.get(key, "?")
            raise ConfigError(f"line {line}: {key} must be a nonnegative integer, got {vals[key]}")
    return ExperimentConfig(
        geometry=geom, power=power, gamma_th=vals["gamma_th"],
        sir_grid_db=grid, trials=int(vals["trials"]), seed=int(vals["seed"]),
        workers=int(vals["workers"]), out=vals["out"],
    )


def load_config(path) -> ExperimentConfig:
    """Parse and fully validate a flat key = value config file.

    Unknown keys are rejected; errors name the offending key and line.
    """
    vals = dict(_DEFAULTS)
    lines = {}
    numeric = {"bs2_x", "su1_x", "pu1_x", "pu4_offset", "pu4_angle_deg", "epsilon",
               "w_db", "cci_db", "gamma_bar_db", "gamma_th", "trials", "seed", "workers"}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            key, _, value = (part.strip() for part in text.partition("="))
            if key not in _DEFAULTS and key != "seed":
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in lines:
                raise ConfigError(f"line {lineno}: duplicate key {key!r} (first on line {lines[key]})")
            lines[key] = lineno
            if key in numeric:
                try:
                    vals[key] = float(value)
                except ValueError:
                    raise ConfigError(f"line {lineno}: {key} must be numeric, got {value!r}") from None
            else:
                vals[key] = value
    return _build_config(vals, lines)


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _outage_rows(cfg: ExperimentConfig, side: str, lam: float):
    rows = []
    for gbar_db in cfg.sir_grid_db:
        power = replace(cfg.power, gamma_bar_db=float(gbar_db))
        est = outage_mc(cfg.geometry, power, lam, cfg.gamma_th, side,
                        cfg.trials, cfg.seed, cfg.workers)
        rows.append((gbar_db, cfg.power.w_db, cfg.power.p_cci_db, cfg.gamma_th, side,
                     est.p_out, est.ci_halfwidth, est.lower_bound, est.upper_bound,
                     est.trials, est.excluded_draws))
    return rows


def _rate_rows(cfg: ExperimentConfig, lam: float):
    rows = []
    for policy in ("optimal", "fixed"):
        for est in rate_curve(cfg.geometry, cfg.power, lam, policy,
                              cfg.sir_grid_db, cfg.trials, cfg.seed, cfg.workers):
            rows.append((est.sir_db, cfg.power.w_db, cfg.power.p_cci_db, policy,
                         est.rate_objective, est.rate_endtoend, est.ci_halfwidth,
                         est.trials))
    return rows


def _validation_rows(cfg: ExperimentConfig):
    """Fast oracle/invariant suite; each row is (check, status, value, threshold)."""
    geom, power = cfg.geometry, cfg.power
    rows = []

    def check(name, value, threshold):
        rows.append((name, "PASS" if value <= threshold else "FAIL", value, threshold))

    tight = NumericTolerance(rel_tol=1e-13, abs_tol=1e-300, max_iter=4000)
    xs = np.geomspace(1e-6, 300.0, 20)
    worst = max(abs(integrate(lambda t: np.exp(-t) / t, x, math.inf, tight).value
                    - exp_e1(x)) / exp_e1(x) for x in xs)
    check("e1-vs-quadrature", worst, 1e-10)
    worst = max(abs(integrate(lambda t: np.exp(-x * t) / (1.0 + t), 0.0, math.inf, tight).value
                    - tricomi_psi11(x)) / tricomi_psi11(x) for x in xs)
    check("psi11-vs-quadrature", worst, 1e-10)

    def f223(z):
        w = 1.0 - z
        return (2.0 / z**2) * (z / w + math.log(w))

    def f334(z):
        w = 1.0 - z
        return (3.0 / z**3) * (1.5 + 0.5 / w**2 - 2.0 / w - math.log(w))

    # the closed forms are ill-conditioned near z = 0; stay away from it
    zs = np.concatenate([np.linspace(-5.0, -0.1, 8), 1.0 - np.geomspace(1e-8, 0.9, 8)])
    worst = max(max(abs(gauss_2f1(2, 2, 3, z) - f223(z)) / abs(f223(z)),
                    abs(gauss_2f1(3, 3, 4, z) - f334(z)) / abs(f334(z))) for z in zs)
    check("2f1-vs-closed-form", worst, 1e-10)

    et = derive_etas(geom)
    worst = 0.0
    for x in (0.1, 1.0, 7.0, 50.0):
        def inner(y):
            return (x / (x + y)) * et.c1 * (np.exp(-et.q_eps * y) - np.exp(-et.r_eps * y))
        ref = integrate(inner, 0.0, math.inf, tight).value
        _, cdf = dist_t(x, geom)
        worst = max(worst, abs(float(cdf) - ref) / ref)
    check("t-cdf-vs-double-quad", worst, 1e-8)

    level = solve_water_level(geom, power)
    report = closed_form_check(level.lam, geom, power)
    check("closed-form-consistent-residual",
          abs(report.consistent_residual) / power.w_lin, 1e-6)
    rows.append(("closed-form-printed-residual", "INFO",
                 report.as_printed_residual, math.nan))

    rng = np.random.default_rng(cfg.seed)
    draw = sample_fading(rng, power, 1_000_000)
    s = sir_sample(draw, geom, power, level.lam)
    t = (geom.q ** -geom.epsilon * draw.u2
         + geom.r ** -geom.epsilon * draw.v2) * draw.f2 / draw.g2
    mc = float(np.maximum(level.lam - et.eta4 * power.p_cci_lin * t, 0.0).mean())
    check("constraint-mc-relative-error", abs(mc - power.w_lin) / power.w_lin, 5e-3)

    fin = s.valid & np.isfinite(s.gamma_bs1) & np.isfinite(s.gamma1) & np.isfinite(s.gamma2)
    mn = np.minimum(s.gamma1[fin], s.gamma2[fin])
    slack = 1e-13
    bad = np.count_nonzero((s.gamma_bs1[fin] > mn * (1 + slack))
                           | (s.gamma_bs1[fin] < 0.5 * mn * (1 - slack)))
    check("bound-sandwich-violations", float(bad), 0.0)
    sinr = sinr_bs(draw, geom, power, level.lam)
    bad = np.count_nonzero(sinr[fin] > s.gamma_bs1[fin])
    check("sinr-le-sir-violations", float(bad), 0.0)
    up = s.valid & np.isfinite(s.gamma_su1_upper)
    eq = s.gamma_su1[up] == s.gamma_su1_upper[up]
    bad = np.count_nonzero(eq != (s.p_su1[up] == 0.0))
    check("su-upper-equality-iff-zero-power", float(bad), 0.0)

    sir_hat = symbol_level_oracle(
        sample_fading(np.random.default_rng(cfg.seed + 1), power), geom, power,
        level.lam, n_symbols=100_000, rng=np.random.default_rng(cfg.seed + 2))
    closed = sir_sample(sample_fading(np.random.default_rng(cfg.seed + 1), power),
                        geom, power, level.lam)
    rel_bs = abs(sir_hat[0] - closed.gamma_bs1[0]) / closed.gamma_bs1[0]
    rel_su = abs(sir_hat[1] - closed.gamma_su1[0]) / closed.gamma_su1[0]
    check("symbol-oracle-bs-relative", rel_bs, 0.02)
    check("symbol-oracle-su-relative", rel_su, 0.02)
    return rows


def run_experiment(cmd: str, cfg: ExperimentConfig, out_path: str) -> int:
    """Run one subcommand and write its CSV. Returns the count of FAILed
    validation checks (0 for the other subcommands)."""
    if cmd not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {cmd!r}")
    header = [f"# seed = {cfg.seed}", f"# trials = {cfg.trials}"]
    failures = 0
    if cmd == "validate":
        columns, rows = _VALIDATE_COLUMNS, _validation_rows(cfg)
        failures = sum(1 for r in rows if r[1] == "FAIL")
    else:
        level = solve_water_level(cfg.geometry, cfg.power)
        report = closed_form_check(level.lam, cfg.geometry, cfg.power)
        header += [f"# lambda = {_fmt(level.lam)}",
                   f"# lambda_residual = {_fmt(level.residual)}",
                   f"# closed_form_printed_residual = {_fmt(report.as_printed_residual)}",
                   f"# closed_form_consistent_residual = {_fmt(report.consistent_residual)}"]
        if cmd == "outage-bs":
            columns, rows = _OUTAGE_COLUMNS, _outage_rows(cfg, "bs", level.lam)
        elif cmd == "outage-su":
            columns, rows = _OUTAGE_COLUMNS, _outage_rows(cfg, "su", level.lam)
        elif cmd == "rate":
            columns, rows = _RATE_COLUMNS, _rate_rows(cfg, level.lam)
        else:  # water-level
            columns = _WATER_COLUMNS
            rows = [(cfg.power.w_db, cfg.power.p_cci_db, level.lam, level.residual,
                     report.as_printed_value, report.consistent_value, cfg.power.w_lin)]
    lines = header + [",".join(columns)] + [",".join(_fmt(v) for v in row) for row in rows]
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return failures


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    power = cfg.power
    if args.w_db is not None:
        power = replace(power, w_db=args.w_db)
    if args.cci_db is not None:
        power = replace(power, p_cci_db=args.cci_db)
    updates = {"power": power}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.sir_db is not None:
        updates["sir_grid_db"] = _parse_grid(args.sir_db, "--sir-db", "cli")
    return replace(cfg, **updates)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="curelay",
        description="Underlay two-way AF relaying experiments (outage, rate, water level).")
    sub = parser.add_subparsers(dest="cmd", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--sir-db", default=None, metavar="LO:STEP:HI")
        p.add_argument("--w-db", type=float, default=None)
        p.add_argument("--cci-db", type=float, default=None)
        p.add_argument("--workers", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        failures = run_experiment(args.cmd, cfg, args.out)
    except (BracketError, IntegrationError) as exc:
        if os.path.exists(args.out):
            os.unlink(args.out)
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - partial output must not survive
        if os.path.exists(args.out):
            os.unlink(args.out)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if failures:
        print(f"{failures} validation check(s) FAILED (see {args.out})", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
