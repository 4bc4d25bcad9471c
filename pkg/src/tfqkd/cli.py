"""Command-line front end.

Subcommands:

* ``rate``            evaluate (optionally optimize) one operating point
* ``sweep``           optimize along a distance or pulse-count grid
* ``compare-bounds``  emit the bound-comparison tables and figures
* ``validate``        run the exhaustive/Monte-Carlo bound validation

All delimited output is plain CSV (comma separator, '.' decimal, scientific
notation for rates, one header row naming units); the report commands also
render matplotlib figures next to the CSV unless ``--no-plot`` is given.
Scientific aborts (zero key) exit 0; only configuration and I/O problems
are process errors (exit 2).  A validation run that finds violations exits 1.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .bounds import (
    DomainError,
    baseline_curty,
    baseline_gaussian,
    baseline_sampling_analytic,
    baseline_sampling_fung,
    expected_lower,
    expected_upper,
    sampling_gamma_lower,
    sampling_gamma_upper,
)
from .channel import plob_bound
from .config import ConfigError, RunConfig
from .keyrate import evaluate_p1, evaluate_p2
from .optimize import optimize, sweep as run_sweep
from .oracles import validate_chernoff_grid, validate_sampling_grid, write_validation_report

__all__ = ["main", "build_parser"]

_SYSTEM_FLAGS = (
    ("fiber-loss-db-km", "fiber_loss_db_km", float, "fiber loss coefficient (dB/km)"),
    ("distance-km", "distance_km", float, "total distance between the parties (km)"),
    ("det-efficiency", "det_efficiency", float, "detector efficiency (probability)"),
    ("dark-rate", "dark_rate", float, "dark count probability per pulse per detector"),
    ("misalignment", "misalignment", float, "optical misalignment error probability"),
    ("ec-efficiency", "ec_efficiency", float, "error-correction inefficiency (>= 1)"),
    ("total-pulses", "total_pulses", float, "total number of pulse pairs N"),
    ("eps-sec", "eps_sec", float, "secrecy failure probability"),
    ("eps-cor", "eps_cor", float, "correctness failure probability"),
    ("phi-tol", "phi_tol", float, "phase-error abort tolerance"),
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--out", type=Path, help="output CSV path")
    parser.add_argument("--seed", type=int, help="optimizer seed (64-bit)")
    parser.add_argument("--protocol", choices=("p1", "p2"), help="protocol variant")
    parser.add_argument("--threads", type=int, help="concurrent optimizer workers")
    parser.add_argument("--restarts", type=int, help="local-search restarts per point")
    for flag, _, ftype, help_text in _SYSTEM_FLAGS:
        parser.add_argument(f"--{flag}", type=ftype, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfqkd",
        description="Finite-key secret-key rates for coherent-state twin-field QKD",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rate = sub.add_parser("rate", help="evaluate one operating point")
    _add_common(rate)
    rate.add_argument("--no-optimize", action="store_true", help="use explicit --mu/--p-z parameters")
    rate.add_argument("--mu", type=float, help="signal intensity")
    rate.add_argument("--p-z", type=float, help="key-basis probability")
    rate.add_argument("--nu", type=float, help="decoy intensity nu")
    rate.add_argument("--omega", type=float, help="decoy intensity omega")
    rate.add_argument("--p-nu", type=float, help="probability of intensity nu")
    rate.add_argument("--p-omega", type=float, help="probability of intensity omega")

    swp = sub.add_parser("sweep", help="optimized rate along a grid")
    _add_common(swp)
    swp.add_argument("--axis", choices=("distance", "pulses"), help="sweep axis")
    swp.add_argument(
        "--grid",
        help="comma list ('100,200,300') or range 'start:stop:step' of axis values",
    )
    swp.add_argument("--no-plot", action="store_true", help="skip the figure")
    swp.add_argument("--no-warm-start", action="store_true", help="optimize every point cold")

    cmp_b = sub.add_parser("compare-bounds", help="bound-comparison tables")
    cmp_b.add_argument("--out-dir", type=Path, default=Path("."), help="directory for the CSV tables")
    cmp_b.add_argument("--eps", type=float, default=1e-10, help="failure probability")
    cmp_b.add_argument("--x-max", type=int, default=10_000, help="largest observed value")
    cmp_b.add_argument("--x-step", type=int, default=1, help="observed-value stride")
    cmp_b.add_argument("--sample-size", type=float, default=1e6, help="remaining-string size n")
    cmp_b.add_argument("--lambda-k", type=float, default=0.15, help="observed sample rate")
    cmp_b.add_argument("--k-points", type=int, default=50, help="points on the k grid")
    cmp_b.add_argument("--no-plot", action="store_true", help="skip the figures")

    val = sub.add_parser("validate", help="exhaustive bound validation")
    val.add_argument("--out", type=Path, help="validation report CSV")
    val.add_argument("--max-total", type=int, default=30, help="largest n+k in the sampling grid")
    val.add_argument(
        "--gamma-scale",
        type=float,
        default=1.0,
        help="multiply solved deviations (negative-control hook; keep at 1)",
    )
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    if getattr(args, "config", None) is not None:
        cfg = RunConfig.from_file(args.config)
    else:
        cfg = RunConfig()
    updates = {}
    for flag, field_name, _, _ in _SYSTEM_FLAGS:
        value = getattr(args, field_name, None)
        if value is not None:
            updates[field_name] = value
    for name in ("protocol", "seed", "threads", "restarts"):
        value = getattr(args, name, None)
        if value is not None:
            updates[name] = value
    if getattr(args, "out", None) is not None:
        updates["out"] = str(args.out)
    if getattr(args, "no_plot", False):
        updates["plot"] = False
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.9e}"
    return str(value)


def _params_columns(params, protocol: str) -> dict:
    columns = {"mu": params.mu, "p_z": params.p_z}
    if protocol == "p2" and params.decoy is not None:
        d = params.decoy
        columns.update(nu=d.nu, omega=d.omega, p_nu=d.p_nu, p_omega=d.p_omega, p_vac=d.p_vac)
    else:
        columns.update(nu=None, omega=None, p_nu=None, p_omega=None, p_vac=None)
    return columns


def cmd_rate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    system = cfg.system_config()
    budget = cfg.security_budget()
    explicit = {}
    for name in ("mu", "p_z", "nu", "omega", "p_nu", "p_omega"):
        value = getattr(args, name, None)
        if value is not None:
            explicit[name] = value
    if explicit or args.no_optimize:
        merged = dict(cfg.params or {})
        merged.update(explicit)
        cfg = dataclasses.replace(cfg, params=merged, optimize=False)
    if cfg.optimize:
        params, result = optimize(
            system,
            cfg.protocol,
            budget,
            seed=cfg.seed,
            restarts=cfg.restarts,
            threads=cfg.threads,
            phi_tol=cfg.phi_tol,
        )
    else:
        params = cfg.protocol_params()
        if cfg.protocol == "p1":
            result = evaluate_p1(system, params, budget, cfg.phi_tol)
        else:
            result = evaluate_p2(system, params, budget, cfg.phi_tol)
    print(f"protocol            {cfg.protocol}")
    print(f"distance_km         {system.distance_km:g}")
    print(f"total_pulses        {system.total_pulses:g}")
    print(f"secret_key_bits     {result.ell:.0f}")
    print(f"rate_per_pulse      {result.rate:.9e}")
    print(f"phi_z               {_fmt(result.phi_z)}")
    print(f"leak_ec_bits        {_fmt(result.leak_ec)}")
    print(f"aborted             {result.aborted}")
    if result.diagnostics.get("abort_reason"):
        print(f"abort_reason        {result.diagnostics['abort_reason']}")
    print(f"plob_per_pulse      {plob_bound(system):.9e}")
    for key, value in _params_columns(params, cfg.protocol).items():
        if value is not None:
            print(f"param_{key:<14}{value:.6g}")
    if cfg.out:
        row = {
            "distance_km": system.distance_km,
            "total_pulses": system.total_pulses,
            "rate_per_pulse": result.rate,
            "ell_bits": result.ell,
            "phi_z": result.phi_z,
            "leak_ec_bits": result.leak_ec,
            "plob_per_pulse": plob_bound(system),
            "aborted": result.aborted,
            **_params_columns(params, cfg.protocol),
        }
        with open(cfg.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(row.keys())
            writer.writerow([_fmt(v) for v in row.values()])
        print(f"wrote {cfg.out}")
    return 0


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("grid", f"range form is start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("grid", "step must be positive")
        values = list(np.arange(start, stop + step / 2, step))
        return [float(v) for v in values]
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError("grid", f"not a number list: {text!r}") from exc


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if args.axis is not None:
        cfg = dataclasses.replace(cfg, sweep_axis=args.axis)
    if args.grid is not None:
        cfg = dataclasses.replace(cfg, sweep_grid=_parse_grid(args.grid))
    if not cfg.sweep_grid:
        raise ConfigError("sweep_grid", "must be non-empty")
    system = cfg.system_config()
    budget = cfg.security_budget()
    points = run_sweep(
        system,
        cfg.sweep_axis,
        cfg.sweep_grid,
        cfg.protocol,
        budget,
        seed=cfg.seed,
        restarts=cfg.restarts,
        threads=cfg.threads,
        warm_start=not getattr(args, "no_warm_start", False),
        phi_tol=cfg.phi_tol,
    )
    out = Path(cfg.out) if cfg.out else Path(f"sweep_{cfg.protocol}_{cfg.sweep_axis}.csv")
    axis_column = "distance_km" if cfg.sweep_axis == "distance" else "total_pulses"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [axis_column, "rate_per_pulse", "ell_bits", "phi_z", "plob_per_pulse", "aborted",
                  "mu", "p_z", "nu", "omega", "p_nu", "p_omega", "p_vac"]
        writer.writerow(header)
        for pt in points:
            cols = _params_columns(pt.params, cfg.protocol)
            writer.writerow(
                [_fmt(pt.axis_value), _fmt(pt.result.rate), _fmt(pt.result.ell),
                 _fmt(pt.result.phi_z), _fmt(pt.plob), _fmt(pt.result.aborted)]
                + [_fmt(cols[k]) for k in ("mu", "p_z", "nu", "omega", "p_nu", "p_omega", "p_vac")]
            )
    print(f"wrote {out}")
    for pt in points:
        status = "aborted" if pt.result.aborted else f"rate {pt.result.rate:.3e}"
        print(f"  {axis_column}={pt.axis_value:g}: {status}")
    if cfg.plot:
        from .plots import save_sweep_figure

        fig_path = out.with_suffix(".png")
        save_sweep_figure(points, cfg.sweep_axis, fig_path, cfg.protocol)
        print(f"wrote {fig_path}")
    return 0


def cmd_compare_bounds(args: argparse.Namespace) -> int:
    eps = args.eps
    out_dir = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    interval_rows = []
    for x in range(0, args.x_max + 1, args.x_step):
        xf = float(x)
        cv_lower = expected_lower(xf, eps)
        cv_upper = expected_upper(xf, eps)
        g_lower, g_upper = baseline_gaussian(xf, eps)
        c_lower, c_upper = baseline_curty(xf)
        interval_rows.append(
            {
                "x": xf,
                "chernoff_variant_lower": cv_lower,
                "chernoff_variant_upper": cv_upper,
                "gaussian_lower": g_lower,
                "gaussian_upper": g_upper,
                "large_deviation_lower": c_lower,
                "large_deviation_upper": c_upper,
            }
        )
    table1 = out_dir / "expected_value_bounds.csv"
    with open(table1, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(interval_rows[0].keys())
        for row in interval_rows:
            writer.writerow([_fmt(v) for v in row.values()])
    table2 = out_dir / "expected_value_differences.csv"
    with open(table2, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["x", "chernoff_variant_upper_minus_x", "chernoff_variant_x_minus_lower",
             "gaussian_upper_minus_x", "gaussian_x_minus_lower",
             "large_deviation_upper_minus_x", "large_deviation_x_minus_lower"]
        )
        for row in interval_rows:
            writer.writerow(
                [_fmt(row["x"]),
                 _fmt(row["chernoff_variant_upper"] - row["x"]),
                 _fmt(row["x"] - row["chernoff_variant_lower"]),
                 _fmt(row["gaussian_upper"] - row["x"]),
                 _fmt(row["x"] - row["gaussian_lower"]),
                 _fmt(row["large_deviation_upper"] - row["x"]),
                 _fmt(row["x"] - row["large_deviation_lower"])]
            )
    n = args.sample_size
    lam = args.lambda_k
    k_grid = np.logspace(3, 7, args.k_points)
    sampling_rows = []
    for k in k_grid:
        exact = sampling_gamma_upper(n, k, lam, eps).value
        fung = baseline_sampling_fung(n, k, lam, eps).value
        try:
            analytic = baseline_sampling_analytic(n, k, lam, eps)
        except DomainError:
            analytic = None
        lower_sol = sampling_gamma_lower(n, k, lam, eps)
        sampling_rows.append(
            {
                "k": float(k),
                "gamma_exact": exact,
                "gamma_fung": fung,
                "gamma_analytic": analytic,
                "gamma_lower": lower_sol.value if lower_sol is not None else None,
            }
        )
    table3 = out_dir / "sampling_gamma_comparison.csv"
    with open(table3, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "gamma_exact", "gamma_fung", "gamma_analytic", "gamma_lower"])
        for row in sampling_rows:
            writer.writerow([_fmt(row[c]) for c in ("k", "gamma_exact", "gamma_fung", "gamma_analytic", "gamma_lower")])
    print(f"wrote {table1}")
    print(f"wrote {table2}")
    print(f"wrote {table3}")
    if not args.no_plot:
        from .plots import save_difference_figure, save_interval_figure, save_sampling_figure

        save_interval_figure(interval_rows, out_dir / "expected_value_bounds.png")
        save_difference_figure(interval_rows, out_dir / "expected_value_differences.png")
        save_sampling_figure(sampling_rows, out_dir / "sampling_gamma_comparison.png")
        print(f"wrote figures in {out_dir}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    records = validate_sampling_grid(max_total=args.max_total, gamma_scale=args.gamma_scale)
    records += validate_chernoff_grid(delta_scale=args.gamma_scale)
    violations = [r for r in records if not r.passed]
    if args.out is not None:
        write_validation_report(records, args.out)
        print(f"wrote {args.out}")
    print(f"checked {len(records)} scenarios, {len(violations)} violations")
    for r in violations[:20]:
        print(f"  VIOLATION {r.scenario}: tail mass {r.tail_mass:.6e} > eps {r.eps:g}")
    return 1 if violations else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "rate": cmd_rate,
        "sweep": cmd_sweep,
        "compare-bounds": cmd_compare_bounds,
        "validate": cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
