"""Command-line front end: ``inhchannel {eval,fit,compare-los,simulate}``.

Exit codes: 0 success, 2 usage, 3 configuration, 4 degenerate design or failed
fit, 5 input/output.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    DataFormatError,
    DegenerateDesignError,
    DomainError,
    FitFailureError,
)
from .fitting import (
    SampleSet,
    fit_abg,
    fit_ci,
    fit_cif,
    fit_dual,
    rank_los_models,
    read_los_csv,
    read_samples_csv,
    write_residuals_csv,
)
from .los import CURVE_COLUMNS, LosModel, p_los, sample_los
from .pathloss import Frequency, Scenario, fspl, path_loss, sample_shadow_fading
from .penetration import MaterialLossTable, default_materials
from .registry import FAMILIES, SLOPES, REGISTRY_ENV_VAR, resolve_registry
from .simulator import (
    DropConfig,
    FloorPlan,
    cdf,
    empty_plan,
    load_json,
    run_drop,
    write_cdf_csv,
    write_links_csv,
    write_samples_csv,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DEGENERATE = 4
EXIT_IO = 5


class UsageError(Exception):
    pass


def _print_config(stream, **items):
    for key, value in items.items():
        stream.write(f"# {key}: {value}\n")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    try:
        return open(path, "w", newline="", encoding="utf-8"), True
    except OSError as exc:
        raise DataFormatError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def _distances(args) -> np.ndarray:
    if args.d_range is not None:
        start, stop, step = args.d_range
        if not step > 0 or stop < start:
            raise UsageError("--d-range needs START <= STOP and STEP > 0")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(count)
    if args.d_m is None:
        raise UsageError("one of --d-m or --d-range is required")
    return np.asarray(args.d_m, dtype=np.float64)


def cmd_eval(args) -> int:
    registry = resolve_registry(args.registry)
    scenario = Scenario.of(args.env, args.state)
    params = registry.require(scenario, args.family, args.slope)
    d = _distances(args)
    if np.any(d < 1.0):
        raise UsageError("distances must be >= 1 m")
    f = Frequency.from_ghz(args.f_ghz)
    _print_config(
        sys.stdout,
        command="eval",
        scenario=f"{args.env} {args.state}",
        model=f"{args.slope}-slope {args.family}",
        params=params,
        f_ghz=args.f_ghz,
        with_sf=args.with_sf,
        seed=args.seed if args.with_sf else None,
    )
    pl = np.atleast_1d(path_loss(params, np.full(d.size, f.hz), d))
    fs = fspl(f)
    header = ["d_m", "fspl_db", "pl_db"]
    rows = [[d[i], fs, pl[i]] for i in range(d.size)]
    if args.with_sf:
        rng = np.random.default_rng(args.seed)
        sf = np.atleast_1d(sample_shadow_fading(params.sigma_sf, rng, size=d.size))
        header += ["sf_db", "total_db"]
        for i, r in enumerate(rows):
            r += [sf[i], pl[i] + sf[i]]
    out, close = _open_out(args.out)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.4f}" for v in r])
    finally:
        if close:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def cmd_fit(args) -> int:
    samples = read_samples_csv(args.input)
    if args.env:
        samples = [s for s in samples if s.scenario.environment.value == args.env]
    if args.state:
        samples = [s for s in samples if s.scenario.state.value == args.state]
    if not samples:
        raise DegenerateDesignError("no samples left after filtering")
    data = SampleSet.from_samples(samples)
    _print_config(
        sys.stdout,
        command="fit",
        input=args.input,
        family=args.family,
        slope=args.slope,
        env=args.env,
        state=args.state,
        samples=len(data),
    )
    if args.slope == "dual":
        family = "cif" if args.family in ("ci", "cif") else "abg"
        result = fit_dual(data, family, args.bp_grid)
    else:
        result = {"ci": fit_ci, "cif": fit_cif, "abg": fit_abg}[args.family](data)
    text = result.dumps()
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise DataFormatError(f"cannot write {args.out}: {exc}") from exc
    if args.residuals:
        try:
            write_residuals_csv(result, data, args.residuals)
        except OSError as exc:
            raise DataFormatError(f"cannot write {args.residuals}: {exc}") from exc
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare-los
# ---------------------------------------------------------------------------


def cmd_compare_los(args) -> int:
    if not args.bin_width > 0:
        raise UsageError("--bin-width must be positive")
    if (args.obs is None) == (args.synthetic is None):
        raise UsageError("give exactly one of --obs or --synthetic")
    if args.obs is not None:
        d, los = read_los_csv(args.obs)
        source = args.obs
    else:
        if args.count < 1 or not args.d_max > 0:
            raise UsageError("--count must be >= 1 and --d-max positive")
        rng = np.random.default_rng(args.seed)
        d = rng.uniform(0.0, args.d_max, args.count)
        los = sample_los(args.synthetic, d, rng)
        source = f"synthetic {args.synthetic} (seed {args.seed}, {args.count} observations)"
    _print_config(sys.stdout, command="compare-los", source=source, bin_width_m=args.bin_width)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["model", "mse"])
    for model, mse in rank_los_models((d, los), args.bin_width):
        w.writerow([model.value, f"{mse:.6f}"])
    if args.curves_out:
        d_max = args.curve_max if args.curve_max is not None else max(float(np.max(d)), 1.0)
        n = int(np.floor(d_max / args.curve_step + 1e-9)) + 1
        grid = np.round(np.arange(n) * args.curve_step, 6)
        try:
            with open(args.curves_out, "w", newline="", encoding="utf-8") as fh:
                cw = csv.writer(fh, lineterminator="\n")
                cw.writerow(["d_m", *(CURVE_COLUMNS[m] for m in LosModel)])
                curves = [p_los(m, grid) for m in LosModel]
                for i, x in enumerate(grid):
                    cw.writerow([f"{x:.2f}", *(f"{c[i]:.6f}" for c in curves)])
        except OSError as exc:
            raise DataFormatError(f"cannot write {args.curves_out}: {exc}") from exc
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _load_doc(path):
    try:
        return load_json(path)
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON: {exc}") from exc


def cmd_simulate(args) -> int:
    config_doc = _load_doc(args.config)
    plan_doc = _load_doc(args.plan) if args.plan else None
    try:
        config = DropConfig.from_dict(config_doc)
        plan = FloorPlan.from_dict(plan_doc) if plan_doc is not None else empty_plan()
        materials = MaterialLossTable.load(args.materials) if args.materials else default_materials()
    except (DomainError, OSError) as exc:
        raise ConfigurationError(str(exc)) from exc
    registry = resolve_registry(args.registry)
    _print_config(
        sys.stdout,
        command="simulate",
        config=json.dumps(config.to_dict(), sort_keys=True),
        plan=f"{len(plan.walls)} walls, bounds {list(plan.bounds)}",
        out=args.out,
    )
    try:
        result = run_drop(config, plan, registry, materials)
    except DomainError as exc:
        raise ConfigurationError(str(exc)) from exc
    prefix = args.out
    try:
        Path(prefix).parent.mkdir(parents=True, exist_ok=True)
        write_links_csv(result, f"{prefix}_links.csv")
        write_cdf_csv(*cdf(result, "total_db"), f"{prefix}_cdf.csv")
        write_samples_csv(result, f"{prefix}_samples.csv")
    except OSError as exc:
        raise DataFormatError(f"cannot write outputs under {prefix}: {exc}") from exc
    s = result.summary()
    sys.stdout.write(
        f"links={s['links']} los_fraction={s['los_fraction']:.4f} "
        f"median_total_db={s['median_total_db']:.2f} p95_total_db={s['p95_total_db']:.2f}\n"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inhchannel",
        description="Indoor office / shopping-mall large-scale channel models.",
        epilog=f"The built-in parameter table can be replaced with --registry or ${REGISTRY_ENV_VAR}.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a path loss model over distances")
    p.add_argument("--env", choices=["office", "mall"], required=True)
    p.add_argument("--state", choices=["los", "nlos"], required=True)
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--slope", choices=SLOPES, default="single")
    p.add_argument("--f-ghz", type=float, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--d-m", type=float, nargs="+", help="one or more 3D distances in meters")
    g.add_argument("--d-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    p.add_argument("--with-sf", action="store_true", help="add a shadow fading draw per row")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--registry")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fit", help="fit model parameters to f_ghz,d_m,pl_db,env,state samples")
    p.add_argument("input")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--slope", choices=SLOPES, default="single")
    p.add_argument("--env", choices=["office", "mall"])
    p.add_argument("--state", choices=["los", "nlos"])
    p.add_argument("--bp-grid", type=float, nargs="+", help="breakpoint candidates in meters (dual only)")
    p.add_argument("--out", help="FitResult JSON path (default: stdout)")
    p.add_argument("--residuals", help="optional residual CSV path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare-los", help="score the LOS probability curves against observations")
    p.add_argument("--obs", help="CSV with d_m,los columns")
    p.add_argument("--synthetic", choices=[m.value for m in LosModel], help="draw observations from this curve")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100_000)
    p.add_argument("--d-max", type=float, default=60.0, help="synthetic distances are uniform on [0, d-max]")
    p.add_argument("--bin-width", type=float, default=1.0)
    p.add_argument("--curves-out", help="CSV path for the model curves")
    p.add_argument("--curve-step", type=float, default=0.1)
    p.add_argument("--curve-max", type=float)
    p.set_defaults(func=cmd_compare_los)

    p = sub.add_parser("simulate", help="run a Monte-Carlo link drop")
    p.add_argument("config", help="DropConfig JSON")
    p.add_argument("--plan", help="FloorPlan JSON (default: empty 120 x 50 m hall)")
    p.add_argument("--out", required=True, help="output prefix for _links.csv, _cdf.csv, _samples.csv")
    p.add_argument("--registry")
    p.add_argument("--materials", help="material loss table JSON")
    p.set_defaults(func=cmd_simulate)
    return parser


def _format_warning(message, category, filename, lineno, line=None):
    return f"warning: {message}\n"


def main(argv=None) -> int:
    warnings.formatwarning = _format_warning
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateDesignError, FitFailureError) as exc:
        print(f"degenerate design: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DataFormatError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
