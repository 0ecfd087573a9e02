"""Command-line entry point.

Subcommands::

    recoverysim simulate  --config run.cfg --out scenarios.csv
    recoverysim calibrate --scenarios scenarios.csv --model probit --lower -0.35
    recoverysim risk      --scenarios scenarios.csv --lower -0.2
    recoverysim sweep     --scenarios scenarios.csv --thresholds -0.35,-0.25,-0.15
    recoverysim figdata   --scenarios scenarios.csv --out figs/

Exit status: 0 success, 1 usage or configuration error, 2 data, calibration
or runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .calibration import (
    CalibrationError,
    CalibrationWindow,
    FitMode,
    bin_scenarios,
    calibrate,
    filter_scenarios,
    fit_structural,
)
from .config import ConfigError, RunConfig, load_config
from .csvio import (
    CsvFormatError,
    read_models,
    read_scenarios,
    write_calibration,
    write_models,
    write_risk,
    write_scenarios,
    write_table,
)
from .gaussmath import std_normal_quantile
from .portfolio import SimulationBudgetError, run_simulation
from .recovery import clamp_pd, structural_expected_loss
from .risk import MODEL_NAMES, SweepRow, empirical_report, fit_model, model_losses, risk_report, risk_sweep

log = logging.getLogger("recoverysim")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

# options whose values may start with '-'; argparse would take them for flags
_SIGNED_OPTS = ("--lower", "--upper", "--thresholds")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _thresholds(text: str) -> tuple:
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty threshold list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="recoverysim", description="Recovery-rate model risk on simulated credit portfolios.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run the Monte Carlo and write scenarios.csv")
    s.add_argument("--config", type=Path)
    s.add_argument("--out", type=Path, help="default: <output_dir>/scenarios.csv")
    s.add_argument("--seed", type=int, help="overrides the config seed")
    s.add_argument("--workers", type=int, help="worker processes (0 = all cores)")

    def data_cmd(name, help_):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--scenarios", type=Path, required=True)
        c.add_argument("--config", type=Path, help="supplies window, alpha, thresholds and mode defaults")
        c.add_argument("--upper", type=float)
        c.add_argument("--bin-width", type=float)
        c.add_argument("--mode", choices=[m.value for m in FitMode])
        return c

    c = data_cmd("calibrate", "fit recovery models on one window")
    c.add_argument("--model", default="all", help="constant, probit, structural or all")
    c.add_argument("--lower", type=float)
    c.add_argument("--out", type=Path, help="calibration.csv (default: <output_dir>/calibration.csv)")
    c.add_argument("--model-out", type=Path, help="also write fitted parameters as model.csv")

    r = data_cmd("risk", "VaR/ETL of models fitted on one window")
    r.add_argument("--model", default="all")
    r.add_argument("--lower", type=float)
    r.add_argument("--alpha", type=float)
    r.add_argument("--model-file", type=Path, help="use these fitted models instead of calibrating")
    r.add_argument("--out", type=Path, help="default: <output_dir>/risk.csv")

    w = data_cmd("sweep", "VaR/ETL ratios over a grid of lower thresholds")
    w.add_argument("--model", default="all")
    w.add_argument("--thresholds", type=_thresholds)
    w.add_argument("--alpha", type=float)
    w.add_argument("--out", type=Path, help="default: <output_dir>/risk.csv")

    f = data_cmd("figdata", "emit the CSV series behind the four figures")
    f.add_argument("--lower", type=float)
    f.add_argument("--thresholds", type=_thresholds)
    f.add_argument("--alpha", type=float)
    f.add_argument("--out", type=Path, help="output directory (default: <output_dir>)")
    return p


def _glue_signed(argv: Sequence[str]) -> list[str]:
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _SIGNED_OPTS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


# --- helpers ---------------------------------------------------------------


def _config(path: Optional[Path]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        return load_config(path)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except ConfigError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load(path: Path, cfg: RunConfig):
    try:
        return read_scenarios(path, cfg.params)
    except OSError as exc:
        raise DataError(f"cannot read scenarios {path}: {exc.strerror or exc}") from None
    except CsvFormatError as exc:
        raise DataError(str(exc)) from None


def _window(args, cfg: RunConfig) -> CalibrationWindow:
    w = cfg.window
    lower = getattr(args, "lower", None)
    try:
        return CalibrationWindow(
            w.lower if lower is None else lower,
            w.upper if args.upper is None else args.upper,
            w.bin_width if args.bin_width is None else args.bin_width,
            w.min_bin_count,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _models(text: str) -> tuple:
    if text.strip().lower() == "all":
        return MODEL_NAMES
    names = tuple(n.strip().lower() for n in text.split(",") if n.strip())
    bad = [n for n in names if n not in MODEL_NAMES]
    if bad or not names:
        raise UsageError(f"unknown model {', '.join(bad) or text!r}; choose from {', '.join(MODEL_NAMES)} or all")
    return names


def _alpha(args, cfg: RunConfig) -> float:
    alpha = cfg.alpha if args.alpha is None else args.alpha
    if not 0.0 < alpha < 1.0:
        raise UsageError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _mode(args, cfg: RunConfig) -> FitMode:
    return cfg.mode if args.mode is None else FitMode(args.mode)


def _baseline(scen, alpha):
    try:
        return empirical_report(scen, alpha)
    except ValueError as exc:
        raise DataError(f"empirical baseline: {exc}") from None


# --- subcommands -----------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _config(args.config)
    params = cfg.params
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise UsageError("--seed must fit in 64 unsigned bits")
        params = replace(params, seed=args.seed)
    workers = cfg.workers if args.workers is None else args.workers
    if workers < 0:
        raise UsageError("--workers must be nonnegative")
    out = args.out or cfg.output_dir / "scenarios.csv"
    t0 = time.perf_counter()
    try:
        scen = run_simulation(params, workers=workers or None)
    except SimulationBudgetError as exc:
        raise DataError(str(exc)) from None
    runtime = time.perf_counter() - t0
    write_scenarios(out, scen)
    print(f"scenarios: {len(scen)}")
    print(f"runtime_s: {runtime:.2f}")
    print(f"mean_p_d: {float(np.mean(scen.p_d)):.6g}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _config(args.config)
    window = _window(args, cfg)
    names = _models(args.model)
    mode = _mode(args, cfg)
    scen = _load(args.scenarios, cfg)
    try:
        results = [calibrate(scen, name, window, mode) for name in names]
    except CalibrationError as exc:
        raise DataError(str(exc)) from None
    out = args.out or cfg.output_dir / "calibration.csv"
    write_calibration(out, results)
    if args.model_out is not None:
        write_models(args.model_out, [r.model for r in results])
    for r in results:
        p1, p2 = r.model.params
        tail = "" if p2 is None else f" param2={p2:.6g}"
        print(f"{r.model.name}: param1={p1:.6g}{tail} n_records={r.n_records} sse={r.sse:.4g}")
    return EXIT_OK


def cmd_risk(args) -> int:
    cfg = _config(args.config)
    alpha = _alpha(args, cfg)
    window = _window(args, cfg)
    mode = _mode(args, cfg)
    scen = _load(args.scenarios, cfg)
    base = _baseline(scen, alpha)
    rows = [SweepRow("empirical", None, alpha, base.var, base.etl, None, None, "ok")]
    if args.model_file is not None:
        try:
            fitted = read_models(args.model_file)
        except OSError as exc:
            raise DataError(f"cannot read models {args.model_file}: {exc.strerror or exc}") from None
        except CsvFormatError as exc:
            raise DataError(str(exc)) from None
        for model in fitted:
            rep = risk_report(model_losses(scen, model), alpha, base)
            rows.append(SweepRow(model.name, None, alpha, rep.var, rep.etl, rep.var_ratio, rep.etl_ratio, "ok"))
    else:
        for name in _models(args.model):
            try:
                model = fit_model(scen, name, window, mode)
            except CalibrationError:
                rows.append(SweepRow(name, window.lower, alpha, None, None, None, None, "calibration_error"))
                continue
            rep = risk_report(model_losses(scen, model), alpha, base)
            rows.append(SweepRow(name, window.lower, alpha, rep.var, rep.etl, rep.var_ratio, rep.etl_ratio, "ok"))
    write_risk(args.out or cfg.output_dir / "risk.csv", rows)
    _print_rows(rows)
    return EXIT_OK


def _sweep(args, cfg, scen):
    alpha = _alpha(args, cfg)
    window = _window(args, cfg)
    thresholds = args.thresholds if args.thresholds is not None else cfg.lower_thresholds
    if list(thresholds) != sorted(thresholds) or any(t >= window.upper for t in thresholds):
        raise UsageError("thresholds must ascend and stay below the upper edge")
    _baseline(scen, alpha)
    return risk_sweep(scen, thresholds, alpha, window, _models(args.model), _mode(args, cfg)), thresholds


def cmd_sweep(args) -> int:
    cfg = _config(args.config)
    # validate flags before paying for the file read
    _alpha(args, cfg)
    _models(args.model)
    scen = _load(args.scenarios, cfg)
    rows, _ = _sweep(args, cfg, scen)
    write_risk(args.out or cfg.output_dir / "risk.csv", rows)
    _print_rows(rows)
    return EXIT_OK


def _print_rows(rows):
    for r in rows:
        if r.status != "ok":
            print(f"{r.model:<10} lower={r.lower_threshold:+.2f}  {r.status}")
        elif r.var_ratio is None:
            print(f"{r.model:<10} var={r.var:.5g} etl={r.etl:.5g}")
        else:
            where = "" if r.lower_threshold is None else f" lower={r.lower_threshold:+.2f}"
            print(f"{r.model:<10}{where} var_ratio={r.var_ratio:.4f} etl_ratio={r.etl_ratio:.4f}")


def figure_tables(scen, window: CalibrationWindow, sweep_rows, thresholds, mode=FitMode.LOSS_SPACE):
    """Rows for the four figure files, as ``{file name: (header, rows)}``."""
    # fig1: per-scenario b values, then per-bin means
    filtered = filter_scenarios(scen, window)
    rec = filtered.mean_recovery
    inside = (rec > 0.0) & (rec < 1.0)
    fig1 = [("scenario", x, std_normal_quantile(float(r)), int(n))
            for x, r, n in zip(filtered.x_m[inside], rec[inside], filtered.n_defaults[inside])]
    for b in bin_scenarios(filtered, window):
        fig1.append(("bin", b.x_center, b.b_value, b.count))

    # fig2: loss against default fraction, with the structural curve fitted on the window
    B = fit_structural(filtered, mode).B
    defaulted = scen.subset(scen.n_defaults > 0)
    fit = np.atleast_1d(structural_expected_loss(clamp_pd(defaulted.p_d), B))
    fig2 = list(zip(defaulted.p_d, defaulted.mean_loss, fit))

    wide = {"var": {}, "etl": {}}
    for r in sweep_rows:
        if r.lower_threshold is None:
            continue
        wide["var"][(r.lower_threshold, r.model)] = r.var_ratio
        wide["etl"][(r.lower_threshold, r.model)] = r.etl_ratio
    sweep_header = ["lower_threshold", *MODEL_NAMES]

    def table(kind):
        return [(t, *(wide[kind].get((t, m)) for m in MODEL_NAMES)) for t in thresholds]

    return {
        "fig1_b_vs_xm.csv": (["kind", "x_m", "b_value", "count"], fig1),
        "fig2_loss_vs_pd.csv": (["p_d", "mean_loss", "structural_fit_loss"], fig2),
        "fig3_var_sweep.csv": (sweep_header, table("var")),
        "fig4_etl_sweep.csv": (sweep_header, table("etl")),
    }


def cmd_figdata(args) -> int:
    cfg = _config(args.config)
    _alpha(args, cfg)
    window = _window(args, cfg)
    args.model = "all"
    scen = _load(args.scenarios, cfg)
    rows, thresholds = _sweep(args, cfg, scen)
    try:
        tables = figure_tables(scen, window, rows, thresholds, _mode(args, cfg))
    except CalibrationError as exc:
        raise DataError(str(exc)) from None
    out_dir = args.out or cfg.output_dir
    for name, (header, body) in tables.items():
        write_table(out_dir / name, header, body)
        print(f"wrote {out_dir / name} ({len(body)} rows)")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "risk": cmd_risk,
    "sweep": cmd_sweep,
    "figdata": cmd_figdata,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_glue_signed(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"recoverysim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CalibrationError) as exc:
        print(f"recoverysim: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"recoverysim: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
