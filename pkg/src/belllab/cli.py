"""Batch front door.

Subcommands: ``oracle`` (analytic report), ``simulate`` (run a configured
protocol), ``scan`` (sweep one block offset into a CSV), ``reproduce`` (the
built-in preset showing an apparent S' ≈ 2.072 from a strictly local model),
and ``verify`` (the invariant suite).

Exit codes: 0 success, 1 operational error (bad config, I/O, usage), 2
verification failure. A physics verdict — S above or below 2 — is report
content, never an exit status.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, parse_config_file
from .errors import PolicyLookupError
from .estimator import InsufficientDataError
from .oracle import QuadratureError, UnsupportedPolicyError
from .presets import DEFAULT_REPRODUCE_SEED, DEFAULT_REPRODUCE_TRIALS
from .runner import (
    SCAN_PARAMS,
    oracle_report,
    reproduce_config,
    scan_csv_text,
    scan_rows,
    simulate_report,
    write_report,
    write_scan_csv,
)
from .verify import run_verification

__all__ = ["build_parser", "entrypoint", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; here 2 is reserved for
    # verification failures, so usage problems become operational errors (1).
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="belllab",
        description="CHSH Bell-test laboratory for local hidden-variable models "
        "with rotation-angle errors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required: bool):
        p.add_argument("--config", required=config_required, help="path to a JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output path (report JSON / scan CSV)")
        p.add_argument("--figures", action="store_true",
                       help="render PNG figures next to the output file")

    p_oracle = sub.add_parser("oracle", help="analytic report, no simulation")
    add_common(p_oracle, config_required=True)
    p_oracle.set_defaults(func=_cmd_oracle)

    p_sim = sub.add_parser("simulate", help="run the configured protocol")
    add_common(p_sim, config_required=True)
    p_sim.add_argument("--trials", type=int, default=None,
                       help="override trials (per pair for sequenced, total otherwise)")
    p_sim.add_argument("--trial-log", default=None, help="override the trial-log path")
    p_sim.add_argument("--workers", type=int, default=1, help="worker count (output-invariant)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_scan = sub.add_parser("scan", help="sweep one block offset, CSV output")
    add_common(p_scan, config_required=False)
    p_scan.add_argument("--param", required=True, choices=SCAN_PARAMS)
    p_scan.add_argument("--from", dest="start", type=float, required=True, metavar="RAD")
    p_scan.add_argument("--to", dest="stop", type=float, required=True, metavar="RAD")
    p_scan.add_argument("--steps", type=int, required=True)
    p_scan.add_argument("--trials", type=int, default=None,
                        help="Monte Carlo trials per pair per step (default 100000)")
    p_scan.set_defaults(func=_cmd_scan)

    p_rep = sub.add_parser("reproduce", help="built-in apparent-violation preset")
    p_rep.add_argument("--trials", type=int, default=DEFAULT_REPRODUCE_TRIALS,
                       help="trials per block")
    p_rep.add_argument("--seed", type=int, default=DEFAULT_REPRODUCE_SEED)
    p_rep.add_argument("--out", default=None, help="report path")
    p_rep.add_argument("--trial-log", default=None)
    p_rep.add_argument("--workers", type=int, default=1)
    p_rep.add_argument("--figures", action="store_true")
    p_rep.set_defaults(func=_cmd_reproduce)

    p_ver = sub.add_parser("verify", help="run the invariant suite")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--samples", type=int, default=100)
    p_ver.set_defaults(func=_cmd_verify)

    return parser


def _apply_overrides(cfg: RunConfig, args, trials: bool = False, trial_log: bool = False) -> RunConfig:
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "out", None):
        cfg = replace(cfg, report_path=args.out)
    if trials and args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        cfg = cfg.with_trials(args.trials)
    if trial_log and getattr(args, "trial_log", None):
        cfg = replace(cfg, trial_log_path=args.trial_log)
    if args.figures:
        cfg = replace(cfg, figures=True)
    return cfg


def _figure_path(out_path: str, suffix: str) -> Path:
    base = Path(out_path)
    return base.with_name(base.stem + suffix)


def _emit_report(report: dict, cfg: RunConfig) -> list[str]:
    """Write or print the report; render figures if asked. Returns figure paths."""
    figures: list[str] = []
    if cfg.figures and not cfg.report_path:
        raise ConfigError("--figures needs an --out (or config output.report) path")
    if cfg.report_path:
        write_report(report, cfg.report_path)
        if cfg.figures:
            from .figures import render_correlator_figure

            fig_path = _figure_path(cfg.report_path, "_correlators.png")
            render_correlator_figure(report, fig_path)
            figures.append(str(fig_path))
    else:
        print(json.dumps(report, indent=2))
    return figures


def _print_summary(report: dict, cfg: RunConfig, figures: list[str]) -> None:
    c = report["chsh"]
    if c["s"] is not None:
        line = f"S' = {c['s']:.4f} ± {c['se']:.4f}   oracle S' = {c['oracle_s']:.4f}"
        if c["significance_sigma"] is not None and c["exceeds_2"]:
            line += f"   exceeds 2 by {c['significance_sigma']:.1f}σ"
        elif not c["exceeds_2"]:
            line += "   within the bound"
    else:
        verdict = "exceeds 2" if c["exceeds_2"] else "within the bound"
        line = f"oracle S' = {c['oracle_s']:.4f}   {verdict}"
    print(line, file=sys.stderr)
    if cfg.report_path:
        print(f"report: {cfg.report_path}", file=sys.stderr)
    if cfg.trial_log_path:
        print(f"trial log: {cfg.trial_log_path}", file=sys.stderr)
    for f in figures:
        print(f"figure: {f}", file=sys.stderr)


def _cmd_oracle(args) -> int:
    cfg = _apply_overrides(parse_config_file(args.config), args)
    report = oracle_report(cfg)
    figures = _emit_report(report, cfg)
    _print_summary(report, cfg, figures)
    return 0


def _run_simulation(cfg: RunConfig, workers: int) -> int:
    report, log = simulate_report(cfg, workers=workers)
    if cfg.trial_log_path:
        log.write_csv(cfg.trial_log_path)
    figures = _emit_report(report, cfg)
    _print_summary(report, cfg, figures)
    return 0


def _cmd_simulate(args) -> int:
    cfg = parse_config_file(args.config)
    cfg = _apply_overrides(cfg, args, trials=True, trial_log=True)
    return _run_simulation(cfg, args.workers)


def _cmd_reproduce(args) -> int:
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    cfg = reproduce_config(
        trials=args.trials,
        seed=args.seed,
        report_path=args.out,
        trial_log_path=args.trial_log,
        figures=args.figures,
    )
    return _run_simulation(cfg, args.workers)


def _cmd_scan(args) -> int:
    if args.config:
        cfg = parse_config_file(args.config)
    else:
        cfg = reproduce_config(trials=100_000)
    cfg = _apply_overrides(cfg, args, trials=True)
    rows = scan_rows(cfg, args.param, args.start, args.stop, args.steps)
    if cfg.figures and not args.out:
        raise ConfigError("--figures needs an --out path for the scan CSV")
    if args.out:
        write_scan_csv(rows, args.param, args.out)
        print(f"scan: {args.out}", file=sys.stderr)
        if cfg.figures:
            from .figures import render_scan_figure

            fig_path = _figure_path(args.out, ".png")
            render_scan_figure(rows, args.param, fig_path)
            print(f"figure: {fig_path}", file=sys.stderr)
    else:
        print(scan_csv_text(rows, args.param), end="")
    return 0


def _cmd_verify(args) -> int:
    if args.samples < 1:
        raise ConfigError("--samples must be >= 1")
    summary = run_verification(seed=args.seed, samples=args.samples)
    for line in summary.lines():
        print(line)
    return 0 if summary.passed else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (
        ConfigError,
        InsufficientDataError,
        PolicyLookupError,
        QuadratureError,
        UnsupportedPolicyError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
