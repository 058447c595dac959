"""Command-line entry point.

Subcommands: simulate, fit, diagnose, replay, ingest.  Every run is fully
determined by its config file and root seed (a ``--seed`` flag overrides
the config); outputs are written atomically so failed commands leave no
partial artifacts.

Exit codes: 0 success (fit: converged), 1 stability refusal, 2 bad
input/config/data, 3 fit did not converge (best-so-far written).
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import serialize as ser
from ._backends import backend_name
from .book import Book, Order, OrderNotFoundError, Side
from .bridge import QuoteRow, replay as run_replay
from .diagnostics import build_report
from .fitting import FitSettings, attach_bootstrap, bootstrap_std_errors, fit_mle
from .ingest import (
    ParseError,
    aggregate_trades,
    fit_lognormal_marks,
    lobster_to_orders,
    parse_binance_trades,
    parse_lobster,
)
from .models import StabilityError, stability_check, stationary_mean_intensity
from .simulate import SimConfig, simulate

EXIT_OK = 0
EXIT_REFUSED = 1
EXIT_BAD_INPUT = 2
EXIT_NOT_CONVERGED = 3


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _override_sim(cfg: SimConfig, seed: int | None, burn_in: float | None = None) -> SimConfig:
    if seed is None and burn_in is None:
        return cfg
    return SimConfig(
        horizon=cfg.horizon,
        seed=cfg.seed if seed is None else seed,
        method=cfg.method,
        max_events=cfg.max_events,
        burn_in=cfg.burn_in if burn_in is None else burn_in,
    )


def cmd_simulate(args) -> int:
    try:
        config = ser.load_run_config(args.config)
        sim_cfg = _override_sim(config.sim, args.seed, args.burn_in)
    except (ValueError, OSError, KeyError) as exc:
        return _fail(f"bad config: {exc}", EXIT_BAD_INPUT)
    out = args.out or config.out_path
    if not out:
        return _fail("no output path (--out flag or io.out)", EXIT_BAD_INPUT)
    args.out = out
    model = config.model
    report = stability_check(model)
    if not report.stable and not args.allow_unstable:
        print(
            f"refusing to simulate: rho(LG) = {report.rho:.12g} >= 1 "
            f"(pass --allow-unstable to override)",
            file=sys.stderr,
        )
        return EXIT_REFUSED
    try:
        stream = simulate(model, sim_cfg)
    except (ValueError, RuntimeError) as exc:
        return _fail(str(exc), EXIT_BAD_INPUT)
    ser.write_events_csv(args.out, stream)
    mean_intensity = None
    if report.stable:
        mean_intensity = [float(x) for x in stationary_mean_intensity(model)]
    counts = stream.counts()
    sidecar = {
        "schema_version": ser.SCHEMA_VERSION,
        "rho_g": report.branching,
        "rho_lg": report.rho,
        "stable": report.stable,
        "mean_intensity": mean_intensity,
        "realized_rate": [float(c) / sim_cfg.horizon for c in counts],
        "n_events": int(len(stream)),
        "horizon": sim_cfg.horizon,
        "seed": sim_cfg.seed,
        "method": sim_cfg.method,
    }
    ser.dump_json(args.out + ".stability.json", sidecar)
    print(
        f"simulated {len(stream)} events over T={sim_cfg.horizon:g} "
        f"(rho={report.rho:.4f}, backend={backend_name()})"
    )
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        config = ser.load_run_config(args.config) if args.config else None
    except (ValueError, OSError) as exc:
        return _fail(f"bad config: {exc}", EXIT_BAD_INPUT)
    fit_cfg = config.fit if config is not None and config.fit is not None else None
    input_path = args.input or (config.input_path if config else None)
    out_path = args.out or (config.out_path if config else None)
    if not input_path or not out_path:
        return _fail("fit needs an input and an output path", EXIT_BAD_INPUT)
    try:
        stream = ser.read_events_csv(input_path, horizon=args.horizon)
    except (ValueError, OSError) as exc:
        return _fail(f"bad input: {exc}", EXIT_BAD_INPUT)
    kernel = args.kernel or (fit_cfg.kernel if fit_cfg else "exponential")
    settings = FitSettings(
        method=args.method or (fit_cfg.settings.method if fit_cfg else "nelder-mead"),
        max_iter=args.max_iter
        if args.max_iter is not None
        else (fit_cfg.settings.max_iter if fit_cfg else 2000),
    )
    try:
        fit = fit_mle(stream, kernel, settings=settings)
    except ValueError as exc:
        return _fail(str(exc), EXIT_BAD_INPUT)
    reps = args.bootstrap or (fit_cfg.bootstrap_reps if fit_cfg else 0) or 0
    if fit.converged and reps:
        seed = args.seed if args.seed is not None else (
            config.sim.seed if config else 0
        )
        boot = bootstrap_std_errors(fit, reps, seed)
        fit = attach_bootstrap(fit, boot)
    ser.dump_json(out_path, ser.fit_result_to_dict(fit))
    print(
        f"loglik={fit.loglik:.6f} nll/event={fit.nll_per_event:.6f} "
        f"aic={fit.aic:.3f} converged={fit.converged}"
    )
    return EXIT_OK if fit.converged else EXIT_NOT_CONVERGED


def cmd_diagnose(args) -> int:
    try:
        config = ser.load_run_config(args.config) if args.config else None
        if args.params:
            model = ser.model_from_dict(ser.load_json(args.params))
        elif config is not None:
            model = config.model
        else:
            return _fail("diagnose needs --params or --config", EXIT_BAD_INPUT)
        input_path = args.input or (config.input_path if config else None)
        out_path = args.out or (config.out_path if config else None)
        if not input_path or not out_path:
            return _fail("diagnose needs an input and an output path", EXIT_BAD_INPUT)
        stream = ser.read_events_csv(input_path, horizon=args.horizon, d=model.d)
    except (ValueError, OSError) as exc:
        return _fail(f"bad input: {exc}", EXIT_BAD_INPUT)
    diag_cfg = config.diagnostics if config is not None else None
    dim = args.dim if args.dim is not None else (diag_cfg.dim if diag_cfg else 0)
    max_lag = (
        args.max_lag
        if args.max_lag is not None
        else (diag_cfg.max_lag if diag_cfg else 20)
    )
    if dim >= model.d:
        return _fail(
            f"dimension {dim} out of range for d={model.d}", EXIT_BAD_INPUT
        )
    try:
        report = build_report(model, stream, dim=dim, max_lag=max_lag)
    except (ValueError, IndexError) as exc:
        return _fail(str(exc), EXIT_BAD_INPUT)
    ser.dump_json(out_path, ser.report_to_dict(report))
    ser.write_text_atomic(
        out_path + ".residuals.csv",
        ser.residuals_csv_text(report.residuals, report.uniforms),
    )
    ser.write_text_atomic(
        out_path + ".qq.csv",
        ser.qq_csv_text(report.qq_theoretical, report.qq_empirical),
    )
    acf1 = report.acf[1] if len(report.acf) > 1 else float("nan")
    print(
        f"KS={report.ks_stat:.6f} p={report.ks_pvalue:.6f} "
        f"ACF1={acf1:.6f} AIC={report.aic:.3f}"
    )
    return EXIT_OK


def cmd_replay(args) -> int:
    if args.lobster:
        return _replay_lobster(args)
    try:
        raw = ser.load_json(args.config)
        # zero horizon cannot flow through SimConfig (T > 0); it still has a
        # well-defined result: valid, empty artifacts
        if isinstance(raw, dict) and raw.get("sim", {}).get("horizon") == 0:
            _write_replay_artifacts(args.out_prefix, [], [], Book())
            print("replayed 0 events: 0 executions, 0 skipped cancels")
            return EXIT_OK
        config = ser.run_config_from_dict(raw)
    except (ValueError, OSError, TypeError) as exc:
        return _fail(f"bad config: {exc}", EXIT_BAD_INPUT)
    if config.mapping is None:
        return _fail("config has no flow mapping", EXIT_BAD_INPUT)
    if len(config.mapping.actions) != config.model.d:
        return _fail(
            f"mapping covers {len(config.mapping.actions)} dimensions, "
            f"model has {config.model.d}",
            EXIT_BAD_INPUT,
        )
    sim_cfg = _override_sim(config.sim, args.seed)
    result = run_replay(config.model, config.mapping, sim_cfg)
    resting = result.book.resting_volume()
    if resting != result.rested_volume - result.executed_volume - result.cancelled_volume:
        raise AssertionError("volume conservation violated in replay")
    _write_replay_artifacts(args.out_prefix, result.tape, result.quotes, result.book)
    print(
        f"replayed {len(result.stream)} events: {len(result.tape)} executions, "
        f"{result.skipped_cancels} skipped cancels"
    )
    return EXIT_OK


def _replay_lobster(args) -> int:
    try:
        ops = ser.read_ops_csv(args.lobster)
    except (ValueError, OSError) as exc:
        return _fail(f"bad ops file: {exc}", EXIT_BAD_INPUT)
    book = Book(tick_size=0.0001)
    tape = []
    quotes = []
    orphaned = 0
    for op in ops:
        try:
            if op.kind == "submit":
                side = Side.BID if op.side == "bid" else Side.ASK
                tape.extend(
                    book.submit_limit(Order(op.order_id, side, op.price, op.volume, op.time))
                )
            elif op.kind == "reduce":
                book.reduce(op.order_id, op.volume)
            elif op.kind == "cancel":
                book.cancel(op.order_id)
            else:
                tape.append(book.fill_resting(op.order_id, op.volume, op.time))
        except (OrderNotFoundError, ValueError):
            orphaned += 1
            continue
        bb, ba = book.best_bid(), book.best_ask()
        mid = (bb + ba) / 2.0 if bb is not None and ba is not None else None
        spread = ba - bb if bb is not None and ba is not None else None
        quotes.append(QuoteRow(op.time, bb, ba, mid, spread))
    _write_replay_artifacts(args.out_prefix, tape, quotes, book)
    if orphaned:
        print(f"warning: {orphaned} operations referenced unknown orders", file=sys.stderr)
    print(f"replayed {len(ops)} operations: {len(tape)} executions")
    return EXIT_OK


def _write_replay_artifacts(prefix, tape, quotes, book) -> None:
    ser.write_text_atomic(prefix + "_tape.csv", ser.tape_csv_text(tape))
    ser.write_text_atomic(prefix + "_quotes.csv", ser.quotes_csv_text(quotes))
    ser.dump_json(prefix + "_book.json", ser.snapshot_to_dict(book.snapshot(levels=10)))


def cmd_ingest(args) -> int:
    try:
        config = ser.load_run_config(args.config) if args.config else None
    except (ValueError, OSError) as exc:
        return _fail(f"bad config: {exc}", EXIT_BAD_INPUT)
    input_path = args.input or (config.input_path if config else None)
    out_path = args.out or (config.out_path if config else None)
    if not input_path or not out_path:
        return _fail("ingest needs an input and an output path", EXIT_BAD_INPUT)
    args.input, args.out = input_path, out_path
    try:
        if args.source == "binance":
            trades = parse_binance_trades(args.input)
            stream = aggregate_trades(trades, args.window)
            ser.write_events_csv(args.out, stream)
            marks = fit_lognormal_marks(stream)
            ser.dump_json(
                args.out + ".marks.json",
                {
                    "schema_version": ser.SCHEMA_VERSION,
                    "marks": [ser.mark_to_dict(m) for m in marks],
                },
            )
            per_side = [
                float(np.sum(stream.marks[stream.dims == i])) for i in range(2)
            ]
            print(
                f"aggregated {len(trades)} trades into {len(stream)} events "
                f"(buy volume {per_side[0]:g}, sell volume {per_side[1]:g})"
            )
        else:
            messages = parse_lobster(args.input)
            spec = lobster_to_orders(messages)
            ser.write_text_atomic(args.out, ser.ops_csv_text(spec.ops))
            if spec.orphans:
                print(
                    f"warning: {len(spec.orphans)} messages referenced orders "
                    f"submitted before this file",
                    file=sys.stderr,
                )
            if spec.hidden_skipped:
                print(
                    f"warning: skipped {spec.hidden_skipped} hidden executions",
                    file=sys.stderr,
                )
            print(f"translated {len(messages)} messages into {len(spec.ops)} operations")
    except (ParseError, ValueError, OSError) as exc:
        return _fail(str(exc), EXIT_BAD_INPUT)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hawkeslob",
        description="Hawkes order-flow simulation, calibration, diagnostics, "
        "and limit-order-book replay.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an event stream from a model config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default=None, help="events CSV path (falls back to io.out)")
    p.add_argument("--burn-in", type=float, default=None,
                   help="discard this initial duration (stationarity warm-up)")
    p.add_argument("--allow-unstable", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="maximum-likelihood fit of an event stream")
    p.add_argument("--config", default=None, help="run config supplying fit/io defaults")
    p.add_argument("--input", default=None)
    p.add_argument("--kernel", choices=["exponential", "powerlaw"], default=None)
    p.add_argument("--method", choices=["nelder-mead", "lbfgs"], default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--bootstrap", type=int, default=0, help="bootstrap replications for SEs")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="time-rescaling goodness-of-fit report")
    p.add_argument("--config", default=None, help="run config supplying the model and io defaults")
    p.add_argument("--input", default=None)
    p.add_argument("--params", default=None, help="model JSON (overrides config model)")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--seed", type=int, default=None, help="accepted for interface symmetry; unused")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("replay", help="replay order flow through the matching engine")
    p.add_argument("--config", help="run config with a flow mapping")
    p.add_argument("--lobster", help="replay a translated LOBSTER ops CSV instead")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("ingest", help="convert raw exchange exports")
    p.add_argument("--config", default=None, help="run config supplying io defaults")
    p.add_argument("--source", choices=["binance", "lobster"], required=True)
    p.add_argument("--input", default=None)
    p.add_argument("--window", type=float, default=0.1, help="aggregation window (s)")
    p.add_argument("--seed", type=int, default=None, help="accepted for interface symmetry; unused")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ingest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "replay" and not args.lobster and not args.config:
        return _fail("replay needs --config or --lobster", EXIT_BAD_INPUT)
    try:
        return args.func(args)
    except StabilityError as exc:
        print(f"error: {exc} (rho = {exc.rho:.12g})", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
