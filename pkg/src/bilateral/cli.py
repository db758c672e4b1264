"""Command-line entry point.

Exit codes: 0 success, 1 domain fault (a simulation or signal went bad),
2 usage error (bad arguments, paths or configuration).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config, metrics
from . import identify as ident
from .controller import MODES, TeleopMode
from .errors import Fault, UsageError
from .robots import crane_x7
from .sim import Scenario, TelemetryLog, concurrent_session, mode_configs, run_session

EXIT_OK, EXIT_FAULT, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise UsageError(f"{out}: {e.strerror}") from None
    return out


def _load(args):
    model = config.load_model(args.model) if args.model else crane_x7()
    if args.scenario:
        scenario, ctrl = config.load_scenario(args.scenario)
    else:
        scenario, ctrl = Scenario(), None
    if getattr(args, "quantize_encoders", False):
        scenario = replace(scenario, encoder_quantization=True)
    if getattr(args, "seed", None) is not None:
        scenario = replace(scenario, seed=args.seed)
    if getattr(args, "duration", None) is not None:
        scenario = replace(scenario, duration=args.duration)
    return model, scenario, ctrl


def _session(model, scenario, ctrl, mode: TeleopMode, concurrent: bool) -> TelemetryLog:
    cfg_l, cfg_f = mode_configs(mode, ctrl)
    if concurrent:
        log, report = concurrent_session(model, model, cfg_l, cfg_f, scenario)
        print(f"{mode.value}: missed ticks {report.missed}, overruns {report.overruns}, "
              f"max peer staleness {report.max_staleness}", file=sys.stderr)
        return log
    return run_session(model, model, cfg_l, cfg_f, scenario)


def cmd_simulate(args) -> int:
    model, scenario, ctrl = _load(args)
    mode = TeleopMode.parse(args.mode)
    out = _out_dir(args)
    log = _session(model, scenario, ctrl, mode, args.concurrent)
    path = out / f"telemetry_{mode.value}.csv"
    log.to_csv(path)
    r = metrics.compute_mae(log)
    print(f"{path}: {len(log)} rows; angle MAE {r.angle_mae:.4f} deg, velocity MAE "
          f"{r.velocity_mae:.4f} deg/s, torque MAE {r.torque_mae:.4f} N m")
    return EXIT_OK


def _compare_one(item):
    model, scenario, ctrl, mode, concurrent, out = item
    log = _session(model, scenario, ctrl, mode, concurrent)
    if out is not None:
        log.to_csv(Path(out) / f"telemetry_{mode.value}.csv")
    return mode.value, metrics.compute_mae(log)


def cmd_compare(args) -> int:
    model, scenario, ctrl = _load(args)
    out = _out_dir(args)
    keep = out if args.keep_logs else None
    items = [(model, scenario, ctrl, m, args.concurrent, keep) for m in MODES]
    if args.jobs > 1 and not args.concurrent:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_compare_one, items))
    else:
        results = [_compare_one(it) for it in items]
    reports = dict(results)  # MODES order is the table order
    text = metrics.format_table(reports)
    (out / "mae.txt").write_text(text)
    metrics.write_csv(reports, out / "mae.csv")
    print(text, end="")
    return EXIT_OK


def cmd_identify(args) -> int:
    model = config.load_model(args.model) if args.model else crane_x7()
    out = _out_dir(args)
    if args.log:
        data = ident.data_from_log(TelemetryLog.from_csv(args.log), args.arm, args.rate)
        source = f"log {args.log} ({args.arm} arm, resampled to {args.rate:g} Hz)"
    else:
        rng = np.random.default_rng(args.seed)
        t, q, qd, qdd = ident.multisine(model, args.duration, rate=args.rate, seed=args.seed)
        data = ident.synthesize(model, t, q, qd, qdd, noise=args.noise, rng=rng)
        source = (f"synthetic multi-sine, {args.duration:g} s at {args.rate:g} Hz, "
                  f"noise {args.noise:g}, seed {args.seed}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        phi, diag = ident.identify(model, data)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    (out / "phi.yaml").write_text(config.phi_fragment(phi, f"identified from {source}"))
    report = f"source: {source}\n" + diag.report()
    (out / "diagnostics.txt").write_text(report)
    print(report, end="")
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plots import write_plots

    log = TelemetryLog.from_csv(args.log)
    joints = None if args.joints is None else [j - 1 for j in args.joints]
    paths = write_plots(log, _out_dir(args), joints)
    print(f"wrote {len(paths)} files to {args.out}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    log = TelemetryLog.from_csv(args.log)
    r = metrics.compute_mae(log)
    doc = {"angle_mae_deg": r.angle_mae, "velocity_mae_deg_s": r.velocity_mae,
           "torque_mae_Nm": r.torque_mae, "observer_rms": r.observer_rms,
           "saturation": r.saturation, "rows": r.n_rows, "note": metrics.TORQUE_NOTE}
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bilateral", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def session_flags(sp):
        sp.add_argument("--model", help="robot model YAML (default: CRANE-X7)")
        sp.add_argument("--scenario", help="scenario YAML (default: swing on joint 1)")
        sp.add_argument("--out", default="out", help="output directory")
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--deterministic", dest="concurrent", action="store_false",
                       help="single-threaded lockstep loop (default)")
        g.add_argument("--concurrent", dest="concurrent", action="store_true",
                       help="three real-time threads with latest-value mailboxes")
        sp.set_defaults(concurrent=False)
        sp.add_argument("--quantize-encoders", action="store_true",
                        help="12-bit encoder quantization")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--duration", type=float, help="override the scenario duration [s]")

    s = sub.add_parser("simulate", help="run one mode and write its telemetry CSV")
    session_flags(s)
    s.add_argument("--mode", default=TeleopMode.FOURCH_PROPOSED.value,
                   help="one of: " + ", ".join(m.value for m in MODES))
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("compare", help="run all seven modes and tabulate MAE")
    session_flags(c)
    c.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    c.add_argument("--keep-logs", action="store_true", help="also write each telemetry CSV")
    c.set_defaults(func=cmd_compare)

    i = sub.add_parser("identify", help="least-squares identification of phi")
    i.add_argument("--model", help="model whose parameter names are identified")
    i.add_argument("--log", help="telemetry CSV; without it synthetic data is used")
    i.add_argument("--arm", choices=("l", "f"), default="f")
    i.add_argument("--rate", type=float, default=25.0,
                   help="resampling rate for logs, sample rate for synthetic data [Hz]")
    i.add_argument("--duration", type=float, default=60.0)
    i.add_argument("--noise", type=float, default=0.0, help="relative torque noise")
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--out", default="out")
    i.set_defaults(func=cmd_identify)

    pl = sub.add_parser("plot", help="data files and SVG plots of a telemetry CSV")
    pl.add_argument("--log", required=True)
    pl.add_argument("--out", default="plots")
    pl.add_argument("--joints", type=int, nargs="+", help="1-based joints (default: all)")
    pl.set_defaults(func=cmd_plot)

    m = sub.add_parser("metrics", help="MAE and observer errors of a telemetry CSV")
    m.add_argument("--log", required=True)
    m.add_argument("--out", help="write the JSON report here too")
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Fault as e:
        print(f"fault: {e}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
