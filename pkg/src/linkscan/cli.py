"""Command-line front end: generate scenarios, run scans, render reports.

Exit codes are the machine contract: 0 clean, 1 I/O failure, 2 bad
arguments, 3 detection run found at least one flagged window, 4 frame too
short to scan. Stdout text is for humans and may change.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import simulate as sim
from .frames import (
    FrameError,
    TimeSeriesFrame,
    fill_missing,
    format_timestamp,
    load_csv,
    parse_timestamp,
    write_csv,
)
from .scanner import (
    BdtParams,
    DetectionReport,
    FrameTooShortError,
    NnParams,
    ScanConfig,
    load_report_csv,
    merge_flags,
    scan,
    write_report_csv,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_FLAGGED = 3
EXIT_TOO_SHORT = 4

MAX_PLOT_POINTS = 20_000


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        start = parse_timestamp(args.start)
    except FrameError as exc:
        return _fail(EXIT_USAGE, str(exc))
    duration = args.days * 86400
    try:
        frame, profiles = sim.gen_normal(
            args.series, start, duration, args.cadence, args.seed
        )
        if args.scenario == "quiet":
            events = []
        elif args.scenario == "table2":
            events = sim.table2_schedule()
        else:
            events = sim.sensitivity_schedule(day_zero=start)
        for event in events:
            frame = sim.inject_anomaly(frame, profiles, event)
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))

    try:
        write_csv(frame, args.output)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))

    print(f"wrote {frame.n_samples} rows x {frame.n_series} series to {args.output}")
    if events:
        print(f"{'start':19}  {'end':19}  {'affected':16}  offset")
        for e in events:
            affected = ",".join(str(i) for i in e.affected)
            print(
                f"{format_timestamp(e.start)}  {format_timestamp(e.end)}  "
                f"[{affected}]{'':{max(0, 14 - len(affected))}}  {e.offset_sigma:g} sigma"
            )
    else:
        print("no anomalies injected")
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    try:
        frame = load_csv(args.input)
    except (OSError, FrameError) as exc:
        return _fail(EXIT_IO, str(exc))
    frame = fill_missing(frame)

    ref_hours = args.ref_hours
    if ref_hours is None:
        ref_hours = 24.0 if args.algo == "bdt" else 12.0
    try:
        config = ScanConfig(
            algorithm=args.algo,
            referent_len=int(ref_hours * 3600),
            subject_len=int(args.subject_hours * 3600),
            split_fraction=0.70,
            seed=args.seed,
            bdt=BdtParams(
                n_estimators=args.estimators,
                max_depth=args.depth,
                auc_threshold=args.threshold,
            ),
            nn=NnParams(epochs=args.epochs, batch_size=args.batch, alpha=args.alpha),
        )
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))

    try:
        report = scan(frame, config)
    except FrameTooShortError as exc:
        return _fail(EXIT_TOO_SHORT, str(exc))
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))

    try:
        write_report_csv(report, args.output)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))

    flagged = report.flagged_windows
    print(
        f"scanned {len(report.windows)} windows with {args.algo}: "
        f"{len(flagged)} flagged"
    )
    for start, end in merge_flags(report):
        print(f"  {format_timestamp(start)} .. {format_timestamp(end)}")
    return EXIT_FLAGGED if flagged else EXIT_OK


def _decimate(n: int) -> int:
    return max(1, n // MAX_PLOT_POINTS)


def _render(
    report: DetectionReport,
    frame: TimeSeriesFrame | None,
    out_path: str,
    use_sqrt: bool,
) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    intervals = merge_flags(report)
    n_axes = 2 if frame is not None else 1
    fig, axes = plt.subplots(
        n_axes, 1, figsize=(11, 3.2 * n_axes), sharex=True, squeeze=False
    )
    axes = axes.ravel()

    if frame is not None:
        ax = axes[0]
        step = _decimate(frame.n_samples)
        times = (frame.start_time + np.arange(frame.n_samples) * frame.cadence).astype(
            "datetime64[s]"
        )[::step]
        values = frame.values[::step]
        if use_sqrt:
            values = np.sqrt(np.clip(values, 0.0, None))
        for j, name in enumerate(frame.series_names):
            ax.plot(times, values[:, j], linewidth=0.6, label=name)
        ax.set_ylabel("sqrt(value)" if use_sqrt else "value")
        ax.legend(loc="upper right", fontsize="x-small", ncol=3)

    ax = axes[-1]
    starts = np.array([w.subject_start for w in report.windows]).astype("datetime64[s]")
    scores = [w.score for w in report.windows]
    thresholds = [w.threshold for w in report.windows]
    ax.step(starts, scores, where="post", color="tab:green", label="score")
    ax.step(
        starts, thresholds, where="post", color="tab:red", linewidth=0.8,
        linestyle="--", label="threshold",
    )
    ax.set_ylabel("auc" if report.algorithm == "bdt" else "accuracy")
    ax.legend(loc="upper right", fontsize="x-small")

    for a in axes:
        for lo, hi in intervals:
            a.axvspan(
                np.datetime64(lo, "s"), np.datetime64(hi, "s"),
                color="tab:blue", alpha=0.25, linewidth=0,
            )
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def cmd_report(args: argparse.Namespace) -> int:
    try:
        report = load_report_csv(args.input)
        frame = load_csv(args.frame) if args.frame else None
    except (OSError, FrameError, ValueError) as exc:
        return _fail(EXIT_IO, str(exc))

    try:
        _render(report, frame, args.output, args.sqrt)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))

    intervals = merge_flags(report)
    print(f"wrote {args.output}")
    print(f"{len(intervals)} flagged interval(s)")
    for lo, hi in intervals:
        print(f"  {format_timestamp(lo)} .. {format_timestamp(hi)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkscan",
        description="Split-sample anomaly detection over multi-link telemetry.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic telemetry CSV")
    p.add_argument("-o", "--output", required=True, help="CSV file to write")
    p.add_argument(
        "--scenario",
        choices=("table2", "sensitivity", "quiet"),
        default="sensitivity",
        help="which anomaly schedule to inject (default: sensitivity)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--series", type=int, default=6, help="number of links (default 6)")
    p.add_argument("--days", type=int, default=7, help="frame length in days (default 7)")
    p.add_argument("--cadence", type=int, default=1, help="seconds per sample (default 1)")
    p.add_argument(
        "--start",
        default="2017-08-01 00:00:00",
        help="frame start, YYYY-MM-DD HH:MM:SS UTC",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="scan a telemetry CSV for anomalous hours")
    p.add_argument("-i", "--input", required=True, help="telemetry CSV to scan")
    p.add_argument("-o", "--output", required=True, help="report CSV to write")
    p.add_argument("--algo", choices=("bdt", "nn"), default="bdt")
    p.add_argument(
        "--ref-hours",
        type=float,
        default=None,
        help="referent window hours (default: 24 for bdt, 12 for nn)",
    )
    p.add_argument("--subject-hours", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=0.55, help="BDT AUC cut")
    p.add_argument("--estimators", type=int, default=50, help="BDT boosting rounds")
    p.add_argument("--depth", type=int, default=1, help="BDT tree depth (1 = stumps)")
    p.add_argument("--epochs", type=int, default=60, help="NN training epochs")
    p.add_argument("--batch", type=int, default=256, help="NN minibatch size")
    p.add_argument("--alpha", type=float, default=0.01, help="NN chance-tail cut")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("report", help="render a scan report to a vector image")
    p.add_argument("-i", "--input", required=True, help="report CSV from detect")
    p.add_argument("-o", "--output", required=True, help="image file to write (.svg)")
    p.add_argument("--frame", default=None, help="source telemetry CSV (adds traces)")
    p.add_argument(
        "--sqrt",
        action="store_true",
        help="square-root transform trace values (display only)",
    )
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
