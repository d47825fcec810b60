"""Sliding-window split-sample scanner over a telemetry frame.

For every subject window with a full referent behind it, a learner (boosted
stumps or the MLP) is trained to tell the two windows apart; windows whose
test score clears a significance threshold are flagged as anomalous.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boosting import auc, feature_importances, fit_adaboost, predict_scores
from .frames import LabeledSplit, TimeSeriesFrame, make_split, make_window_pair
from .neural import (
    TrainConfig,
    accuracy_threshold,
    binary_accuracy,
    chance_accuracy,
    forward,
    init_mlp,
    train,
)

ALGORITHMS = ("bdt", "nn")


class FrameTooShortError(ValueError):
    """The frame cannot host even one referent + subject window."""


@dataclass
class BdtParams:
    n_estimators: int = 50
    max_depth: int = 1
    auc_threshold: float = 0.55  # practical real-data setting is 0.8


@dataclass
class NnParams:
    epochs: int = 60
    batch_size: int = 256
    alpha: float = 0.01
    record_history: bool = False


@dataclass
class ScanConfig:
    """Knobs for one scan; thresholds must make chance un-flaggable.

    ``stride`` defaults to ``subject_len`` (back-to-back hourly verdicts).
    The NN referent default for simulated data is 43200 s (12 h); real-data
    runs conventionally use 86400 s, like the BDT.
    """

    algorithm: str = "bdt"
    referent_len: int = 86400
    subject_len: int = 3600
    stride: int | None = None
    split_fraction: float = 0.70
    seed: int = 0
    bdt: BdtParams = field(default_factory=BdtParams)
    nn: NnParams = field(default_factory=NnParams)
    workers: int = 1

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if not self.referent_len >= self.subject_len > 0:
            raise ValueError("need referent_len >= subject_len > 0")
        if self.stride is None:
            self.stride = self.subject_len
        if self.stride <= 0:
            raise ValueError("stride must be positive")


@dataclass
class WindowVerdict:
    """Outcome for one subject window.

    ``score`` is the test AUC for the BDT and the test binary accuracy for
    the NN; ``flagged`` is score > threshold. ``importances`` is BDT-only,
    ``chance_level`` and ``history`` NN-only.
    """

    subject_start: int
    score: float
    threshold: float
    flagged: bool
    chance_level: float | None = None
    importances: np.ndarray | None = None
    history: list[tuple[float, float]] | None = None


@dataclass
class DetectionReport:
    algorithm: str
    subject_len: int
    stride: int
    series_names: tuple[str, ...]
    windows: list[WindowVerdict]

    @property
    def flagged_windows(self) -> list[WindowVerdict]:
        return [w for w in self.windows if w.flagged]


def _evaluate_window(
    frame: TimeSeriesFrame,
    subject_start: int,
    config: ScanConfig,
    seed_split: int,
    seed_init: int,
    seed_train: int,
) -> WindowVerdict:
    pair = make_window_pair(frame, subject_start, config.referent_len, config.subject_len)
    split = make_split(frame, pair, config.split_fraction, seed_split)
    if config.algorithm == "bdt":
        model = fit_adaboost(split, config.bdt.n_estimators, config.bdt.max_depth)
        score = auc(predict_scores(model, split.test_x), split.test_y)
        threshold = config.bdt.auc_threshold
        return WindowVerdict(
            subject_start=subject_start,
            score=score,
            threshold=threshold,
            flagged=score > threshold,
            importances=feature_importances(model),
        )
    mlp = init_mlp(frame.n_series, seed_init)
    train_cfg = TrainConfig(
        epochs=config.nn.epochs, batch_size=config.nn.batch_size, seed=seed_train
    )
    _, history = train(mlp, split, train_cfg)
    score = binary_accuracy(forward(mlp, split.test_x), split.test_y)
    chance = chance_accuracy(pair.n_referent, pair.n_subject)
    threshold = accuracy_threshold(len(split.test_y), chance, config.nn.alpha)
    return WindowVerdict(
        subject_start=subject_start,
        score=score,
        threshold=threshold,
        flagged=score > threshold,
        chance_level=chance,
        history=history if config.nn.record_history else None,
    )


def scan(frame: TimeSeriesFrame, config: ScanConfig) -> DetectionReport:
    """Score every subject window that has a full referent behind it.

    Windows advance by ``config.stride`` from the first on-grid start with
    ``referent_len`` of history; anything earlier is skipped, not padded.
    Deterministic in (frame, config); window evaluations run on
    ``config.workers`` threads when > 1.
    """
    if np.isnan(frame.values).any():
        raise ValueError("frame has missing values; apply fill_missing first")
    c = frame.cadence
    for name, length in (
        ("referent_len", config.referent_len),
        ("subject_len", config.subject_len),
        ("stride", config.stride),
    ):
        if length % c != 0:
            raise ValueError(f"{name}={length}s is not a multiple of cadence {c}s")
    ref_rows = config.referent_len // c
    subj_rows = config.subject_len // c
    stride_rows = config.stride // c
    starts = [
        frame.time_of(i)
        for i in range(ref_rows, frame.n_samples - subj_rows + 1, stride_rows)
    ]
    if not starts:
        raise FrameTooShortError(
            f"frame of {frame.n_samples} rows cannot fit a "
            f"{ref_rows}+{subj_rows} row window"
        )

    rng = np.random.default_rng(config.seed)
    seeds = rng.integers(0, 2**63, size=(len(starts), 3))
    jobs = [
        (frame, s, config, int(seeds[i, 0]), int(seeds[i, 1]), int(seeds[i, 2]))
        for i, s in enumerate(starts)
    ]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            windows = list(pool.map(lambda a: _evaluate_window(*a), jobs))
    else:
        windows = [_evaluate_window(*a) for a in jobs]
    return DetectionReport(
        algorithm=config.algorithm,
        subject_len=config.subject_len,
        stride=config.stride,
        series_names=frame.series_names,
        windows=windows,
    )


def attribute(
    verdict: WindowVerdict,
    series_names: tuple[str, ...],
) -> list[tuple[str, float, bool]]:
    """Rank series by importance for one flagged BDT window.

    Returns (name, importance, involved) triples in descending importance,
    ties broken by series index; zero-importance series trail the list
    marked uninvolved. NN windows carry no attribution.
    """
    if verdict.importances is None:
        raise ValueError("attribution requires a BDT window with importances")
    imp = verdict.importances
    order = sorted(range(len(imp)), key=lambda i: (-imp[i], i))
    return [(series_names[i], float(imp[i]), imp[i] > 0.0) for i in order]


def merge_flags(report: DetectionReport) -> list[tuple[int, int]]:
    """Coalesce flagged windows into sorted, non-overlapping [start, end) spans."""
    intervals: list[list[int]] = []
    for w in report.windows:
        if not w.flagged:
            continue
        start, end = w.subject_start, w.subject_start + report.subject_len
        if intervals and start <= intervals[-1][1]:
            intervals[-1][1] = max(end, intervals[-1][1])
        else:
            intervals.append([start, end])
    return [(a, b) for a, b in intervals]


def write_report_csv(report: DetectionReport, path: str | Path) -> None:
    """Write one row per window: start, score, threshold, flag, extras.

    ``importances`` is a quoted semicolon-joined list (empty for NN);
    ``chance_level`` is empty for the BDT. Floats use round-trip repr so
    identical scans produce byte-identical files.
    """
    with open(path, "w", newline="") as fh:
        fh.write("subject_start,score,threshold,flagged,chance_level,importances\n")
        for w in report.windows:
            chance = "" if w.chance_level is None else repr(w.chance_level)
            if w.importances is None:
                imp = ""
            else:
                imp = '"' + ";".join(repr(float(v)) for v in w.importances) + '"'
            fh.write(
                f"{w.subject_start},{w.score!r},{w.threshold!r},"
                f"{int(w.flagged)},{chance},{imp}\n"
            )


def load_report_csv(path: str | Path) -> DetectionReport:
    """Read a report CSV back; stride/window length are inferred from starts."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["subject_start", "score", "threshold", "flagged"]:
            raise ValueError(f"{path}: not a detection report")
        windows = []
        for row in reader:
            imp_text = row[5]
            windows.append(
                WindowVerdict(
                    subject_start=int(row[0]),
                    score=float(row[1]),
                    threshold=float(row[2]),
                    flagged=bool(int(row[3])),
                    chance_level=float(row[4]) if row[4] else None,
                    importances=(
                        np.array([float(v) for v in imp_text.split(";")])
                        if imp_text
                        else None
                    ),
                )
            )
    starts = [w.subject_start for w in windows]
    stride = min(np.diff(starts)) if len(starts) > 1 else 3600
    algorithm = "bdt" if any(w.importances is not None for w in windows) else "nn"
    return DetectionReport(
        algorithm=algorithm,
        subject_len=int(stride),
        stride=int(stride),
        series_names=(),
        windows=windows,
    )
