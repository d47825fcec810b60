"""Time-series data model: CSV ingestion, windowing, labeling, splitting.

Measurements live in a :class:`TimeSeriesFrame`: a uniform-cadence matrix of
per-link values plus optional ground-truth flags. Both detectors consume the
same window/split machinery, so it lives here rather than with either learner.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"


class FrameError(ValueError):
    """Malformed or inconsistent time-series input."""


class InsufficientHistoryError(ValueError):
    """A window was requested before enough history exists in the frame."""


def parse_timestamp(text: str) -> int:
    """Parse ``YYYY-MM-DD HH:MM:SS`` (UTC assumed) into epoch seconds."""
    try:
        dt = datetime.strptime(text, TIMESTAMP_FORMAT)
    except ValueError as exc:
        raise FrameError(f"malformed timestamp {text!r}") from exc
    return int(dt.replace(tzinfo=timezone.utc).timestamp())


def format_timestamp(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime(TIMESTAMP_FORMAT)


@dataclass(frozen=True)
class TimeSeriesFrame:
    """Uniform-cadence matrix of per-link measurements.

    Row i carries the sample at ``start_time + i * cadence``. Missing
    measurements are NaN cells in ``values``. ``flags`` is an optional
    per-row {0,1} ground-truth label vector. Instances are immutable;
    the arrays are marked read-only so concurrent readers are safe.
    """

    start_time: int
    cadence: int
    series_names: tuple[str, ...]
    values: np.ndarray
    flags: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.cadence <= 0:
            raise FrameError(f"cadence must be positive, got {self.cadence}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise FrameError(f"values must be 2-D, got shape {values.shape}")
        n_t, n_s = values.shape
        if n_t < 1 or n_s < 1:
            raise FrameError(f"frame must be at least 1x1, got {values.shape}")
        if len(self.series_names) != n_s:
            raise FrameError(
                f"{len(self.series_names)} series names for {n_s} value columns"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "series_names", tuple(self.series_names))
        if self.flags is not None:
            flags = np.asarray(self.flags, dtype=np.int8)
            if flags.shape != (n_t,):
                raise FrameError(f"flags shape {flags.shape} != ({n_t},)")
            if not np.isin(flags, (0, 1)).all():
                raise FrameError("flags must be 0 or 1")
            flags.setflags(write=False)
            object.__setattr__(self, "flags", flags)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_series(self) -> int:
        return self.values.shape[1]

    @property
    def end_time(self) -> int:
        """Epoch second one cadence past the final sample (half-open)."""
        return self.start_time + self.n_samples * self.cadence

    def time_of(self, index: int) -> int:
        return self.start_time + index * self.cadence

    def index_of(self, epoch: int) -> int:
        """Row index of an on-grid epoch second (may be out of range)."""
        offset = epoch - self.start_time
        if offset % self.cadence != 0:
            raise FrameError(
                f"epoch {epoch} is not on the {self.cadence}s sample grid"
            )
        return offset // self.cadence


@dataclass(frozen=True)
class WindowPair:
    """Adjacent referent/subject half-open index spans into one frame.

    The referent ends exactly where the subject begins; the subject is the
    interval under examination, the referent its immediately preceding
    history.
    """

    referent_span: tuple[int, int]
    subject_span: tuple[int, int]

    def __post_init__(self) -> None:
        r0, r1 = self.referent_span
        s0, s1 = self.subject_span
        if not (r0 < r1 and s0 < s1):
            raise ValueError("referent and subject spans must be non-empty")
        if r1 != s0:
            raise ValueError(
                f"referent must end where subject starts ({r1} != {s0})"
            )

    @property
    def n_referent(self) -> int:
        return self.referent_span[1] - self.referent_span[0]

    @property
    def n_subject(self) -> int:
        return self.subject_span[1] - self.subject_span[0]


@dataclass(frozen=True)
class LabeledSplit:
    """Train/test matrices with referent rows labeled 0 and subject rows 1."""

    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    split_fraction: float = 0.70


def load_csv(path: str | Path) -> TimeSeriesFrame:
    """Load a telemetry CSV into a frame.

    Expected layout: header ``timestamp,<name1>,...,<nameK>[,flag]``, rows of
    ``YYYY-MM-DD HH:MM:SS`` timestamps followed by measurements. Empty cells
    become NaN (missing). Cadence is inferred from the first two rows and
    every subsequent gap must match it exactly.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FrameError(f"{path}: empty file") from None
        rows = list(reader)

    if len(header) < 2:
        raise FrameError(f"{path}: header needs a timestamp and at least one series")
    has_flag = header[-1].strip().lower() == "flag"
    names = tuple(h.strip() for h in (header[1:-1] if has_flag else header[1:]))
    if not names:
        raise FrameError(f"{path}: no series columns")
    if len(rows) < 2:
        raise FrameError(f"{path}: need at least 2 data rows to infer cadence")

    n_cols = len(header)
    times = np.empty(len(rows), dtype=np.int64)
    values = np.empty((len(rows), len(names)), dtype=np.float64)
    flags = np.empty(len(rows), dtype=np.int8) if has_flag else None
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise FrameError(
                f"{path}: row {i + 2} has {len(row)} cells, expected {n_cols}"
            )
        times[i] = parse_timestamp(row[0])
        cells = row[1:-1] if has_flag else row[1:]
        for j, cell in enumerate(cells):
            cell = cell.strip()
            values[i, j] = math.nan if cell == "" else float(cell)
        if flags is not None:
            flags[i] = int(row[-1])

    cadence = int(times[1] - times[0])
    if cadence <= 0:
        raise FrameError(f"{path}: timestamps must be strictly increasing")
    gaps = np.diff(times)
    bad = np.nonzero(gaps != cadence)[0]
    if bad.size:
        i = int(bad[0])
        raise FrameError(
            f"{path}: non-uniform cadence at row {i + 3}: gap {gaps[i]}s, "
            f"expected {cadence}s"
        )
    return TimeSeriesFrame(
        start_time=int(times[0]),
        cadence=cadence,
        series_names=names,
        values=values,
        flags=flags,
    )


def write_csv(frame: TimeSeriesFrame, path: str | Path) -> None:
    """Write a frame in the same CSV layout :func:`load_csv` reads.

    NaN cells serialize as empty strings; floats use shortest round-trip
    repr, so load(write(frame)) is cell-identical.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["timestamp", *frame.series_names]
        if frame.flags is not None:
            header.append("flag")
        writer.writerow(header)
        for i in range(frame.n_samples):
            row = [format_timestamp(frame.time_of(i))]
            for v in frame.values[i]:
                row.append("" if math.isnan(v) else repr(float(v)))
            if frame.flags is not None:
                row.append(str(int(frame.flags[i])))
            writer.writerow(row)


def fill_missing(frame: TimeSeriesFrame) -> TimeSeriesFrame:
    """Replace every missing (NaN) cell with 0.0; other cells untouched."""
    if not np.isnan(frame.values).any():
        return frame
    return replace(frame, values=np.nan_to_num(frame.values, nan=0.0))


def make_window_pair(
    frame: TimeSeriesFrame,
    subject_start: int,
    referent_len: int,
    subject_len: int,
) -> WindowPair:
    """Build the referent/subject index spans around ``subject_start``.

    The referent covers ``[subject_start - referent_len, subject_start)``
    and the subject ``[subject_start, subject_start + subject_len)``. Both
    lengths must be positive multiples of the frame cadence. Raises
    :class:`InsufficientHistoryError` when the referent would begin before
    the frame does (the window cannot be scored without a full referent).
    """
    c = frame.cadence
    for name, length in (("referent_len", referent_len), ("subject_len", subject_len)):
        if length <= 0 or length % c != 0:
            raise ValueError(f"{name}={length} is not a positive multiple of cadence {c}")
    s0 = frame.index_of(subject_start)
    r0 = s0 - referent_len // c
    s1 = s0 + subject_len // c
    if r0 < 0:
        raise InsufficientHistoryError(
            f"referent would start {-r0} rows before the frame begins"
        )
    if s1 > frame.n_samples:
        raise InsufficientHistoryError(
            f"subject would end {s1 - frame.n_samples} rows past the frame"
        )
    return WindowPair(referent_span=(r0, s0), subject_span=(s0, s1))


def make_split(
    frame: TimeSeriesFrame,
    pair: WindowPair,
    fraction: float = 0.70,
    seed: int = 0,
) -> LabeledSplit:
    """Label, pool and stratified-shuffle the window rows into train/test.

    Referent rows get label 0, subject rows label 1. The split is stratified:
    each class is permuted and divided at ``round(fraction * n_class)``, so
    class proportions on both sides stay within rounding of the pooled
    proportion. Deterministic in ``seed``.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    parts: dict[str, list[np.ndarray]] = {"train": [], "test": []}
    for span, label in ((pair.referent_span, 0), (pair.subject_span, 1)):
        idx = np.arange(span[0], span[1])
        n_train = round(fraction * idx.size)
        if n_train < 1 or idx.size - n_train < 1:
            raise ValueError(
                f"span of {idx.size} rows leaves an empty side at fraction {fraction}"
            )
        perm = rng.permutation(idx)
        parts["train"].append(np.stack([perm[:n_train], np.full(n_train, label)]))
        parts["test"].append(np.stack([perm[n_train:], np.full(idx.size - n_train, label)]))

    out: dict[str, np.ndarray] = {}
    for side in ("train", "test"):
        pooled = np.concatenate(parts[side], axis=1)
        order = rng.permutation(pooled.shape[1])
        out[side] = pooled[:, order]
    return LabeledSplit(
        train_x=frame.values[out["train"][0]],
        train_y=out["train"][1].astype(np.int8),
        test_x=frame.values[out["test"][0]],
        test_y=out["test"][1].astype(np.int8),
        split_fraction=fraction,
    )
