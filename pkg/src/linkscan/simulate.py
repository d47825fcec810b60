"""Synthetic six-link telemetry with controlled anomaly injections.

Each series is flat Gaussian noise around a random baseline below 0.5;
anomalies are constant additive level shifts expressed in units of the
affected series' own noise sigma. Values are clamped to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .frames import TimeSeriesFrame, parse_timestamp

SIGMA_LOW = 0.00625
SIGMA_HIGH = 0.05

#: Frame origin used by the canned schedules: 2017-08-01 00:00:00 UTC.
DAY_ZERO = parse_timestamp("2017-08-01 00:00:00")


@dataclass(frozen=True)
class SeriesProfile:
    """Noise model of one series: flat baseline plus Gaussian jitter."""

    baseline: float
    sigma: float

    def __post_init__(self) -> None:
        if not 0.0 < self.baseline < 0.5:
            raise ValueError(f"baseline must lie in (0, 0.5), got {self.baseline}")
        if not SIGMA_LOW <= self.sigma <= SIGMA_HIGH:
            raise ValueError(
                f"sigma must lie in [{SIGMA_LOW}, {SIGMA_HIGH}], got {self.sigma}"
            )


@dataclass(frozen=True)
class AnomalyEvent:
    """One injected anomaly: a level shift on some series over a time span.

    ``affected`` lists series indices, most significant first;
    ``offset_sigma`` is the shift in units of each affected series' sigma.
    """

    start: int
    end: int
    affected: tuple[int, ...]
    offset_sigma: float = 5.0

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError(f"event start {self.start} not before end {self.end}")
        if not self.affected:
            raise ValueError("event must affect at least one series")
        if len(set(self.affected)) != len(self.affected):
            raise ValueError(f"duplicate series in {self.affected}")
        object.__setattr__(self, "affected", tuple(self.affected))

    @property
    def duration(self) -> int:
        return self.end - self.start


def gen_normal(
    n_series: int,
    start: int,
    duration: int,
    cadence: int = 1,
    seed: int = 0,
) -> tuple[TimeSeriesFrame, list[SeriesProfile]]:
    """Generate a quiet frame of ``n_series`` noise series, flags all 0.

    Per series, baseline ~ U(0, 0.5) and sigma ~ U(0.00625, 0.05); every
    sample is baseline + N(0, sigma), clamped to [0, 1]. Deterministic in
    ``seed``.
    """
    if n_series < 1:
        raise ValueError(f"n_series must be >= 1, got {n_series}")
    if duration < cadence:
        raise ValueError(f"duration {duration}s shorter than cadence {cadence}s")
    n_t = duration // cadence
    rng = np.random.default_rng(seed)
    profiles = [
        SeriesProfile(
            baseline=float(rng.uniform(0.0, 0.5)),
            sigma=float(rng.uniform(SIGMA_LOW, SIGMA_HIGH)),
        )
        for _ in range(n_series)
    ]
    baselines = np.array([p.baseline for p in profiles])
    sigmas = np.array([p.sigma for p in profiles])
    values = np.clip(baselines + rng.standard_normal((n_t, n_series)) * sigmas, 0.0, 1.0)
    frame = TimeSeriesFrame(
        start_time=start,
        cadence=cadence,
        series_names=tuple(f"link {i}" for i in range(n_series)),
        values=values,
        flags=np.zeros(n_t, dtype=np.int8),
    )
    return frame, profiles


def inject_anomaly(
    frame: TimeSeriesFrame,
    profiles: list[SeriesProfile],
    event: AnomalyEvent,
) -> TimeSeriesFrame:
    """Return a copy of ``frame`` with ``event`` applied.

    Every sample whose timestamp lies in ``[event.start, event.end)`` is
    shifted by ``offset_sigma * sigma`` on each affected series (then
    clamped to [0, 1]) and its flag set to 1. All other cells are
    bit-identical to the input.
    """
    if event.start < frame.start_time or event.end > frame.end_time:
        raise ValueError(
            f"event [{event.start}, {event.end}) outside frame "
            f"[{frame.start_time}, {frame.end_time})"
        )
    for s in event.affected:
        if not 0 <= s < frame.n_series:
            raise ValueError(f"affected series {s} out of range for {frame.n_series}")
    c = frame.cadence
    # first/last sample indices with start <= t < end
    i0 = -((event.start - frame.start_time) // -c)
    i1 = -((event.end - frame.start_time) // -c)
    values = frame.values.copy()
    cols = list(event.affected)
    shifts = np.array([event.offset_sigma * profiles[s].sigma for s in cols])
    values[i0:i1, cols] = np.clip(values[i0:i1, cols] + shifts, 0.0, 1.0)
    flags = (frame.flags if frame.flags is not None else np.zeros(frame.n_samples)).copy()
    flags[i0:i1] = 1
    return replace(frame, values=values, flags=flags.astype(np.int8))


def table2_schedule() -> list[AnomalyEvent]:
    """The six canned anomalies of the demo dataset, 5-sigma shifts.

    Spans and affected series (most significant first) are fixed; events
    are listed in their original catalog order, not by start time.
    """
    spec = [
        ("2017-08-03 07:36:42", "2017-08-03 07:58:06", (2, 5)),
        ("2017-08-01 06:23:52", "2017-08-01 07:06:09", (2, 0, 1, 4)),
        ("2017-08-05 18:30:38", "2017-08-05 19:24:01", (1, 3, 2, 4, 5)),
        ("2017-08-02 11:27:58", "2017-08-02 12:21:16", (5, 2, 3)),
        ("2017-08-05 07:20:14", "2017-08-05 10:35:35", (2, 1, 4, 0, 5)),
        ("2017-08-03 19:20:06", "2017-08-03 20:17:46", (3, 1)),
    ]
    return [
        AnomalyEvent(
            start=parse_timestamp(s),
            end=parse_timestamp(e),
            affected=affected,
            offset_sigma=5.0,
        )
        for s, e, affected in spec
    ]


def sensitivity_schedule(day_zero: int = DAY_ZERO) -> list[AnomalyEvent]:
    """Six anomalies spanning the offset/feature-count/duration grid.

    Starts are 24 h apart beginning at ``day_zero + 24 h`` so even the first
    event has a full day of history. The grid crosses offsets {2, 5} sigma,
    feature counts {1, 3} (series {0} vs {0, 1, 2}) and durations {1, 3} h.
    """
    hour = 3600
    grid = [
        (2.0, 1, 1),
        (2.0, 1, 3),
        (2.0, 3, 1),
        (5.0, 1, 1),
        (5.0, 1, 3),
        (5.0, 3, 1),
    ]
    events = []
    for k, (offset, n_feat, dur_h) in enumerate(grid):
        start = day_zero + (k + 1) * 24 * hour
        events.append(
            AnomalyEvent(
                start=start,
                end=start + dur_h * hour,
                affected=tuple(range(n_feat)),
                offset_sigma=offset,
            )
        )
    return events
