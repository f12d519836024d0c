"""Multivariate sensor frames: ingestion, scaling, labeled-interval bookkeeping.

A :class:`SensorFrame` is an immutable bundle of aligned sensor columns with
strictly increasing timestamps, an optional per-timestamp binary label column
and optional (start, end, tag) interval annotations used by the benchmark
generators to encode ground truth. All algorithmic code indexes frames by row,
not by timestamp value.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SchemaError

logger = logging.getLogger(__name__)

SPREAD_FLOOR = 1e-12


@dataclass(frozen=True)
class Interval:
    """Half-open row interval [start, end) with a free-text tag."""

    start: int
    end: int
    tag: str


@dataclass(frozen=True)
class SensorFrame:
    """Aligned multivariate time-series.

    Attributes:
        sensor_names: One identifier per sensor column.
        timestamps: Strictly increasing sample indices or epoch seconds, shape (L,).
        values: Sensor samples, shape (L, N_s), one column per sensor.
        labels: Optional per-timestamp binary labels (0 normal / 1 anomalous).
        intervals: Optional ground-truth interval annotations.
    """

    sensor_names: tuple[str, ...]
    timestamps: np.ndarray
    values: np.ndarray
    labels: np.ndarray | None = None
    intervals: tuple[Interval, ...] = field(default=())

    def __post_init__(self) -> None:
        ts = np.asarray(self.timestamps, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError(f"values must be 2D, got shape {vals.shape}")
        if vals.shape[1] != len(self.sensor_names):
            raise ValueError(
                f"{len(self.sensor_names)} sensor names for {vals.shape[1]} columns"
            )
        if len(ts) != len(vals):
            raise ValueError("timestamps and values disagree on length")
        if len(ts) < 1:
            raise ValueError("frame must contain at least one row")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int8)
            if len(labels) != len(vals):
                raise ValueError("labels and values disagree on length")
        ts.setflags(write=False)
        vals.setflags(write=False)
        if labels is not None:
            labels.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sensor_names", tuple(self.sensor_names))
        object.__setattr__(self, "intervals", tuple(self.intervals))

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_names)

    def sensor_index(self, name: str) -> int:
        try:
            return self.sensor_names.index(name)
        except ValueError:
            raise KeyError(f"unknown sensor {name!r}") from None

    def column(self, sensor: int | str) -> np.ndarray:
        if isinstance(sensor, str):
            sensor = self.sensor_index(sensor)
        return self.values[:, sensor]


@dataclass(frozen=True)
class Scaler:
    """Per-sensor affine scaler fit on training rows only.

    `kind` records the fitting convention: "standard" uses (mean, population
    std) per sensor, "minmax" uses (min, max-min). Spread is floored at
    SPREAD_FLOOR so constant sensors scale to zero instead of dividing by zero.
    """

    sensor_names: tuple[str, ...]
    center: np.ndarray
    spread: np.ndarray
    kind: str = "standard"

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=float)
        spread = np.asarray(self.spread, dtype=float)
        if center.shape != spread.shape or center.ndim != 1:
            raise ValueError("center and spread must be equal-length 1D arrays")
        if np.any(spread <= 0):
            raise ValueError("spread must be positive")
        center.setflags(write=False)
        spread.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "spread", spread)
        object.__setattr__(self, "sensor_names", tuple(self.sensor_names))


def fit_scaler(
    frame: SensorFrame,
    train_range: tuple[int, int] | None = None,
    kind: str = "standard",
) -> Scaler:
    """Fit a per-sensor scaler on rows [start, end) of the frame.

    Args:
        frame: Source frame.
        train_range: Half-open row interval; None means the whole frame.
        kind: "standard" (mean / population std) or "minmax" (min / range).

    Returns:
        A Scaler whose spread is floored at SPREAD_FLOOR.
    """
    if train_range is None:
        train_range = (0, len(frame))
    a, b = train_range
    if not 0 <= a < b <= len(frame):
        raise ValueError(f"empty or out-of-range train_range {train_range}")
    block = frame.values[a:b]
    if kind == "standard":
        center = block.mean(axis=0)
        spread = block.std(axis=0)
    elif kind == "minmax":
        center = block.min(axis=0)
        spread = block.max(axis=0) - center
    else:
        raise ValueError(f"unknown scaler kind {kind!r}")
    spread = np.maximum(spread, SPREAD_FLOOR)
    return Scaler(frame.sensor_names, center, spread, kind=kind)


def apply_scaler(frame: SensorFrame, scaler: Scaler) -> SensorFrame:
    """Return a frame with each sensor mapped to (x - center) / spread."""
    if scaler.sensor_names != frame.sensor_names:
        raise ValueError(
            f"scaler fitted for sensors {scaler.sensor_names}, "
            f"frame has {frame.sensor_names}"
        )
    scaled = (frame.values - scaler.center) / scaler.spread
    return SensorFrame(
        frame.sensor_names, frame.timestamps, scaled, frame.labels, frame.intervals
    )


def invert_scaler(frame: SensorFrame, scaler: Scaler) -> SensorFrame:
    """Inverse of :func:`apply_scaler`."""
    if scaler.sensor_names != frame.sensor_names:
        raise ValueError("sensor-set mismatch")
    raw = frame.values * scaler.spread + scaler.center
    return SensorFrame(
        frame.sensor_names, frame.timestamps, raw, frame.labels, frame.intervals
    )


def load_csv(
    path: str | Path,
    sensors: list[str] | None = None,
    timestamp_column: str = "timestamp",
    label_column: str = "label",
) -> SensorFrame:
    """Load a frame from CSV.

    Expected layout: a header row with `timestamp` first, one column per
    sensor, and an optional trailing `label` column. Rows whose sensor values
    fail to parse as reals are dropped with a warning; ragged rows and
    non-monotone timestamps raise.

    Args:
        path: CSV file path.
        sensors: Sensor columns to keep, in order. None keeps every column
            that is neither the timestamp nor the label.

    Returns:
        The parsed SensorFrame (with intervals from a sidecar file when present).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if timestamp_column not in header:
            raise SchemaError(f"{path}: no {timestamp_column!r} column")
        ts_idx = header.index(timestamp_column)
        has_label = label_column in header
        label_idx = header.index(label_column) if has_label else -1
        if sensors is None:
            sensors = [c for c in header if c not in (timestamp_column, label_column)]
        try:
            sensor_idx = [header.index(name) for name in sensors]
        except ValueError as exc:
            raise SchemaError(f"{path}: {exc}") from None

        ts_list: list[float] = []
        rows: list[list[float]] = []
        label_list: list[int] = []
        n_dropped = 0
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise SchemaError(f"{path}:{lineno}: ragged row ({len(row)} fields)")
            try:
                vals = [float(row[i]) for i in sensor_idx]
                ts = float(row[ts_idx])
            except ValueError:
                n_dropped += 1
                continue
            ts_list.append(ts)
            rows.append(vals)
            if has_label:
                label_list.append(int(float(row[label_idx])))
    if n_dropped:
        logger.warning("%s: dropped %d rows with unparseable sensor values", path, n_dropped)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    timestamps = np.array(ts_list)
    if np.any(np.diff(timestamps) <= 0):
        raise ValueError(f"{path}: timestamps are not strictly increasing")
    labels = np.array(label_list, dtype=np.int8) if has_label else None
    intervals = _load_intervals(path)
    return SensorFrame(tuple(sensors), timestamps, np.array(rows), labels, intervals)


def save_csv(frame: SensorFrame, path: str | Path, metadata: dict | None = None) -> None:
    """Write a frame in the canonical CSV layout (lossless for finite doubles).

    A sidecar `<path>.meta.json` is written when the frame carries intervals
    or extra metadata is supplied.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["timestamp", *frame.sensor_names]
        if frame.labels is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(len(frame)):
            row = [repr(float(frame.timestamps[i]))]
            row += [repr(float(v)) for v in frame.values[i]]
            if frame.labels is not None:
                row.append(str(int(frame.labels[i])))
            writer.writerow(row)
    if frame.intervals or metadata:
        sidecar = {
            "intervals": [[iv.start, iv.end, iv.tag] for iv in frame.intervals],
        }
        if metadata:
            sidecar["metadata"] = metadata
        meta_path = path.with_suffix(path.suffix + ".meta.json")
        meta_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def _load_intervals(csv_path: Path) -> tuple[Interval, ...]:
    meta_path = csv_path.with_suffix(csv_path.suffix + ".meta.json")
    if not meta_path.exists():
        return ()
    try:
        payload = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{meta_path}: {exc}") from None
    return tuple(Interval(int(s), int(e), str(tag)) for s, e, tag in payload.get("intervals", []))
