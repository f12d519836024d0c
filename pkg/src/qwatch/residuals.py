"""Per-sensor residuals over sliding prediction windows.

Three residuals are computed for every window and sensor:

* ``r_trans``: share of window timestamps whose transition pair was never seen
  in training (novel transitions),
* ``r_bound``: window-averaged distance of configuration vectors to the
  [lower, upper] excursion box of their (known) transition,
* ``r_conf``: one minus the worst per-transition mean of the best absolute
  correlation between window configuration vectors and the stored
  representatives of the same transition.

A window starting at w covers rows [w, w + n_pred). Only timestamps whose
transition completes inside the window (t + delta < w + n_pred) count, so both
counting residuals carry the 1/n_pred normalization of their definitions.
Timestamps with a novel transition carry their signal via r_trans alone: no
box or representative set exists for them, so they contribute nothing to
r_bound or r_conf. A window that visits no known transition at all scores the
sentinel triple (max r_trans, r_bound = 0, r_conf = 1).

The aggregated outlier score of a window is the max over sensors and residual
kinds, with r_bound and r_conf first divided by their maxima over the training
windows (floored at 1e-12); r_trans is used as-is.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import maximum_filter1d

from .errors import SchemaError, ZeroWidthIntervalError
from .frame import SensorFrame
from .model import (
    NormalityModel,
    configuration_matrix,
    max_abs_corr_to_set,
    transition_codes,
)
from .quantize import quantize_series

logger = logging.getLogger(__name__)

NORM_FLOOR = 1e-12
AGG_SENSOR = "__agg__"


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window geometry: window length n_pred and stride."""

    n_pred: int
    stride: int = 1

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.n_pred < 2:
            raise ValueError(f"n_pred must be >= 2, got {self.n_pred}")

    def validate_against(self, delta: int) -> None:
        if self.n_pred <= delta:
            raise ValueError(
                f"n_pred = {self.n_pred} must exceed delta = {delta} so windows "
                "contain at least one transition"
            )

    def starts(self, length: int) -> np.ndarray:
        if length < self.n_pred:
            raise ValueError(
                f"frame of length {length} shorter than n_pred = {self.n_pred}"
            )
        return np.arange(0, length - self.n_pred + 1, self.stride)


@dataclass(frozen=True)
class TrainNormalizers:
    """Per-sensor maxima of r_bound and r_conf over the training windows."""

    max_bound: np.ndarray
    max_conf: np.ndarray


@dataclass(frozen=True)
class ResidualReport:
    """Residuals of one window: per-sensor triples plus the aggregated score."""

    window_start: int
    sensors: tuple[str, ...]
    r_trans: np.ndarray
    r_bound: np.ndarray
    r_conf: np.ndarray
    aggregated: float


def interval_distance(xi: float, lo: float, hi: float, eps: float) -> float:
    """Distance of a real to [lo, hi], scaled by the interval width plus eps.

    Zero outside-excursion gives 0 even for zero-width intervals; a nonzero
    excursion against a zero-width interval with eps = 0 raises
    ZeroWidthIntervalError.
    """
    if lo > hi:
        raise ValueError(f"lo = {lo} exceeds hi = {hi}")
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    excursion = max(0.0, lo - xi) + max(0.0, xi - hi)
    denom = hi - lo + eps
    if denom == 0.0:
        if excursion == 0.0:
            return 0.0
        raise ZeroWidthIntervalError(
            f"value {xi} outside zero-width interval [{lo}, {hi}] with eps = 0"
        )
    return excursion / denom


# ---------------------------------------------------------------------------
# per-sensor vectorized pipeline


class _SensorIndex:
    """Dense lookup tables of one sensor's normality parameters."""

    def __init__(self, model: NormalityModel, sensor: int) -> None:
        n_q = model.hyper.n_q
        dim = model.dim
        normality = model.sensors[sensor]
        n_codes = n_q * n_q
        self.n_codes = n_codes
        self.known = np.zeros(n_codes, dtype=bool)
        for pair in normality.transitions:
            self.known[pair.from_level * n_q + pair.to_level] = True
        self.has_box = np.zeros(n_codes, dtype=bool)
        self.box_lo = np.zeros((n_codes, dim))
        self.box_hi = np.zeros((n_codes, dim))
        for pair, (lo, hi) in normality.bounds.items():
            code = pair.from_level * n_q + pair.to_level
            self.has_box[code] = True
            self.box_lo[code] = lo
            self.box_hi[code] = hi
        self.reps = {
            pair.from_level * n_q + pair.to_level: reps
            for pair, reps in normality.representatives.items()
            if len(reps)
        }
        self.has_reps = np.zeros(n_codes, dtype=bool)
        self.has_reps[list(self.reps)] = True


def _per_timestamp_quantities(
    model: NormalityModel,
    scaled: np.ndarray,
    sensor: int,
    eps: float,
    zero_width: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]:
    """Arrays over t in [0, L - delta): novelty, box distance, grouping code
    (-1 where not applicable) and best representative correlation."""
    delta = model.hyper.delta
    n_q = model.hyper.n_q
    index = _SensorIndex(model, sensor)
    levels = quantize_series(model.quantizers[sensor], scaled[:, sensor])
    codes = transition_codes(levels, delta, n_q)
    n_t = len(codes)
    known = index.known[codes]

    usable = np.zeros(n_t, dtype=bool)
    usable[delta - 1 :] = True  # configuration vector needs delta - 1 history rows

    config = configuration_matrix(scaled, sensor, delta)
    box_dist = np.zeros(n_t)
    conf_code = np.full(n_t, -1, dtype=np.int64)
    best_corr = np.zeros(n_t)

    eligible = known & usable
    stamps = np.flatnonzero(eligible)
    if len(stamps):
        order = np.argsort(codes[stamps], kind="stable")
        stamps = stamps[order]
        sorted_codes = codes[stamps]
        starts = np.flatnonzero(np.r_[True, sorted_codes[1:] != sorted_codes[:-1]])
        dim = config.shape[1]
        for g, start in enumerate(starts):
            stop = starts[g + 1] if g + 1 < len(starts) else len(sorted_codes)
            code = int(sorted_codes[start])
            group = stamps[start:stop]
            members = config[group]
            if index.has_box[code]:
                lo = index.box_lo[code]
                hi = index.box_hi[code]
                excursion = np.maximum(0.0, lo - members) + np.maximum(
                    0.0, members - hi
                )
                denom = hi - lo + eps
                zero = denom == 0.0
                if zero.any():
                    offending = excursion[:, zero] > 0.0
                    if offending.any():
                        if zero_width == "raise":
                            t_bad = group[offending.any(axis=1).argmax()]
                            raise ZeroWidthIntervalError(
                                f"sensor {sensor}, t = {int(t_bad)}: excursion "
                                "against a zero-width bound component with eps = 0"
                            )
                        excursion[:, zero] = 0.0
                    denom = np.where(zero, 1.0, denom)
                box_dist[group] = (excursion / denom).sum(axis=1) / dim
            if code in index.reps:
                conf_code[group] = code
                best_corr[group] = max_abs_corr_to_set(members, index.reps[code])
    return known, box_dist, conf_code, best_corr, index.n_codes


def _window_conf(
    conf_code: np.ndarray,
    best_corr: np.ndarray,
    starts: np.ndarray,
    span: int,
    n_codes: int,
) -> np.ndarray:
    """r_conf per window start via chunked grouped means (min over transitions)."""
    out = np.ones(len(starts))
    if span <= 0:
        return out
    chunk = max(1, 4_000_000 // max(n_codes, 1))
    offsets = np.arange(span)
    for begin in range(0, len(starts), chunk):
        block = starts[begin : begin + chunk]
        idx = block[:, None] + offsets[None, :]
        codes_w = conf_code[idx]
        corr_w = best_corr[idx]
        valid = codes_w >= 0
        rows = np.broadcast_to(np.arange(len(block))[:, None], codes_w.shape)
        flat = rows[valid] * n_codes + codes_w[valid]
        size = len(block) * n_codes
        counts = np.bincount(flat, minlength=size).reshape(len(block), n_codes)
        sums = np.bincount(flat, weights=corr_w[valid], minlength=size).reshape(
            len(block), n_codes
        )
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.inf)
        best = means.min(axis=1)
        has_any = counts.sum(axis=1) > 0
        out[begin : begin + chunk] = np.where(has_any, 1.0 - best, 1.0)
    return out


def _moving_sum(x: np.ndarray, span: int) -> np.ndarray:
    if span <= 0:
        return np.zeros(max(len(x) - span + 1, 0))
    return np.lib.stride_tricks.sliding_window_view(x, span).sum(axis=1)


def _sensor_window_residuals(
    model: NormalityModel,
    scaled: np.ndarray,
    sensor: int,
    starts: np.ndarray,
    n_pred: int,
    eps: float,
    zero_width: str,
    rtrans_norm: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    delta = model.hyper.delta
    span = n_pred - delta
    known, box_dist, conf_code, best_corr, n_codes = _per_timestamp_quantities(
        model, scaled, sensor, eps, zero_width
    )
    novel_sums = _moving_sum((~known).astype(float), span)
    bound_sums = _moving_sum(box_dist, span)
    if rtrans_norm == "eq20":
        r_trans = novel_sums[starts] / n_pred
    elif rtrans_norm == "raw_count":
        r_trans = novel_sums[starts]
    else:
        raise ValueError(f"unknown rtrans_norm {rtrans_norm!r}")
    r_bound = bound_sums[starts] / n_pred
    r_conf = _window_conf(conf_code, best_corr, starts, span, n_codes)
    return r_trans, r_bound, r_conf


# ---------------------------------------------------------------------------
# public per-window operations (reference path, used on single windows)


def r_trans(
    model: NormalityModel, frame: SensorFrame, sensor: int, start: int, n_pred: int
) -> float:
    """Novel-transition residual of one window of a scaled frame."""
    result = _single_window(model, frame, sensor, start, n_pred, eps=0.0, zero_width="skip")
    return result[0]


def r_bound(
    model: NormalityModel,
    frame: SensorFrame,
    sensor: int,
    start: int,
    n_pred: int,
    eps: float,
) -> float:
    """Out-of-box residual of one window of a scaled frame."""
    result = _single_window(model, frame, sensor, start, n_pred, eps=eps)
    return result[1]


def r_conf(
    model: NormalityModel, frame: SensorFrame, sensor: int, start: int, n_pred: int
) -> float:
    """Decorrelation residual of one window of a scaled frame."""
    result = _single_window(model, frame, sensor, start, n_pred, eps=0.0, zero_width="skip")
    return result[2]


def _single_window(
    model: NormalityModel,
    frame: SensorFrame,
    sensor: int,
    start: int,
    n_pred: int,
    eps: float,
    zero_width: str = "raise",
) -> tuple[float, float, float]:
    WindowSpec(n_pred).validate_against(model.hyper.delta)
    if not 0 <= start <= len(frame) - n_pred:
        raise ValueError(f"window [{start}, {start + n_pred}) outside frame")
    rt, rb, rc = _sensor_window_residuals(
        model,
        frame.values,
        sensor,
        np.array([start]),
        n_pred,
        eps,
        zero_width,
        "eq20",
    )
    return float(rt[0]), float(rb[0]), float(rc[0])


# ---------------------------------------------------------------------------
# frame scoring


class ScoreResult:
    """Sequence of per-window ResidualReports backed by dense arrays.

    Raw residual arrays have shape (n_windows, n_sensors); `aggregated` is the
    final outlier score per window.
    """

    def __init__(
        self,
        sensors: tuple[str, ...],
        n_pred: int,
        stride: int,
        window_starts: np.ndarray,
        r_trans: np.ndarray,
        r_bound: np.ndarray,
        r_conf: np.ndarray,
        sensor_aggregated: np.ndarray,
        aggregated: np.ndarray,
        normalizers: TrainNormalizers | None = None,
    ) -> None:
        self.sensors = sensors
        self.n_pred = n_pred
        self.stride = stride
        self.window_starts = window_starts
        self.r_trans = r_trans
        self.r_bound = r_bound
        self.r_conf = r_conf
        self.sensor_aggregated = sensor_aggregated
        self.aggregated = aggregated
        self.normalizers = normalizers

    def __len__(self) -> int:
        return len(self.window_starts)

    def __getitem__(self, i: int) -> ResidualReport:
        return ResidualReport(
            window_start=int(self.window_starts[i]),
            sensors=self.sensors,
            r_trans=self.r_trans[i],
            r_bound=self.r_bound[i],
            r_conf=self.r_conf[i],
            aggregated=float(self.aggregated[i]),
        )

    def per_timestamp(self, length: int) -> np.ndarray:
        """Aggregated score series where row t inherits the window ending at t.

        Needs stride 1; the first n_pred - 1 rows backfill the first window.
        """
        if self.stride != 1:
            raise ValueError("per-timestamp expansion needs stride = 1")
        return _expand(self.aggregated, length, self.n_pred)

    def sensor_series(self, length: int) -> dict[str, dict[str, np.ndarray]]:
        """Per-timestamp raw residual series per sensor (stride 1 only)."""
        if self.stride != 1:
            raise ValueError("per-timestamp expansion needs stride = 1")
        out: dict[str, dict[str, np.ndarray]] = {}
        for i, name in enumerate(self.sensors):
            out[name] = {
                "r_trans": _expand(self.r_trans[:, i], length, self.n_pred),
                "r_bound": _expand(self.r_bound[:, i], length, self.n_pred),
                "r_conf": _expand(self.r_conf[:, i], length, self.n_pred),
            }
        return out

    # -- CSV wire format ----------------------------------------------------

    def to_csv(self, path: str | Path) -> None:
        """One row per (window, sensor) with raw residuals, plus an __agg__ row
        carrying the per-kind normalized maxima and the final score."""
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["window_start", "sensor", "r_trans", "r_bound", "r_conf", "aggregated"]
            )
            for w in range(len(self)):
                for i, name in enumerate(self.sensors):
                    writer.writerow(
                        [
                            int(self.window_starts[w]),
                            name,
                            repr(float(self.r_trans[w, i])),
                            repr(float(self.r_bound[w, i])),
                            repr(float(self.r_conf[w, i])),
                            repr(float(self.sensor_aggregated[w, i])),
                        ]
                    )
                norm_kinds = self._normalized_kind_maxima(w)
                writer.writerow(
                    [
                        int(self.window_starts[w]),
                        AGG_SENSOR,
                        repr(norm_kinds[0]),
                        repr(norm_kinds[1]),
                        repr(norm_kinds[2]),
                        repr(float(self.aggregated[w])),
                    ]
                )

    def _normalized_kind_maxima(self, w: int) -> tuple[float, float, float]:
        if self.normalizers is None:
            return (
                float(self.r_trans[w].max()),
                float(self.r_bound[w].max()),
                float(self.r_conf[w].max()),
            )
        nb = np.maximum(self.normalizers.max_bound, NORM_FLOOR)
        nc = np.maximum(self.normalizers.max_conf, NORM_FLOOR)
        return (
            float(self.r_trans[w].max()),
            float((self.r_bound[w] / nb).max()),
            float((self.r_conf[w] / nc).max()),
        )


def _expand(per_window: np.ndarray, length: int, n_pred: int) -> np.ndarray:
    expected = length - n_pred + 1
    if len(per_window) != expected:
        raise ValueError(
            f"{len(per_window)} stride-1 windows cannot cover length {length}"
        )
    out = np.empty(length)
    out[: n_pred - 1] = per_window[0]
    out[n_pred - 1 :] = per_window
    return out


def load_scores_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, int]:
    """Read back a score CSV: (window_starts, aggregated, n_pred_guess).

    Only the __agg__ rows are needed downstream; n_pred cannot be recovered
    from the file and is returned as the start spacing heuristic (stride).
    """
    starts: list[int] = []
    aggs: list[float] = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"window_start", "sensor", "aggregated"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise SchemaError(f"{path}: not a score CSV (columns {reader.fieldnames})")
        for row in reader:
            if row["sensor"] == AGG_SENSOR:
                starts.append(int(row["window_start"]))
                aggs.append(float(row["aggregated"]))
    if not starts:
        raise SchemaError(f"{path}: no aggregated rows")
    stride = int(starts[1] - starts[0]) if len(starts) > 1 else 1
    return np.array(starts), np.array(aggs), stride


def training_normalizers(
    model: NormalityModel,
    frame: SensorFrame,
    windows: WindowSpec,
    eps: float,
    zero_width: str = "raise",
) -> TrainNormalizers:
    """Per-sensor maxima of r_bound and r_conf over stride-1 training windows."""
    windows.validate_against(model.hyper.delta)
    a, b = model.train_range
    if b - a < windows.n_pred:
        raise ValueError(
            f"training range of length {b - a} shorter than n_pred = {windows.n_pred}"
        )
    starts = np.arange(a, b - windows.n_pred + 1)
    max_bound = np.zeros(model.n_sensors)
    max_conf = np.zeros(model.n_sensors)
    for i in range(model.n_sensors):
        _, rb, rc = _sensor_window_residuals(
            model, frame.values, i, starts, windows.n_pred, eps, zero_width, "eq20"
        )
        max_bound[i] = rb.max()
        max_conf[i] = rc.max()
    return TrainNormalizers(max_bound, max_conf)


def score_frame(
    model: NormalityModel,
    frame: SensorFrame,
    windows: WindowSpec,
    eps: float,
    train_norm: TrainNormalizers | None = None,
    rtrans_norm: str = "eq20",
    zero_width: str = "raise",
) -> ScoreResult:
    """Score every sliding window of a scaled frame.

    Args:
        model: Fitted normality model.
        frame: Frame already scaled with the model's scaler.
        windows: Window geometry (n_pred must exceed the model's delta).
        eps: Bound-tolerance of the interval distance.
        train_norm: Per-sensor training maxima; computed from the model's
            training range when omitted.
        rtrans_norm: "eq20" divides novel counts by n_pred, "raw_count" keeps
            plain counts.
        zero_width: "raise" or "skip" for excursions against zero-width bound
            components when eps = 0.

    Returns:
        ScoreResult ordered by window start.
    """
    windows.validate_against(model.hyper.delta)
    if train_norm is None:
        train_norm = training_normalizers(
            model, frame, WindowSpec(windows.n_pred, 1), eps, zero_width
        )
    starts = windows.starts(len(frame))
    n_sensors = model.n_sensors
    rt = np.zeros((len(starts), n_sensors))
    rb = np.zeros((len(starts), n_sensors))
    rc = np.zeros((len(starts), n_sensors))
    for i in range(n_sensors):
        rt[:, i], rb[:, i], rc[:, i] = _sensor_window_residuals(
            model, frame.values, i, starts, windows.n_pred, eps, zero_width, rtrans_norm
        )
    nb = np.maximum(train_norm.max_bound, NORM_FLOOR)
    nc = np.maximum(train_norm.max_conf, NORM_FLOOR)
    sensor_agg = np.maximum(rt, np.maximum(rb / nb, rc / nc))
    aggregated = sensor_agg.max(axis=1)
    logger.debug(
        "scored %d windows (n_pred=%d, stride=%d): max score %.4g",
        len(starts),
        windows.n_pred,
        windows.stride,
        aggregated.max() if len(aggregated) else float("nan"),
    )
    return ScoreResult(
        sensors=frame.sensor_names,
        n_pred=windows.n_pred,
        stride=windows.stride,
        window_starts=starts,
        r_trans=rt,
        r_bound=rb,
        r_conf=rc,
        sensor_aggregated=sensor_agg,
        aggregated=aggregated,
        normalizers=train_norm,
    )


def smooth_max(scores: np.ndarray, window: int) -> np.ndarray:
    """Trailing sliding max; the first window - 1 entries use the prefix only."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    scores = np.asarray(scores, dtype=float)
    if window == 1 or len(scores) == 0:
        return scores.copy()
    origin = (window - 1) // 2  # shift the filter so each window ends at its output row
    return maximum_filter1d(scores, size=window, mode="nearest", origin=origin)
