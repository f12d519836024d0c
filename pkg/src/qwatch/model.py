"""Normality model: transition pairs, configuration vectors and the fitted
per-sensor normality parameters.

The model captures three things per sensor, all keyed by quantized transition
pairs (level now, level `delta` samples later):

* the set of transitions ever seen in training,
* componentwise [lower, upper] excursion boxes over the configuration vectors
  observed for each transition,
* a small set of representative configuration vectors per transition, obtained
  by greedily dropping vectors whose absolute correlation with an already kept
  one reaches the cutoff `eta`.

A configuration vector at time t, viewed by sensor i, is the concatenation of
the sensor's `delta - 1` previous scaled values (oldest first) with the current
scaled values of all sensors, so it lives in R^(delta + n_sensors - 1). It is
undefined for t < delta - 1.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import SchemaError
from .frame import Scaler, SensorFrame, fit_scaler
from .quantize import Quantizer, fit_quantizer, quantize_series

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EQUAL_TOL = 1e-9  # componentwise tolerance of the degenerate-correlation rule


class TransitionPair(NamedTuple):
    """Ordered pair of quantization levels `delta` samples apart."""

    from_level: int
    to_level: int


@dataclass(frozen=True)
class ConfigurationVector:
    """Feature vector attached to one sensor and one timestamp."""

    components: np.ndarray
    sensor: int
    t: int


@dataclass(frozen=True)
class SensorNormality:
    """Fitted normality parameters of a single sensor.

    `bounds` and `representatives` are keyed by a subset of `transitions`:
    transitions observed only at timestamps whose configuration vector is
    undefined (t < delta - 1) appear in `transitions` alone.
    """

    transitions: frozenset[TransitionPair]
    bounds: dict[TransitionPair, tuple[np.ndarray, np.ndarray]]
    representatives: dict[TransitionPair, np.ndarray]


@dataclass(frozen=True)
class HyperParams:
    """Fitting hyper-parameters. `n_w` enables the K-Means cardinality cap."""

    n_q: int
    delta: int
    eta: float
    n_w: int | None = None

    def __post_init__(self) -> None:
        if self.n_q < 2:
            raise ValueError(f"n_q must be >= 2, got {self.n_q}")
        if self.delta < 1:
            raise ValueError(f"delta must be >= 1, got {self.delta}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in ]0, 1[, got {self.eta}")
        if self.n_w is not None and self.n_w < 1:
            raise ValueError(f"n_w must be >= 1, got {self.n_w}")


@dataclass(frozen=True, eq=False)
class NormalityModel:
    """Per-sensor quantizers plus normality parameters, with fit metadata."""

    sensor_names: tuple[str, ...]
    scaler: Scaler
    quantizers: tuple[Quantizer, ...]
    sensors: tuple[SensorNormality, ...]
    hyper: HyperParams
    train_range: tuple[int, int]
    version: int = 1
    bounds_mode: str = "minmax"
    quantile_rule: str = "linear"

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_names)

    @property
    def dim(self) -> int:
        return self.hyper.delta + self.n_sensors - 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NormalityModel):
            return NotImplemented
        return to_dict(self) == to_dict(other)

    def __hash__(self) -> int:  # frozen dataclass with eq=False would supply one
        return id(self)


# ---------------------------------------------------------------------------
# elementary operations


def compute_transitions(
    levels: np.ndarray, delta: int
) -> list[tuple[int, TransitionPair]]:
    """Pair each level with the level `delta` samples later.

    Returns one (t, pair) per t in [0, len(levels) - delta).
    """
    levels = np.asarray(levels)
    if len(levels) <= delta:
        raise ValueError(f"sequence of length {len(levels)} has no lag-{delta} pairs")
    return [
        (t, TransitionPair(int(levels[t]), int(levels[t + delta])))
        for t in range(len(levels) - delta)
    ]


def extract_configuration(
    frame: SensorFrame, sensor: int, t: int, delta: int
) -> ConfigurationVector:
    """Configuration vector of `sensor` at row t of an already scaled frame."""
    if t < delta - 1:
        raise ValueError(f"t = {t} has no {delta - 1} delayed samples")
    if t >= len(frame):
        raise ValueError(f"t = {t} beyond frame of length {len(frame)}")
    delayed = frame.values[t - delta + 1 : t, sensor]
    components = np.concatenate([delayed, frame.values[t]])
    return ConfigurationVector(components, sensor, t)


def abs_corr(a: np.ndarray, b: np.ndarray) -> float:
    """Absolute Pearson correlation of two equal-length vectors.

    If either vector has zero variance the correlation is 1.0 when the vectors
    are componentwise equal within 1e-9 and 0.0 otherwise, so redundant
    constants are still deduplicated and nothing returns NaN.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if len(a) < 2:
        raise ValueError("vectors must have at least 2 components")
    if np.array_equal(a, b):
        return 1.0
    ca = a - a.mean()
    cb = b - b.mean()
    na = float(np.sqrt(np.sum(ca * ca)))
    nb = float(np.sqrt(np.sum(cb * cb)))
    if na == 0.0 or nb == 0.0:
        return 1.0 if bool(np.all(np.abs(a - b) <= EQUAL_TOL)) else 0.0
    return abs(float(np.dot(ca, cb)) / (na * nb))


# ---------------------------------------------------------------------------
# vectorized internals shared with the residual scorer


def configuration_matrix(values: np.ndarray, sensor: int, delta: int) -> np.ndarray:
    """All configuration vectors of one sensor, as rows of an (L, dim) matrix.

    Rows with t < delta - 1 are zero-filled and must be masked by the caller.
    """
    length, n_sensors = values.shape
    dim = delta - 1 + n_sensors
    out = np.zeros((length, dim))
    out[:, delta - 1 :] = values
    if delta > 1:
        windows = np.lib.stride_tricks.sliding_window_view(values[:, sensor], delta - 1)
        # row t holds values[t - delta + 1 : t], i.e. window starting at t - delta + 1
        out[delta - 1 :, : delta - 1] = windows[: length - delta + 1]
    return out


def transition_codes(levels: np.ndarray, delta: int, n_q: int) -> np.ndarray:
    """Encode the lag-`delta` pair at each t as from_level * n_q + to_level."""
    return levels[: len(levels) - delta] * n_q + levels[delta:]


def code_to_pair(code: int, n_q: int) -> TransitionPair:
    return TransitionPair(int(code) // n_q, int(code) % n_q)


def _center_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    centered = rows - rows.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.sum(centered * centered, axis=1))
    return centered, norms


def normalize_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit-normalize centered rows; zero-variance rows are flagged, not divided."""
    centered, norms = _center_rows(rows)
    degenerate = norms == 0.0
    safe = np.where(degenerate, 1.0, norms)
    return centered / safe[:, None], degenerate


def max_abs_corr_to_set(rows: np.ndarray, reps: np.ndarray) -> np.ndarray:
    """Max |corr| of each row against a set of representative vectors."""
    unit_rows, row_deg = normalize_rows(rows)
    unit_reps, rep_deg = normalize_rows(reps)
    out = np.zeros(len(rows))
    regular_reps = unit_reps[~rep_deg]
    if len(regular_reps):
        out = np.abs(unit_rows @ regular_reps.T).max(axis=1)
        out[row_deg] = 0.0
    if rep_deg.any() or row_deg.any():
        # degenerate pairs fall back to the componentwise-equality rule
        deg_reps = reps[rep_deg]
        for i in np.flatnonzero(row_deg):
            eq = np.all(np.abs(reps - rows[i]) <= EQUAL_TOL, axis=1)
            if eq.any():
                out[i] = 1.0
        if len(deg_reps):
            for i in np.flatnonzero(~row_deg):
                eq = np.all(np.abs(deg_reps - rows[i]) <= EQUAL_TOL, axis=1)
                if eq.any():
                    out[i] = max(out[i], 1.0)
    return out


def greedy_low_correlation_filter(members: np.ndarray, eta: float) -> np.ndarray:
    """Chronological greedy selection of representatives.

    A vector is kept iff its max |corr| against every already kept vector stays
    below `eta`; the first vector is always kept. Every discarded vector is
    therefore correlated at >= eta with some kept one.
    """
    if len(members) == 0:
        return members
    unit, degenerate = normalize_rows(members)
    kept: list[int] = [0]
    for i in range(1, len(members)):
        kept_unit = unit[kept]
        kept_deg = degenerate[kept]
        if degenerate[i] or kept_deg.any():
            best = 0.0
            if not degenerate[i]:
                regular = kept_unit[~kept_deg]
                if len(regular):
                    best = float(np.abs(regular @ unit[i]).max())
                others = members[np.asarray(kept)[kept_deg]]
            else:
                others = members[kept]
            if len(others) and bool(
                np.any(np.all(np.abs(others - members[i]) <= EQUAL_TOL, axis=1))
            ):
                best = 1.0
        else:
            best = float(np.abs(kept_unit @ unit[i]).max())
        if best < eta:
            kept.append(i)
    return members[kept].copy()


def kmeans_reduce(vectors: np.ndarray, n_w: int, max_iter: int = 50) -> np.ndarray:
    """Cap a representative set at n_w centroids with seeded Lloyd iterations.

    Inputs with at most n_w vectors are returned unchanged; empty clusters are
    dropped, so at most n_w centroids come back.
    """
    if n_w < 1:
        raise ValueError(f"n_w must be >= 1, got {n_w}")
    vectors = np.asarray(vectors, dtype=float)
    if len(vectors) <= n_w:
        return vectors
    rng = np.random.default_rng(0)
    centroids = vectors[rng.choice(len(vectors), size=n_w, replace=False)]
    assign = np.zeros(len(vectors), dtype=np.int64)
    for iteration in range(max_iter):
        dists = ((vectors[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = dists.argmin(axis=1)
        if iteration > 0 and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for k in range(len(centroids)):
            mask = assign == k
            if mask.any():
                centroids[k] = vectors[mask].mean(axis=0)
    occupied = np.unique(assign)
    return centroids[occupied].copy()


# ---------------------------------------------------------------------------
# fitting


def fit_sensor_normality(
    scaled: np.ndarray,
    levels: np.ndarray,
    sensor: int,
    train_range: tuple[int, int],
    hyper: HyperParams,
    bounds_mode: str = "minmax",
) -> SensorNormality:
    """Fit one sensor's normality parameters from pre-quantized training levels."""
    a, b = train_range
    n_q, delta = hyper.n_q, hyper.delta
    codes = transition_codes(levels, delta, n_q)
    stamps = np.arange(a, b - delta)
    transitions = frozenset(code_to_pair(c, n_q) for c in np.unique(codes))

    config = configuration_matrix(scaled, sensor, delta)
    usable = stamps >= delta - 1
    bounds: dict[TransitionPair, tuple[np.ndarray, np.ndarray]] = {}
    reps: dict[TransitionPair, np.ndarray] = {}
    order = np.argsort(codes[usable], kind="stable")
    u_codes = codes[usable][order]
    u_stamps = stamps[usable][order]
    group_starts = np.flatnonzero(np.r_[True, u_codes[1:] != u_codes[:-1]])
    for g, start in enumerate(group_starts):
        stop = group_starts[g + 1] if g + 1 < len(group_starts) else len(u_codes)
        pair = code_to_pair(u_codes[start], n_q)
        members = config[u_stamps[start:stop]]
        if bounds_mode == "minmax":
            lower = members.min(axis=0)
            upper = members.max(axis=0)
        elif bounds_mode == "percentile":
            lower = np.quantile(members, 0.001, axis=0)
            upper = np.quantile(members, 0.999, axis=0)
        else:
            raise ValueError(f"unknown bounds mode {bounds_mode!r}")
        lower.setflags(write=False)
        upper.setflags(write=False)
        bounds[pair] = (lower, upper)
        selected = greedy_low_correlation_filter(members, hyper.eta)
        if hyper.n_w is not None:
            selected = kmeans_reduce(selected, hyper.n_w)
        selected.setflags(write=False)
        reps[pair] = selected
    return SensorNormality(transitions, bounds, reps)


def fit(
    frame: SensorFrame,
    train_range: tuple[int, int],
    hyper: HyperParams,
    scaler_kind: str = "standard",
    bounds_mode: str = "minmax",
) -> NormalityModel:
    """Fit the full normality model on rows [start, end) of a raw frame.

    Per sensor: fit the quantizer on the scaled training column, collect the
    lag-`delta` transition pairs, then per transition the componentwise bounds
    and the greedily filtered representative set (K-Means capped when n_w is
    set). Deterministic given (frame, train_range, hyper).
    """
    a, b = train_range
    if not 0 <= a < b <= len(frame):
        raise ValueError(f"train_range {train_range} out of bounds")
    if b - a <= hyper.delta:
        raise ValueError(
            f"training range of length {b - a} must exceed delta = {hyper.delta}"
        )
    scaler = fit_scaler(frame, train_range, kind=scaler_kind)
    scaled = (frame.values - scaler.center) / scaler.spread
    quantizers = []
    normalities = []
    for i in range(frame.n_sensors):
        quantizer = fit_quantizer(scaled[a:b, i], hyper.n_q)
        levels = quantize_series(quantizer, scaled[a:b, i])
        quantizers.append(quantizer)
        normalities.append(
            fit_sensor_normality(scaled, levels, i, train_range, hyper, bounds_mode)
        )
        logger.debug(
            "sensor %s: %d transitions, %d boxed, %d representatives",
            frame.sensor_names[i],
            len(normalities[-1].transitions),
            len(normalities[-1].bounds),
            sum(len(r) for r in normalities[-1].representatives.values()),
        )
    return NormalityModel(
        sensor_names=frame.sensor_names,
        scaler=scaler,
        quantizers=tuple(quantizers),
        sensors=tuple(normalities),
        hyper=hyper,
        train_range=(a, b),
        bounds_mode=bounds_mode,
    )


def representative_scalar_count(model: NormalityModel) -> int:
    """Total number of scalars stored across all representative sets."""
    return sum(
        sum(r.size for r in sensor.representatives.values()) for sensor in model.sensors
    )


# ---------------------------------------------------------------------------
# persistence


def _pair_key(pair: TransitionPair) -> str:
    return f"{pair.from_level},{pair.to_level}"


def _parse_pair(key: str) -> TransitionPair:
    a, b = key.split(",")
    return TransitionPair(int(a), int(b))


def to_dict(model: NormalityModel) -> dict:
    """Plain-dict form of the model; drives both persistence and equality."""
    sensors = []
    for name, quantizer, normality in zip(
        model.sensor_names, model.quantizers, model.sensors
    ):
        sensors.append(
            {
                "sensor": name,
                "cut_points": quantizer.cut_points.tolist(),
                "transitions": sorted(
                    [list(p) for p in normality.transitions]
                ),
                "bounds": {
                    _pair_key(p): {
                        "lower": lo.tolist(),
                        "upper": hi.tolist(),
                    }
                    for p, (lo, hi) in sorted(normality.bounds.items())
                },
                "representatives": {
                    _pair_key(p): r.tolist()
                    for p, r in sorted(normality.representatives.items())
                },
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "normality-model",
        "version": model.version,
        "hyper": {
            "n_q": model.hyper.n_q,
            "delta": model.hyper.delta,
            "eta": model.hyper.eta,
            "n_w": model.hyper.n_w,
        },
        "options": {
            "scaler": model.scaler.kind,
            "bounds": model.bounds_mode,
            "quantile_rule": model.quantile_rule,
        },
        "train_range": list(model.train_range),
        "sensor_names": list(model.sensor_names),
        "scaler": {
            "center": model.scaler.center.tolist(),
            "spread": model.scaler.spread.tolist(),
        },
        "sensors": sensors,
    }


def from_dict(payload: dict) -> NormalityModel:
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported model schema version {payload.get('schema_version')!r}"
        )
    hyper = HyperParams(
        n_q=payload["hyper"]["n_q"],
        delta=payload["hyper"]["delta"],
        eta=payload["hyper"]["eta"],
        n_w=payload["hyper"]["n_w"],
    )
    names = tuple(payload["sensor_names"])
    scaler = Scaler(
        names,
        np.array(payload["scaler"]["center"]),
        np.array(payload["scaler"]["spread"]),
        kind=payload["options"]["scaler"],
    )
    quantizers = []
    normalities = []
    for entry in payload["sensors"]:
        quantizers.append(Quantizer(np.array(entry["cut_points"]), hyper.n_q))
        bounds = {}
        for key, box in entry["bounds"].items():
            lower = np.array(box["lower"])
            upper = np.array(box["upper"])
            lower.setflags(write=False)
            upper.setflags(write=False)
            bounds[_parse_pair(key)] = (lower, upper)
        reps = {}
        for key, vectors in entry["representatives"].items():
            arr = np.array(vectors, dtype=float)
            arr.setflags(write=False)
            reps[_parse_pair(key)] = arr
        transitions = frozenset(TransitionPair(*p) for p in entry["transitions"])
        normalities.append(SensorNormality(transitions, bounds, reps))
    return NormalityModel(
        sensor_names=names,
        scaler=scaler,
        quantizers=tuple(quantizers),
        sensors=tuple(normalities),
        hyper=hyper,
        train_range=tuple(payload["train_range"]),
        version=payload["version"],
        bounds_mode=payload["options"]["bounds"],
        quantile_rule=payload["options"]["quantile_rule"],
    )


def save_model(model: NormalityModel, path: str | Path) -> None:
    """Write the model snapshot as self-describing JSON (see README for the schema)."""
    Path(path).write_text(json.dumps(to_dict(model), sort_keys=True) + "\n")


def load_model(path: str | Path) -> NormalityModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: corrupt model snapshot ({exc})") from None
    return from_dict(payload)


def bump_version(model: NormalityModel, sensors: tuple[SensorNormality, ...]) -> NormalityModel:
    """New model with replaced per-sensor normality and version + 1."""
    return replace(model, sensors=sensors, version=model.version + 1)
