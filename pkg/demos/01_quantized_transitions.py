"""Walk through the building blocks: scaling, quantization, transition pairs
and configuration vectors, on a series small enough to inspect by eye.

Run: python demos/01_quantized_transitions.py
"""

import numpy as np

import qwatch as qw

rng = np.random.default_rng(7)

# two coupled noisy sensors, 40 samples
t = np.arange(40.0)
values = np.stack([np.sin(0.3 * t), 0.5 * np.cos(0.3 * t) + 0.1 * rng.normal(size=40)], axis=1)
frame = qw.SensorFrame(("pressure", "flow"), t, values)

print("== scaling ==")
scaler = qw.fit_scaler(frame, (0, 40))
scaled = qw.apply_scaler(frame, scaler)
print(f"per-sensor center: {np.round(scaler.center, 3)}  spread: {np.round(scaler.spread, 3)}")
print(f"scaled means: {np.round(scaled.values.mean(axis=0), 6)} (centered)")

print("\n== quantization (4 levels) ==")
quantizer = qw.fit_quantizer(scaled.values[:, 0], n_q=4)
print(f"cut points: {np.round(quantizer.cut_points, 3)}")
levels = qw.quantize_series(quantizer, scaled.values[:, 0])
print(f"levels:     {''.join(map(str, levels))}")
print(f"occupancy:  {np.bincount(levels, minlength=4)} (quantile cuts balance the levels)")

print("\n== transition pairs (lag 5) ==")
pairs = qw.compute_transitions(levels, delta=5)
distinct = sorted({p for _, p in pairs})
print(f"{len(pairs)} pairs, {len(distinct)} distinct: {distinct}")
print("a pair is (level now, level 5 samples later): the clustering key of the model")

print("\n== configuration vectors ==")
vec = qw.extract_configuration(scaled, sensor=0, t=10, delta=5)
print(f"sensor 0 at t=10, delta=5 -> length {len(vec.components)} = delta + n_sensors - 1")
print(f"  4 delayed own values : {np.round(vec.components[:4], 3)}")
print(f"  current row (both)   : {np.round(vec.components[4:], 3)}")

print("\n== correlation between configurations ==")
other = qw.extract_configuration(scaled, sensor=0, t=31, delta=5)
print(f"|corr|(t=10, t=31) = {qw.abs_corr(vec.components, other.components):.3f}")
print("representatives are kept greedily while this stays below the cutoff eta")
