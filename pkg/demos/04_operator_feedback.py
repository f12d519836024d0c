"""Operator feedback in both directions, with a before/after overlay.

First an operator relabels the first detuned interval as a new normal context
(the model widens and its alarms there vanish); then an operator flags a
quiet window as an undetected anomaly (the model forgets the matching
representatives and the window starts scoring high).

Run: python demos/04_operator_feedback.py
Writes demos/output/feedback_overlay.png
"""

import shutil
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import qwatch as qw

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

config = qw.LorentzConfig(steps_per_interval=10_000, warmup_steps=1_000)
frame = qw.generate_lorentz(config, seed=0)
train = (frame.intervals[0].start, frame.intervals[0].end)
model = qw.fit(frame, train, qw.HyperParams(n_q=20, delta=20, eta=0.95))
scaled = qw.apply_scaler(frame, model.scaler)
spec = qw.WindowSpec(100, 1)

before = qw.score_frame(model, scaled, spec, eps=1.0)
series_before = before.per_timestamp(len(frame))

sigma_iv = next(iv for iv in frame.intervals if iv.tag == "fault:sigma")
print(f"relabeling rows [{sigma_iv.start}, {sigma_iv.end}) as normal ...")
state_dir = OUT / "feedback_state"
shutil.rmtree(state_dir, ignore_errors=True)  # fresh journal per demo run
store = qw.ModelStore(state_dir)
store.initialize(model)
widened = store.apply(
    frame,
    qw.FeedbackEvent(
        window=(sigma_iv.start, sigma_iv.end),
        verdict="normal",
        note="new operating context, confirmed by maintenance",
    ),
)
after = qw.score_frame(widened, scaled, spec, eps=1.0)
series_after = after.per_timestamp(len(frame))

mask = slice(sigma_iv.start, sigma_iv.end)
print(f"  mean score on the interval: {series_before[mask].mean():.3g} -> {series_after[mask].mean():.3g}")

print("flagging a quiet training window as an undetected anomaly ...")
start = 4_000
w = int(np.flatnonzero(before.window_starts == start)[0])
reduced = store.apply(
    frame,
    qw.FeedbackEvent(window=(start, start + 100), verdict="anomalous", zeta=0.99),
)
rescored = qw.score_frame(reduced, scaled, spec, eps=1.0)
print(f"  window {start}: {before.aggregated[w]:.3f} -> {rescored.aggregated[w]:.3f}")

replayed = store.replay(frame)
print(f"journal replay from version 1 reproduces version {replayed.version}: "
      f"{replayed == store.active}")

fig, axes = plt.subplots(2, 1, figsize=(12, 6), sharex=True)
for ax, series, title in (
    (axes[0], series_before, "before feedback"),
    (axes[1], series_after, "after normal-verdict feedback on the highlighted interval"),
):
    ax.semilogy(np.maximum(series, 1e-3), lw=0.4)
    ax.set_ylabel("score (log)")
    ax.set_title(title, fontsize=10)
    for iv in frame.intervals:
        if iv.tag.startswith("fault"):
            ax.axvspan(iv.start, iv.end, color="red", alpha=0.12)
    ax.axvspan(sigma_iv.start, sigma_iv.end, color="purple", alpha=0.15)
axes[1].set_xlabel("sample")
fig.tight_layout()
fig.savefig(OUT / "feedback_overlay.png", dpi=120)
print(f"wrote {OUT / 'feedback_overlay.png'}")
