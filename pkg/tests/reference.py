"""Exhaustive pure-Python reference implementation used as the test oracle.

Everything here is written directly from the mathematical definitions with
plain loops, dicts and math.fsum, deliberately sharing no code with the
package. It is slow and only meant for small frames (a few hundred samples,
up to three sensors).
"""

from __future__ import annotations

import math

SPREAD_FLOOR = 1e-12
NORM_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# scaling / quantization


def ref_scaler(values, train_range):
    """Per-column (mean, population std floored) over rows [a, b)."""
    a, b = train_range
    n_cols = len(values[0])
    centers, spreads = [], []
    for j in range(n_cols):
        col = [values[t][j] for t in range(a, b)]
        mean = math.fsum(col) / len(col)
        var = math.fsum((x - mean) ** 2 for x in col) / len(col)
        centers.append(mean)
        spreads.append(max(math.sqrt(var), SPREAD_FLOOR))
    return centers, spreads


def ref_scale(values, centers, spreads):
    return [
        [(row[j] - centers[j]) / spreads[j] for j in range(len(row))] for row in values
    ]


def ref_quantile(sorted_values, p):
    """Linear-interpolation empirical quantile of an already sorted list."""
    n = len(sorted_values)
    if n == 1:
        return sorted_values[0]
    h = p * (n - 1)
    lo = int(math.floor(h))
    if lo >= n - 1:
        return sorted_values[n - 1]
    frac = h - lo
    return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo])


def ref_cut_points(values, n_q):
    s = sorted(values)
    return [ref_quantile(s, k / n_q) for k in range(1, n_q)]


def ref_quantize(cuts, x):
    level = 0
    for c in cuts:
        if x > c:
            level += 1
    return level


# ---------------------------------------------------------------------------
# configuration vectors and correlation


def ref_configuration(scaled, sensor, t, delta):
    """[own sensor t-delta+1 .. t-1] + [all sensors at t]; None if t < delta-1."""
    if t < delta - 1:
        return None
    delayed = [scaled[u][sensor] for u in range(t - delta + 1, t)]
    current = [scaled[t][j] for j in range(len(scaled[t]))]
    return delayed + current


def ref_corr(a, b):
    """Absolute Pearson correlation across components with the degenerate rule."""
    n = len(a)
    ma = math.fsum(a) / n
    mb = math.fsum(b) / n
    va = math.fsum((x - ma) ** 2 for x in a)
    vb = math.fsum((x - mb) ** 2 for x in b)
    if va == 0.0 or vb == 0.0:
        equal = all(abs(x - y) <= 1e-9 for x, y in zip(a, b))
        return 1.0 if equal else 0.0
    cov = math.fsum((x - ma) * (y - mb) for x, y in zip(a, b))
    return abs(cov / math.sqrt(va * vb))


def ref_greedy_filter(members, eta):
    """Chronological greedy selection: keep w iff max |corr| vs kept < eta."""
    kept = []
    for w in members:
        if all(ref_corr(w, k) < eta for k in kept):
            kept.append(w)
    return kept


# ---------------------------------------------------------------------------
# model fit


def ref_fit(values, train_range, n_q, delta, eta):
    """Full reference fit.

    Returns a dict with, per sensor: cut points, known transition set,
    bounds {pair: (lower, upper)} and representatives {pair: [vectors]},
    plus the scaler and scaled values for reuse by the residual oracle.
    """
    a, b = train_range
    if b - a <= delta:
        raise ValueError("training range shorter than delta + 1")
    centers, spreads = ref_scaler(values, train_range)
    scaled = ref_scale(values, centers, spreads)
    n_sensors = len(values[0])
    sensors = []
    for i in range(n_sensors):
        col = [scaled[t][i] for t in range(a, b)]
        cuts = ref_cut_points(col, n_q)
        levels = {t: ref_quantize(cuts, scaled[t][i]) for t in range(a, b)}
        transitions = {}
        for t in range(a, b - delta):
            pair = (levels[t], levels[t + delta])
            transitions.setdefault(pair, []).append(t)
        bounds = {}
        reps = {}
        for pair, stamps in transitions.items():
            members = []
            for t in stamps:
                w = ref_configuration(scaled, i, t, delta)
                if w is not None:
                    members.append(w)
            if not members:
                continue
            dim = len(members[0])
            lower = [min(w[j] for w in members) for j in range(dim)]
            upper = [max(w[j] for w in members) for j in range(dim)]
            bounds[pair] = (lower, upper)
            reps[pair] = ref_greedy_filter(members, eta)
        sensors.append(
            {
                "cuts": cuts,
                "transitions": set(transitions),
                "bounds": bounds,
                "representatives": reps,
            }
        )
    return {
        "sensors": sensors,
        "centers": centers,
        "spreads": spreads,
        "scaled": scaled,
        "n_q": n_q,
        "delta": delta,
        "eta": eta,
        "train_range": (a, b),
    }


# ---------------------------------------------------------------------------
# residuals


def ref_interval_distance(xi, lo, hi, eps, zero_width_skip=False):
    excursion = max(0.0, lo - xi) + max(0.0, xi - hi)
    denom = hi - lo + eps
    if denom == 0.0:
        if excursion == 0.0 or zero_width_skip:
            return 0.0
        raise ZeroDivisionError("zero-width interval with eps = 0")
    return excursion / denom


def ref_window_residuals(model, scaled, sensor, start, n_pred, eps, zero_width_skip=False):
    """(r_trans, r_bound, r_conf) of one window for one sensor."""
    delta = model["delta"]
    info = model["sensors"][sensor]
    cuts = info["cuts"]
    dim = None
    novel = 0
    bound_sum = 0.0
    groups = {}
    for t in range(start, start + n_pred - delta):
        pair = (
            ref_quantize(cuts, scaled[t][sensor]),
            ref_quantize(cuts, scaled[t + delta][sensor]),
        )
        if pair not in info["transitions"]:
            novel += 1
            continue
        w = ref_configuration(scaled, sensor, t, delta)
        if w is None:
            continue
        if pair in info["bounds"]:
            lower, upper = info["bounds"][pair]
            dim = len(lower)
            dist = math.fsum(
                ref_interval_distance(w[j], lower[j], upper[j], eps, zero_width_skip)
                for j in range(dim)
            )
            bound_sum += dist / dim
        if pair in info["representatives"]:
            best = max(ref_corr(w, r) for r in info["representatives"][pair])
            groups.setdefault(pair, []).append(best)
    r_trans = novel / n_pred
    r_bound = bound_sum / n_pred
    if groups:
        r_conf = 1.0 - min(math.fsum(v) / len(v) for v in groups.values())
    else:
        r_conf = 1.0
    return r_trans, r_bound, r_conf


def ref_training_normalizers(model, scaled, n_pred, eps, zero_width_skip=False):
    a, b = model["train_range"]
    n_sensors = len(scaled[0])
    max_bound = [0.0] * n_sensors
    max_conf = [0.0] * n_sensors
    for start in range(a, b - n_pred + 1):
        for i in range(n_sensors):
            _, rb, rc = ref_window_residuals(
                model, scaled, i, start, n_pred, eps, zero_width_skip
            )
            max_bound[i] = max(max_bound[i], rb)
            max_conf[i] = max(max_conf[i], rc)
    return max_bound, max_conf


def ref_score(model, scaled, n_pred, stride, eps, normalizers=None, zero_width_skip=False):
    """Window-by-window scores over the full series.

    Returns (starts, per-sensor residual triples, aggregated scores).
    """
    if normalizers is None:
        normalizers = ref_training_normalizers(model, scaled, n_pred, eps, zero_width_skip)
    max_bound, max_conf = normalizers
    n_sensors = len(scaled[0])
    starts, residuals, aggregated = [], [], []
    for start in range(0, len(scaled) - n_pred + 1, stride):
        per_sensor = []
        agg = 0.0
        for i in range(n_sensors):
            rt, rb, rc = ref_window_residuals(
                model, scaled, i, start, n_pred, eps, zero_width_skip
            )
            per_sensor.append((rt, rb, rc))
            nb = rb / max(max_bound[i], NORM_FLOOR)
            nc = rc / max(max_conf[i], NORM_FLOOR)
            agg = max(agg, rt, nb, nc)
        starts.append(start)
        residuals.append(per_sensor)
        aggregated.append(agg)
    return starts, residuals, aggregated


# ---------------------------------------------------------------------------
# metrics


def ref_roc_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    if not pos or not neg:
        raise ValueError("both classes required")
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def ref_roc_points(scores, labels):
    """ROC points (fpr, tpr) for thresholds 'predict positive iff s >= thr',
    from the strictest threshold down, starting at (0, 0)."""
    order = sorted(set(scores), reverse=True)
    n_pos = sum(1 for y in labels if y == 1)
    n_neg = len(labels) - n_pos
    points = [(0.0, 0.0)]
    for thr in order:
        tp = sum(1 for s, y in zip(scores, labels) if y == 1 and s >= thr)
        fp = sum(1 for s, y in zip(scores, labels) if y == 0 and s >= thr)
        points.append((fp / n_neg, tp / n_pos))
    return points


def ref_partial_auc(scores, labels, max_fpr=0.1, standardize=True):
    """Trapezoidal area under the ROC restricted to fpr <= max_fpr."""
    points = ref_roc_points(scores, labels)
    area = 0.0
    for (f0, t0), (f1, t1) in zip(points, points[1:]):
        if f1 <= max_fpr:
            area += (f1 - f0) * (t0 + t1) / 2.0
        else:
            if f0 < max_fpr:
                # cut the segment at max_fpr by linear interpolation
                frac = (max_fpr - f0) / (f1 - f0)
                t_cut = t0 + frac * (t1 - t0)
                area += (max_fpr - f0) * (t0 + t_cut) / 2.0
            break
    if not standardize:
        return area
    a_min = max_fpr * max_fpr / 2.0
    a_max = max_fpr
    return 0.5 * (1.0 + (area - a_min) / (a_max - a_min))


def ref_best_f1(scores, labels):
    """Max F1 over thresholds 'predict positive iff s >= thr', thr in scores."""
    best = (0.0, None)
    for thr in sorted(set(scores)):
        tp = sum(1 for s, y in zip(scores, labels) if y == 1 and s >= thr)
        fp = sum(1 for s, y in zip(scores, labels) if y == 0 and s >= thr)
        fn = sum(1 for s, y in zip(scores, labels) if y == 1 and s < thr)
        if tp == 0:
            f1 = 0.0
        else:
            precision = tp / (tp + fp)
            recall = tp / (tp + fn)
            f1 = 2 * precision * recall / (precision + recall)
        if f1 > best[0]:
            best = (f1, thr)
    return best
