from __future__ import annotations

import numpy as np
import pytest

import qwatch as qw
from qwatch.errors import ZeroWidthIntervalError

from conftest import make_frame
from reference import ref_fit, ref_score, ref_training_normalizers, ref_window_residuals


class TestWindowSpec:
    def test_rejects_window_not_exceeding_delta(self, toy_model):
        with pytest.raises(ValueError, match="exceed delta"):
            qw.WindowSpec(2).validate_against(toy_model.hyper.delta)

    def test_rejects_bad_stride(self):
        with pytest.raises(ValueError):
            qw.WindowSpec(10, 0)

    def test_non_overlapping_count(self, toy_model, toy_scaled):
        n_pred = 12
        spec = qw.WindowSpec(n_pred, n_pred)
        result = qw.score_frame(toy_model, toy_scaled, spec, eps=1.0)
        assert len(result) == len(toy_scaled) // n_pred


class TestIntervalDistance:
    def test_interior_point(self):
        assert qw.interval_distance(1.0, 0.0, 2.0, 0.5) == 0.0

    def test_hand_case(self):
        assert qw.interval_distance(5.0, 0.0, 2.0, 1.0) == 1.0

    def test_symmetry(self):
        for d in (0.3, 1.7, 9.0):
            below = qw.interval_distance(-1.0 - d, -1.0, 4.0, 0.2)
            above = qw.interval_distance(4.0 + d, -1.0, 4.0, 0.2)
            assert below == pytest.approx(above, abs=1e-15)

    def test_zero_width_inside_is_zero(self):
        assert qw.interval_distance(3.0, 3.0, 3.0, 0.0) == 0.0

    def test_zero_width_excursion_raises(self):
        with pytest.raises(ZeroWidthIntervalError):
            qw.interval_distance(3.5, 3.0, 3.0, 0.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            qw.interval_distance(0.0, 2.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            qw.interval_distance(0.0, 0.0, 1.0, -0.1)


class TestRTrans:
    def test_training_windows_are_zero(self, toy_model, toy_scaled):
        a, b = toy_model.train_range
        n_pred = 15
        result = qw.score_frame(toy_model, toy_scaled, qw.WindowSpec(n_pred), eps=1.0)
        inside = result.window_starts <= b - n_pred
        assert np.all(result.r_trans[inside] == 0.0)

    def test_all_novel_window_hits_cap_and_sentinels(self):
        # constant training: the only known transition is (0, 0); the scored
        # block alternates, so every lag-1 pair is novel
        length, n_pred, delta = 80, 10, 1
        values = np.zeros((length, 1))
        values[40:] = np.where(np.arange(40) % 2 == 0, 5.0, -5.0).reshape(-1, 1)
        frame = qw.SensorFrame(("a",), np.arange(float(length)), values)
        model = qw.fit(frame, (0, 30), qw.HyperParams(n_q=2, delta=delta, eta=0.9))
        scaled = qw.apply_scaler(frame, model.scaler)
        rt = qw.r_trans(model, scaled, 0, 50, n_pred)
        assert rt == (n_pred - delta) / n_pred
        # sentinel triple when no known transition is visited
        assert qw.r_bound(model, scaled, 0, 50, n_pred, eps=1.0) == 0.0
        assert qw.r_conf(model, scaled, 0, 50, n_pred) == 1.0

    def test_raw_count_mode(self, toy_model, toy_scaled):
        spec = qw.WindowSpec(12, 3)
        eq20 = qw.score_frame(toy_model, toy_scaled, spec, eps=1.0, rtrans_norm="eq20")
        raw = qw.score_frame(toy_model, toy_scaled, spec, eps=1.0, rtrans_norm="raw_count")
        assert np.allclose(raw.r_trans, eq20.r_trans * spec.n_pred, atol=1e-12)


class TestRBound:
    def test_training_windows_are_zero(self, toy_model, toy_scaled):
        a, b = toy_model.train_range
        n_pred = 15
        result = qw.score_frame(toy_model, toy_scaled, qw.WindowSpec(n_pred), eps=1.0)
        inside = result.window_starts <= b - n_pred
        assert np.all(result.r_bound[inside] == 0.0)

    def test_single_excursion_arithmetic(self):
        # alternating 0/1 training; one same-level spike in the scored window,
        # so its transitions stay known but the configuration leaves the box
        length = 60
        values = (np.arange(length) % 2).astype(float).reshape(-1, 1)
        values[45, 0] = 1.5
        frame = qw.SensorFrame(("a",), np.arange(float(length)), values)
        model = qw.fit(frame, (0, 40), qw.HyperParams(n_q=2, delta=1, eta=0.9))
        scaled = qw.apply_scaler(frame, model.scaler)
        n_pred = 10
        assert qw.r_trans(model, scaled, 0, 40, n_pred) == 0.0
        value = qw.r_bound(model, scaled, 0, 40, n_pred, eps=1.0)
        # one timestamp, one component, |excursion| = 1 in scaled units,
        # zero-width box widened by eps only -> distance 1, dim = 1
        assert value == pytest.approx(1.0 / n_pred, abs=1e-12)
        # the window-mean form of the hand example: dims and n_pred scale it
        assert 1.0 / (100 * 21) == pytest.approx(4.7619047619e-4, abs=1e-12)


class TestRConf:
    def test_training_windows_bounded_by_eta_gap(self, toy_model, toy_scaled):
        a, b = toy_model.train_range
        n_pred = 15
        result = qw.score_frame(toy_model, toy_scaled, qw.WindowSpec(n_pred), eps=1.0)
        inside = result.window_starts <= b - n_pred
        assert result.r_conf[inside].max() <= 1 - toy_model.hyper.eta + 1e-9

    def test_self_match_contributes_full_correlation(self, toy_model, toy_scaled):
        # every training window configuration has a representative at >= eta,
        # and kept representatives match themselves exactly
        value = qw.r_conf(toy_model, toy_scaled, 0, 0, 15)
        assert value <= 1 - toy_model.hyper.eta + 1e-9


class TestBruteForceEquivalence:
    @pytest.mark.parametrize("seed", [21, 22, 23])
    def test_all_residuals_match_reference(self, seed):
        rng = np.random.default_rng(seed)
        n_sensors = int(rng.integers(1, 4))
        length = int(rng.integers(80, 200))
        frame = make_frame(n_sensors=n_sensors, length=length, seed=seed + 100)
        n_q = int(rng.integers(2, 6))
        delta = int(rng.integers(1, 5))
        eta = float(rng.uniform(0.6, 0.98))
        # eps = 0 with zero-width boxes is exercised separately (raise parity)
        eps = float(rng.choice([0.0, 0.25, 1.0]))
        zero_width = "skip" if eps == 0.0 else "raise"
        n_pred = int(rng.integers(delta + 3, 25))
        train = (0, int(rng.integers(delta + 20, length - 30)))
        model = qw.fit(frame, train, qw.HyperParams(n_q=n_q, delta=delta, eta=eta))
        scaled = qw.apply_scaler(frame, model.scaler)
        result = qw.score_frame(
            model, scaled, qw.WindowSpec(n_pred), eps=eps, zero_width=zero_width
        )
        ref = ref_fit(frame.values.tolist(), train, n_q, delta, eta)
        starts, per_sensor, aggs = ref_score(
            ref, ref["scaled"], n_pred, 1, eps, zero_width_skip=(eps == 0.0)
        )
        assert list(result.window_starts) == starts
        for w in range(len(starts)):
            for i in range(n_sensors):
                rt, rb, rc = per_sensor[w][i]
                assert result.r_trans[w, i] == pytest.approx(rt, abs=1e-12)
                assert result.r_bound[w, i] == pytest.approx(rb, abs=1e-12)
                assert result.r_conf[w, i] == pytest.approx(rc, abs=1e-12)
            assert result.aggregated[w] == pytest.approx(aggs[w], rel=1e-9)

    def test_single_window_ops_match_reference(self, toy_frame, toy_model, toy_scaled):
        ref = ref_fit(
            toy_frame.values.tolist(),
            toy_model.train_range,
            toy_model.hyper.n_q,
            toy_model.hyper.delta,
            toy_model.hyper.eta,
        )
        for start in (0, 37, 120, 190):
            for sensor in range(2):
                rt, rb, rc = ref_window_residuals(ref, ref["scaled"], sensor, start, 18, 1.0)
                assert qw.r_trans(toy_model, toy_scaled, sensor, start, 18) == pytest.approx(rt, abs=1e-12)
                assert qw.r_bound(toy_model, toy_scaled, sensor, start, 18, 1.0) == pytest.approx(rb, abs=1e-12)
                assert qw.r_conf(toy_model, toy_scaled, sensor, start, 18) == pytest.approx(rc, abs=1e-12)


class TestZeroWidthPolicy:
    def build(self):
        # alternating training makes every box zero-width; the same-level spike
        # is an excursion against one of them
        length = 60
        values = (np.arange(length) % 2).astype(float).reshape(-1, 1)
        values[45, 0] = 1.5
        frame = qw.SensorFrame(("a",), np.arange(float(length)), values)
        model = qw.fit(frame, (0, 40), qw.HyperParams(n_q=2, delta=1, eta=0.9))
        return frame, model

    def test_raise_and_skip_policies(self):
        frame, model = self.build()
        scaled = qw.apply_scaler(frame, model.scaler)
        spec = qw.WindowSpec(10)
        with pytest.raises(ZeroWidthIntervalError):
            qw.score_frame(model, scaled, spec, eps=0.0, zero_width="raise")
        result = qw.score_frame(model, scaled, spec, eps=0.0, zero_width="skip")
        assert np.all(np.isfinite(result.r_bound))
        # skip semantics match the reference rule
        ref = ref_fit(frame.values.tolist(), model.train_range, 2, 1, 0.9)
        _, per_sensor, _ = ref_score(ref, ref["scaled"], 10, 1, 0.0, zero_width_skip=True)
        for w in range(len(result)):
            assert result.r_bound[w, 0] == pytest.approx(per_sensor[w][0][1], abs=1e-12)


class TestAggregation:
    def test_training_scores_capped_at_one(self, toy_model, toy_scaled):
        a, b = toy_model.train_range
        n_pred = 15
        result = qw.score_frame(toy_model, toy_scaled, qw.WindowSpec(n_pred), eps=1.0)
        inside = result.window_starts <= b - n_pred
        assert result.aggregated[inside].max() <= 1.0 + 1e-9

    def test_normalizers_match_reference(self, toy_frame, toy_model, toy_scaled):
        norm = qw.training_normalizers(toy_model, toy_scaled, qw.WindowSpec(15), eps=1.0)
        ref = ref_fit(
            toy_frame.values.tolist(),
            toy_model.train_range,
            toy_model.hyper.n_q,
            toy_model.hyper.delta,
            toy_model.hyper.eta,
        )
        mb, mc = ref_training_normalizers(ref, ref["scaled"], 15, 1.0)
        assert np.allclose(norm.max_bound, mb, atol=1e-12)
        assert np.allclose(norm.max_conf, mc, atol=1e-12)

    def test_affine_invariance_of_structure(self, toy_frame):
        hyper = qw.HyperParams(n_q=3, delta=2, eta=0.9)
        rescaled = qw.SensorFrame(
            toy_frame.sensor_names,
            toy_frame.timestamps,
            toy_frame.values * np.array([3.0, 0.25]) + np.array([-7.0, 11.0]),
        )
        m1 = qw.fit(toy_frame, (0, 160), hyper)
        m2 = qw.fit(rescaled, (0, 160), hyper)
        for s1, s2 in zip(m1.sensors, m2.sensors):
            assert s1.transitions == s2.transitions
        r1 = qw.score_frame(m1, qw.apply_scaler(toy_frame, m1.scaler), qw.WindowSpec(15), eps=0.0)
        r2 = qw.score_frame(m2, qw.apply_scaler(rescaled, m2.scaler), qw.WindowSpec(15), eps=0.0)
        assert np.allclose(r1.r_trans, r2.r_trans, atol=1e-12)
        assert np.allclose(r1.r_conf, r2.r_conf, atol=1e-9)
        assert np.allclose(r1.r_bound, r2.r_bound, atol=1e-9)


class TestScoreCsv:
    def test_round_trip(self, toy_model, toy_scaled, tmp_path):
        result = qw.score_frame(toy_model, toy_scaled, qw.WindowSpec(15), eps=1.0)
        path = tmp_path / "scores.csv"
        result.to_csv(path)
        starts, aggs, stride = qw.residuals.load_scores_csv(path)
        assert np.array_equal(starts, result.window_starts)
        assert np.array_equal(aggs, result.aggregated)
        assert stride == 1

    def test_per_timestamp_expansion(self, toy_model, toy_scaled):
        result = qw.score_frame(toy_model, toy_scaled, qw.WindowSpec(15), eps=1.0)
        series = result.per_timestamp(len(toy_scaled))
        assert len(series) == len(toy_scaled)
        assert np.all(series[:14] == result.aggregated[0])
        assert series[14] == result.aggregated[0]
        assert series[-1] == result.aggregated[-1]


class TestSmoothMax:
    def test_identity(self):
        x = np.array([3.0, 1.0, 2.0])
        assert np.array_equal(qw.smooth_max(x, 1), x)

    def test_hand_case(self):
        assert list(qw.smooth_max(np.array([0.0, 1.0, 0.0, 0.0]), 2)) == [0.0, 1.0, 1.0, 0.0]

    def test_matches_loop_reference(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=200)
        for window in (1, 2, 3, 7, 50, 250):
            expected = np.array(
                [x[max(0, i - window + 1) : i + 1].max() for i in range(len(x))]
            )
            assert np.array_equal(qw.smooth_max(x, window), expected)

    def test_validation(self):
        with pytest.raises(ValueError):
            qw.smooth_max(np.array([1.0]), 0)
