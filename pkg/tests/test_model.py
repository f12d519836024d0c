from __future__ import annotations

import numpy as np
import pytest

import qwatch as qw
from qwatch.errors import SchemaError
from qwatch.model import greedy_low_correlation_filter, representative_scalar_count, to_dict

from conftest import make_frame
from reference import ref_corr, ref_fit


class TestTransitions:
    def test_hand_enumeration(self):
        pairs = qw.compute_transitions(np.array([0, 1, 2]), 1)
        assert pairs == [(0, qw.TransitionPair(0, 1)), (1, qw.TransitionPair(1, 2))]

    def test_constant_levels(self):
        pairs = qw.compute_transitions(np.full(6, 3), 2)
        assert all(p == (3, 3) for _, p in pairs)

    def test_count(self):
        for delta in (1, 3, 7):
            pairs = qw.compute_transitions(np.arange(20) % 4, delta)
            assert len(pairs) == 20 - delta

    def test_too_short(self):
        with pytest.raises(ValueError):
            qw.compute_transitions(np.array([0, 1]), 2)


class TestConfigurationVector:
    def test_delta_one_is_current_row(self):
        frame = qw.SensorFrame(("a", "b"), np.arange(3.0), np.array([[1, 2], [3, 4], [5, 6]], float))
        vec = qw.extract_configuration(frame, 0, 0, 1)
        assert list(vec.components) == [1.0, 2.0]

    def test_hand_construction(self):
        frame = qw.SensorFrame(("a", "b"), np.arange(2.0), np.array([[1, 10], [2, 20]], float))
        vec = qw.extract_configuration(frame, 0, 1, 2)
        assert list(vec.components) == [1.0, 2.0, 20.0]
        assert vec.sensor == 0 and vec.t == 1

    def test_length_is_delta_plus_sensors_minus_one(self):
        frame = make_frame(n_sensors=2, length=60, seed=1)
        vec = qw.extract_configuration(frame, 1, 30, 20)
        assert len(vec.components) == 20 + 2 - 1

    def test_too_early(self):
        frame = make_frame(n_sensors=2, length=10, seed=1)
        with pytest.raises(ValueError, match="delayed"):
            qw.extract_configuration(frame, 0, 1, 3)

    def test_delayed_block_oldest_first(self):
        frame = qw.SensorFrame(
            ("a",), np.arange(5.0), np.array([[10], [11], [12], [13], [14]], float)
        )
        vec = qw.extract_configuration(frame, 0, 3, 4)
        assert list(vec.components) == [10.0, 11.0, 12.0, 13.0]


class TestAbsCorr:
    def test_self_correlation(self):
        assert qw.abs_corr(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 3.0])) == 1.0

    def test_perfect_anticorrelation(self):
        assert qw.abs_corr(np.array([1.0, 2.0, 3.0]), np.array([3.0, 2.0, 1.0])) == pytest.approx(1.0)

    def test_degenerate_rules(self):
        constant = np.array([2.0, 2.0, 2.0])
        assert qw.abs_corr(constant, np.array([1.0, 5.0, 9.0])) == 0.0
        assert qw.abs_corr(constant, constant + 5e-10) == 1.0
        assert qw.abs_corr(constant, constant + 1.0) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            qw.abs_corr(np.array([1.0, 2.0]), np.array([1.0, 2.0, 3.0]))

    def test_matches_reference(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            a = rng.normal(size=8)
            b = rng.normal(size=8)
            assert qw.abs_corr(a, b) == pytest.approx(ref_corr(list(a), list(b)), abs=1e-12)


class TestGreedyFilter:
    def test_every_discard_is_covered(self):
        rng = np.random.default_rng(3)
        members = rng.normal(size=(40, 6))
        eta = 0.8
        kept = greedy_low_correlation_filter(members, eta)
        kept_rows = [list(r) for r in kept]
        for row in members:
            if list(row) in kept_rows:
                continue
            assert max(qw.abs_corr(row, k) for k in kept) >= eta

    def test_kept_pairwise_below_eta(self):
        rng = np.random.default_rng(4)
        members = rng.normal(size=(30, 5))
        eta = 0.7
        kept = greedy_low_correlation_filter(members, eta)
        for i in range(len(kept)):
            for j in range(i + 1, len(kept)):
                assert qw.abs_corr(kept[i], kept[j]) < eta

    def test_eta_near_one_keeps_everything(self):
        rng = np.random.default_rng(5)
        members = rng.normal(size=(15, 6))
        kept = greedy_low_correlation_filter(members, 1.0 - 1e-12)
        assert np.array_equal(kept, members)


class TestKMeans:
    def test_under_capacity_passthrough(self):
        vectors = np.arange(9.0).reshape(3, 3)
        assert np.array_equal(qw.kmeans_reduce(vectors, 5), vectors)

    def test_single_cluster_is_mean(self):
        rng = np.random.default_rng(6)
        vectors = rng.normal(size=(12, 4))
        out = qw.kmeans_reduce(vectors, 1)
        assert out.shape == (1, 4)
        assert np.allclose(out[0], vectors.mean(axis=0), atol=1e-12)

    def test_capacity_respected(self):
        rng = np.random.default_rng(7)
        vectors = rng.normal(size=(50, 3))
        assert len(qw.kmeans_reduce(vectors, 4)) <= 4

    def test_invalid_n_w(self):
        with pytest.raises(ValueError):
            qw.kmeans_reduce(np.ones((2, 2)), 0)

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        vectors = rng.normal(size=(30, 4))
        assert np.array_equal(qw.kmeans_reduce(vectors, 3), qw.kmeans_reduce(vectors, 3))


class TestHyperParams:
    @pytest.mark.parametrize("kwargs", [
        {"n_q": 1, "delta": 1, "eta": 0.5},
        {"n_q": 2, "delta": 0, "eta": 0.5},
        {"n_q": 2, "delta": 1, "eta": 0.0},
        {"n_q": 2, "delta": 1, "eta": 1.0},
        {"n_q": 2, "delta": 1, "eta": 1.2},
        {"n_q": 2, "delta": 1, "eta": 0.5, "n_w": 0},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            qw.HyperParams(**kwargs)

    def test_eta_message_cites_open_interval(self):
        with pytest.raises(ValueError, match=r"\]0, 1\["):
            qw.HyperParams(n_q=2, delta=1, eta=1.2)


class TestFit:
    def test_matches_bruteforce_reference(self):
        frame = make_frame(n_sensors=2, length=90, seed=12)
        hyper = qw.HyperParams(n_q=2, delta=2, eta=0.95)
        model = qw.fit(frame, (0, 60), hyper)
        ref = ref_fit(frame.values.tolist(), (0, 60), 2, 2, 0.95)
        for i in range(2):
            sensor = model.sensors[i]
            expected = ref["sensors"][i]
            assert {tuple(p) for p in sensor.transitions} == expected["transitions"]
            assert set(map(tuple, sensor.bounds)) == set(expected["bounds"])
            for pair, (lo, hi) in sensor.bounds.items():
                ref_lo, ref_hi = expected["bounds"][tuple(pair)]
                assert np.allclose(lo, ref_lo, atol=1e-12)
                assert np.allclose(hi, ref_hi, atol=1e-12)
            for pair, reps in sensor.representatives.items():
                assert np.allclose(reps, expected["representatives"][tuple(pair)], atol=1e-12)

    def test_bounds_are_attained(self, toy_frame, toy_model):
        scaled = qw.apply_scaler(toy_frame, toy_model.scaler)
        delta = toy_model.hyper.delta
        for i, sensor in enumerate(toy_model.sensors):
            levels = qw.quantize_series(toy_model.quantizers[i], scaled.values[:, i])
            a, b = toy_model.train_range
            for pair, (lo, hi) in sensor.bounds.items():
                members = []
                for t in range(max(a, delta - 1), b - delta):
                    if (levels[t], levels[t + delta]) == tuple(pair):
                        members.append(
                            qw.extract_configuration(scaled, i, t, delta).components
                        )
                members = np.array(members)
                assert np.allclose(members.min(axis=0), lo, atol=1e-12)
                assert np.allclose(members.max(axis=0), hi, atol=1e-12)

    def test_deterministic(self, toy_frame):
        hyper = qw.HyperParams(n_q=4, delta=3, eta=0.9, n_w=3)
        a = qw.fit(toy_frame, (0, 150), hyper)
        b = qw.fit(toy_frame, (0, 150), hyper)
        assert a == b

    def test_training_too_short(self, toy_frame):
        with pytest.raises(ValueError, match="exceed delta"):
            qw.fit(toy_frame, (0, 5), qw.HyperParams(n_q=2, delta=10, eta=0.5))

    def test_representative_budget(self):
        for seed in range(4):
            frame = make_frame(n_sensors=2, length=200, seed=seed)
            hyper = qw.HyperParams(n_q=3, delta=4, eta=0.99, n_w=2)
            model = qw.fit(frame, (0, 150), hyper)
            dim = hyper.delta + frame.n_sensors - 1
            budget = dim * hyper.n_w * frame.n_sensors * hyper.n_q**2
            assert representative_scalar_count(model) <= budget
            for sensor in model.sensors:
                assert all(len(r) <= hyper.n_w for r in sensor.representatives.values())


class TestPersistence:
    def test_round_trip(self, toy_model, tmp_path):
        path = tmp_path / "model.json"
        qw.save_model(toy_model, path)
        loaded = qw.load_model(path)
        assert loaded == toy_model
        assert to_dict(loaded) == to_dict(toy_model)

    def test_unknown_schema_version(self, toy_model, tmp_path):
        path = tmp_path / "model.json"
        qw.save_model(toy_model, path)
        payload = path.read_text().replace('"schema_version": 1', '"schema_version": 99')
        path.write_text(payload)
        with pytest.raises(SchemaError, match="schema version"):
            qw.load_model(path)

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("{ not json")
        with pytest.raises(SchemaError, match="corrupt"):
            qw.load_model(path)

    def test_reload_scores_identically(self, toy_frame, toy_model, toy_scaled, tmp_path):
        path = tmp_path / "model.json"
        qw.save_model(toy_model, path)
        loaded = qw.load_model(path)
        spec = qw.WindowSpec(12, 4)
        a = qw.score_frame(toy_model, toy_scaled, spec, eps=1.0)
        b = qw.score_frame(loaded, toy_scaled, spec, eps=1.0)
        assert np.array_equal(a.aggregated, b.aggregated)
        assert np.array_equal(a.r_conf, b.r_conf)
