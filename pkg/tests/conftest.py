from __future__ import annotations

import numpy as np
import pytest

import qwatch as qw


def make_frame(n_sensors: int = 2, length: int = 240, seed: int = 5) -> qw.SensorFrame:
    """Random-walk toy frame, deterministic per seed."""
    rng = np.random.default_rng(seed)
    values = np.cumsum(rng.normal(size=(length, n_sensors)), axis=0)
    names = tuple(f"s{i}" for i in range(n_sensors))
    return qw.SensorFrame(names, np.arange(float(length)), values)


@pytest.fixture(scope="session")
def toy_frame() -> qw.SensorFrame:
    return make_frame(n_sensors=2, length=240, seed=5)


@pytest.fixture(scope="session")
def toy_model(toy_frame) -> qw.NormalityModel:
    hyper = qw.HyperParams(n_q=3, delta=2, eta=0.9)
    return qw.fit(toy_frame, (0, 160), hyper)


@pytest.fixture(scope="session")
def toy_scaled(toy_frame, toy_model) -> qw.SensorFrame:
    return qw.apply_scaler(toy_frame, toy_model.scaler)
