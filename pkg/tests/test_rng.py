from functools import partial

import numpy as np
import pytest

from qnet import _rng


def draw(seed, stream, t):
    return _rng.trial_rng(seed, stream, t).random(3).tolist()


def test_streams_are_deterministic_and_distinct():
    assert draw(1, "a", 0) == draw(1, "a", 0)
    assert draw(1, "a", 0) != draw(1, "a", 1)
    assert draw(1, "a", 0) != draw(1, "b", 0)
    assert draw(1, "a", 0) != draw(2, "a", 0)
    assert _rng.stream_id("a") == _rng.stream_id("a") and _rng.stream_id(5) == 5


def test_map_trials_preserves_order():
    fn = partial(draw, 3, "order")
    serial = _rng.map_trials(fn, 25, workers=1)
    assert serial == [draw(3, "order", t) for t in range(25)]
    assert _rng.map_trials(fn, 25, workers=2) == serial
    assert _rng.map_trials(fn, 25, workers=2, chunk=4) == serial
    assert _rng.map_trials(fn, 0, workers=2) == []


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv(_rng.WORKERS_ENV, "3")
    assert _rng.default_workers() == 3
    monkeypatch.setenv(_rng.WORKERS_ENV, "0")
    assert _rng.default_workers() == 1
    monkeypatch.delenv(_rng.WORKERS_ENV)
    assert _rng.default_workers() >= 1


def test_stderr_helpers():
    assert _rng.binomial_stderr(25, 100) == pytest.approx(np.sqrt(0.25 * 0.75 / 100))
    assert _rng.binomial_stderr(0, 10) == 0.0
    assert np.isnan(_rng.binomial_stderr(0, 0))
    assert _rng.combine_stderr([3.0, 4.0]) == pytest.approx(5.0)
