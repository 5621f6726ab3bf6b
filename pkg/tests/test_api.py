import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from frft_sync.api import JointEstimator, TraditionalEstimator, check_frames
from frft_sync.frft_core import ComplexSignal
from frft_sync.harness import TrialConfig, simulate_capture


@pytest.fixture(scope="module")
def frames():
    cfg = TrialConfig(distance_km=800, fo_hz=2e9, sps=1.25, payload_symbols=8192)
    caps = [simulate_capture(cfg, s) for s in range(2)]
    return caps


def test_params_round_trip():
    est = JointEstimator(sps=1.25, iterations=3)
    params = est.get_params()
    assert params["sps"] == 1.25 and params["iterations"] == 3
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(ns=512)
    assert est.ns == 512


def test_fit_validates_params():
    with pytest.raises(ValueError):
        JointEstimator(sps=3.0).fit()
    with pytest.raises(ValueError):
        JointEstimator(baud=-1).fit()
    with pytest.raises(ValueError):
        JointEstimator(alpha=2.0).fit()


def test_predict_requires_fit():
    with pytest.raises(NotFittedError):
        JointEstimator().predict(np.ones(4096, complex))


def test_check_frames():
    assert len(check_frames(np.ones(8))) == 1
    assert len(check_frames(np.ones((3, 8)))) == 3
    assert len(check_frames([np.ones(8), np.ones(5)])) == 2
    assert check_frames(ComplexSignal(np.ones(4), 1.0))[0].dtype == np.complex128
    for bad in ([], np.ones((2, 2, 2)), [np.array([])], [np.array([1, np.nan])], [np.array(["a"])]):
        with pytest.raises((ValueError, TypeError)):
            check_frames(bad)


def test_predict_shape_and_accuracy(frames):
    est = JointEstimator(sps=1.25).fit()
    pred = est.predict([c.rx for c in frames])
    assert pred.shape == (2, 3)
    for row, c in zip(pred, frames):
        assert abs(row[0] - 800 * 17) < 300
        assert abs(row[1] - 2e9) < 30e6
        assert abs(round(row[2]) - c.to_true) <= 2
    assert est.score([c.rx for c in frames], [13600.0, 13600.0]) > -300


def test_estimate_returns_details(frames):
    e = JointEstimator(sps=1.25).fit().estimate(frames[0].rx)
    assert len(e.peaks) == 2 and e.angle_evaluations > 0


def test_failed_frame_gives_nan():
    # a silent frame has no chirp peaks at all
    pred = JointEstimator(sps=1.0).fit().predict(np.zeros((2, 6000), complex))
    assert pred.shape == (2, 3)
    assert np.all(np.isnan(pred))


def test_traditional_estimator(frames):
    est = TraditionalEstimator(sps=1.25).fit()
    assert est.ref_.sample_rate_hz == pytest.approx(75e9)
    pred = est.predict(frames[0].rx)
    assert abs(pred[0, 1] - 2e9) < 30e6
    assert abs(pred[0, 2] - frames[0].to_true) <= 2
