"""scikit-learn style wrappers around the estimation chains.

Each estimator treats one captured frame as one sample. ``fit`` only
builds the training sequence (there is nothing to learn from data), and
``predict`` returns one ``[cd_ps_nm, fo_hz, to_samples]`` row per frame.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .baselines import traditional_estimate, ts_reference
from .channel import ALLOWED_RX_SPS
from .estimator import EstimationError, SearchConfig, estimate
from .frft_core import ComplexSignal, MultCounter
from .framing import generate_ts

__all__ = ["check_frames", "JointEstimator", "TraditionalEstimator"]


def check_frames(X):
    """Validate ``X`` as one frame or a batch of frames.

    Accepts a 1-D complex array, a 2-D array (rows are frames), a list of
    1-D arrays, or ``ComplexSignal`` objects.  Returns a list of 1-D
    complex128 arrays.
    """
    if isinstance(X, ComplexSignal):
        X = [X.samples]
    elif isinstance(X, np.ndarray) and X.ndim == 1:
        X = [X]
    elif isinstance(X, np.ndarray) and X.ndim == 2:
        X = list(X)
    elif isinstance(X, np.ndarray):
        raise ValueError(f"expected 1-D or 2-D input, got {X.ndim}-D")
    frames = []
    for x in X:
        x = x.samples if isinstance(x, ComplexSignal) else x
        a = np.asarray(x)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("each frame must be a non-empty 1-D array")
        if not np.issubdtype(a.dtype, np.number):
            raise TypeError(f"frames must be numeric, got {a.dtype}")
        a = a.astype(np.complex128, copy=False)
        if not np.all(np.isfinite(a)):
            raise ValueError("frames contain NaN or inf")
        frames.append(a)
    if not frames:
        raise ValueError("no frames given")
    return frames


class _SyncBase(BaseEstimator):
    def _check_params(self):
        if self.sps not in ALLOWED_RX_SPS:
            raise ValueError(f"sps must be one of {ALLOWED_RX_SPS}")
        if self.baud <= 0:
            raise ValueError("baud must be positive")

    def fit(self, X=None, y=None):
        """Build the training sequence. ``X`` and ``y`` are ignored."""
        self._check_params()
        self.ts_ = generate_ts(self.alpha, self.ns)
        self.search_ = SearchConfig(iterations=self.iterations)
        self.fs_ = self.baud * self.sps
        return self

    def _estimate_one(self, x):
        raise NotImplementedError

    def predict(self, X):
        """Return an ``(n_frames, 3)`` array of ``[cd_ps_nm, fo_hz, to_samples]``.

        Frames where the estimator fails give a row of NaN.
        """
        check_is_fitted(self, "ts_")
        out = np.full((0, 3), np.nan)
        rows = []
        for x in check_frames(X):
            try:
                e = self._estimate_one(x)
            except EstimationError:
                rows.append([math.nan] * 3)
            else:
                rows.append([e.cd_total, e.fo_hz, e.to_samples])
        return np.asarray(rows, dtype=float) if rows else out

    def score(self, X, y):
        """Negative mean absolute CD error in ps/nm (higher is better)."""
        y = np.asarray(y, dtype=float)
        pred = self.predict(X)
        cd_true = y if y.ndim == 1 else y[:, 0]
        return -float(np.nanmean(np.abs(pred[:, 0] - cd_true)))


class JointEstimator(_SyncBase):
    """Joint CD / FO / TO estimation from the dual-chirp training sequence.

    Parameters
    ----------
    alpha : float
        Chirp rotation angle of the training sequence, in (0, pi/2).
    ns : int
        Training-sequence length in symbols.
    sps : float
        Receiver samples per symbol.
    baud : float
        Symbol rate in Hz.
    iterations : int
        Number of fine angle-search passes.
    wavelength_nm : float
    """

    def __init__(self, alpha=math.pi / 4, ns=1024, sps=2.0, baud=60e9,
                 iterations=2, wavelength_nm=1550.0):
        self.alpha = alpha
        self.ns = ns
        self.sps = sps
        self.baud = baud
        self.iterations = iterations
        self.wavelength_nm = wavelength_nm

    def _estimate_one(self, x):
        rx = ComplexSignal(x, self.fs_)
        return estimate(rx, self.ts_, self.sps, self.fs_, self.search_,
                        MultCounter(), self.wavelength_nm)

    def estimate(self, x):
        """Full ``JointEstimate`` (peaks, window, counts) for a single frame."""
        check_is_fitted(self, "ts_")
        return self._estimate_one(check_frames(x)[0])


class TraditionalEstimator(_SyncBase):
    """Sequential baseline: TS location, FrFT CD scan, 4th-power FOE, xcorr TOE."""

    def __init__(self, alpha=math.pi / 4, ns=1024, sps=2.0, baud=60e9,
                 iterations=2, tx_sps=2, rolloff=0.1, wavelength_nm=1550.0):
        self.alpha = alpha
        self.ns = ns
        self.sps = sps
        self.baud = baud
        self.iterations = iterations
        self.tx_sps = tx_sps
        self.rolloff = rolloff
        self.wavelength_nm = wavelength_nm

    def fit(self, X=None, y=None):
        super().fit(X, y)
        self.ref_ = ts_reference(self.ts_, self.tx_sps, self.sps, self.rolloff, self.baud)
        return self

    def _estimate_one(self, x):
        rx = ComplexSignal(x, self.fs_)
        return traditional_estimate(rx, self.ts_, self.ref_, self.sps, self.fs_,
                                    self.search_, MultCounter(),
                                    wavelength_nm=self.wavelength_nm)
