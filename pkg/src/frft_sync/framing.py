"""Training sequence, QAM payload and transmit frame construction."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .frft_core import ComplexSignal, frft

__all__ = [
    "Modulation",
    "TrainingSequence",
    "FrameConfig",
    "Frame",
    "generate_ts",
    "qam_constellation",
    "rrc_taps",
    "shape_symbols",
    "generate_payload",
    "assemble_frame",
]

DEFAULT_ALPHA = np.pi / 4
DEFAULT_NS = 1024


class Modulation(str, Enum):
    QPSK = "QPSK"
    QAM16 = "16QAM"


@dataclass(frozen=True)
class TrainingSequence:
    """Sum of two opposite-angle chirps, one sample per symbol.

    Attributes
    ----------
    alpha : float
        Rotation angle ``order_p * pi / 2`` used to build the chirps.
    samples : ComplexSignal
        ``ns`` samples at unit symbol rate.
    phi1, phi2 : float
        Angles at which the undistorted chirps collapse to impulses,
        ``+-(1 - order_p) * pi / 2``.
    """

    alpha: float
    ns: int
    samples: ComplexSignal

    @property
    def order_p(self):
        return self.alpha / (np.pi / 2)

    @property
    def phi1(self):
        return (1.0 - self.order_p) * np.pi / 2

    @property
    def phi2(self):
        return -(1.0 - self.order_p) * np.pi / 2


@dataclass(frozen=True)
class FrameConfig:
    payload_symbols: int = 31744
    modulation: Modulation = Modulation.QAM16
    rolloff: float = 0.1
    tx_sps: int = 2
    rrc_span: int = 64
    baud: float = 60e9

    def __post_init__(self):
        if self.payload_symbols < 0:
            raise ValueError("payload_symbols must be >= 0")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must lie in [0, 1]")
        if int(self.tx_sps) != self.tx_sps or self.tx_sps < 2:
            raise ValueError("tx_sps must be an integer >= 2")
        object.__setattr__(self, "modulation", Modulation(self.modulation))


@dataclass(frozen=True)
class Frame:
    """Shaped transmit frame and the sample index where the TS starts."""

    signal: ComplexSignal
    ts_start: int
    ts_len: int
    tx_sps: int


def generate_ts(alpha=DEFAULT_ALPHA, ns=DEFAULT_NS):
    """Build the chirp-pair training sequence ``F^a[dc] + F^-a[dc]``.

    ``dc`` is the unit-energy constant vector of length ``ns``.

    Raises
    ------
    ValueError
        If ``alpha`` is outside ``(0, pi/2)`` or ``ns`` is not a power of
        two of at least 64.
    """
    if not 0.0 < alpha < np.pi / 2:
        raise ValueError("alpha must lie in (0, pi/2)")
    ns = int(ns)
    if ns < 64 or ns & (ns - 1):
        raise ValueError("ns must be a power of two >= 64")
    dc = np.full(ns, 1.0 / np.sqrt(ns), dtype=np.complex128)
    ts = frft(dc, alpha) + frft(dc, -alpha)
    return TrainingSequence(alpha=float(alpha), ns=ns, samples=ComplexSignal(ts, 1.0))


def qam_constellation(modulation):
    """Gray-mapped constellation indexed by the integer value of the bits."""
    modulation = Modulation(modulation)
    if modulation is Modulation.QPSK:
        levels = np.array([-1.0, 1.0])
        bits_per_axis = 1
    else:
        # Gray order 00, 01, 11, 10 -> -3, -1, 1, 3
        levels = np.array([-3.0, -1.0, 3.0, 1.0])
        bits_per_axis = 2
    m = 1 << bits_per_axis
    idx = np.arange(m * m)
    points = levels[idx >> bits_per_axis] + 1j * levels[idx & (m - 1)]
    return points / np.sqrt(np.mean(np.abs(points) ** 2))


def rrc_taps(sps, rolloff, span):
    """Unit-energy root-raised-cosine taps spanning ``span`` symbols."""
    t = np.arange(-span * sps // 2, span * sps // 2 + 1) / sps
    h = np.empty_like(t)
    b = rolloff
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            h[i] = 1.0 + b * (4 / np.pi - 1)
        elif b > 0 and abs(abs(ti) - 1 / (4 * b)) < 1e-12:
            h[i] = b / np.sqrt(2) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * b))
                + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
            )
        else:
            num = np.sin(np.pi * ti * (1 - b)) + 4 * b * ti * np.cos(np.pi * ti * (1 + b))
            h[i] = num / (np.pi * ti * (1 - (4 * b * ti) ** 2))
    return h / np.sqrt(np.sum(h**2))


def shape_symbols(symbols, sps, rolloff, span=64):
    """Upsample by ``sps`` and RRC-filter, delay-compensated.

    Output sample ``k*sps`` is aligned with symbol ``k``; filter tails past
    either end are discarded so the output length is ``len(symbols)*sps``.
    Average output power equals the average symbol power.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.size == 0:
        return np.zeros(0, dtype=np.complex128)
    up = np.zeros(symbols.size * sps, dtype=np.complex128)
    up[::sps] = symbols
    h = rrc_taps(sps, rolloff, span) * np.sqrt(sps)
    full = np.convolve(up, h)
    delay = (h.size - 1) // 2
    return full[delay : delay + up.size]


def generate_payload(cfg, seed):
    """Pseudo-random Gray-mapped QAM symbols, RRC-shaped at ``cfg.tx_sps``.

    The returned signal's ``sample_rate_hz`` is ``cfg.baud * cfg.tx_sps``.
    """
    rng = np.random.default_rng(seed)
    points = qam_constellation(cfg.modulation)
    symbols = points[rng.integers(0, points.size, cfg.payload_symbols)]
    shaped = shape_symbols(symbols, cfg.tx_sps, cfg.rolloff, cfg.rrc_span)
    return ComplexSignal(shaped, cfg.baud * cfg.tx_sps)


def assemble_frame(ts, payload, tx_sps, baud=60e9, rolloff=0.1, span=64, ts_power=1.0):
    """Prepend the RRC-shaped training sequence to an already shaped payload.

    The TS symbols are scaled to mean power ``ts_power`` (the payload symbol
    power by default) before passing through the same shaping chain as the
    payload.
    """
    tx_sps = int(tx_sps)
    fs = baud * tx_sps
    if len(payload) and not np.isclose(payload.sample_rate_hz, fs):
        raise ValueError(
            f"payload is at {payload.sample_rate_hz / baud:g} samples/symbol, frame at {tx_sps}"
        )
    sym = ts.samples.samples
    sym = sym * np.sqrt(ts_power / np.mean(np.abs(sym) ** 2))
    shaped_ts = shape_symbols(sym, tx_sps, rolloff, span)
    out = np.concatenate([shaped_ts, payload.samples])
    return Frame(ComplexSignal(out, fs), ts_start=0, ts_len=shaped_ts.size, tx_sps=tx_sps)
