"""Discrete fractional Fourier transform and chirp generation.

Coordinates follow one convention everywhere in the package: an N-point
vector is laid out on a symmetric interval of width ``sqrt(N)`` whose
origin is bin ``N // 2``.  Time and frequency share the same unit
``1/sqrt(N)``, so a rotation by ``phi`` maps the point ``(t, f)`` of the
time-frequency plane to output coordinate ``t*cos(phi) + f*sin(phi)``.

The general-angle transform is the product of three shears::

    chirp(-tan(phi/2)) -> FFT-domain chirp(-sin(phi)) -> chirp(-tan(phi/2))

Every factor is either a unit-modulus diagonal or a unitary DFT, so the
discrete operator is unitary to rounding error and costs two FFTs plus
three pointwise products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

__all__ = [
    "ComplexSignal",
    "ChirpSpec",
    "MultCounter",
    "centered_fft",
    "centered_ifft",
    "fft",
    "ifft",
    "frft",
    "frft_many",
    "frft_mults",
    "chirp",
]


@dataclass
class ComplexSignal:
    """Complex baseband samples plus their sample rate."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")

    def __len__(self):
        return self.samples.shape[0]

    def replace(self, samples, sample_rate_hz=None):
        """Return a new signal carrying ``samples`` (same rate unless given)."""
        rate = self.sample_rate_hz if sample_rate_hz is None else sample_rate_hz
        return ComplexSignal(samples, rate)


@dataclass(frozen=True)
class ChirpSpec:
    """Linear chirp ``exp(j*pi*rho*(n*T)**2)`` over ``num_samples`` samples."""

    rho: float
    num_samples: int
    symbol_period: float = 1.0

    def __post_init__(self):
        if self.num_samples < 8:
            raise ValueError("num_samples must be >= 8")
        if not self.symbol_period > 0:
            raise ValueError("symbol_period must be positive")


@dataclass
class MultCounter:
    """Accumulates complex-multiplication counts by stage.

    One complex multiply is one unit.  An n-point radix-2 FFT is charged
    ``(n/2)*log2(n)``; pointwise products are charged one per sample.
    """

    counts: dict = field(default_factory=dict)

    def add(self, stage, n):
        self.counts[stage] = self.counts.get(stage, 0) + int(n)

    @property
    def total(self):
        return sum(self.counts.values())


def _fft_mults(n):
    return int(round(0.5 * n * np.log2(n))) if n > 1 else 0


def frft_mults(n):
    """Complex multiplications charged for one n-point :func:`frft`."""
    return 2 * _fft_mults(n) + 3 * n


def _as_array(x):
    if isinstance(x, ComplexSignal):
        return x.samples
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional signal")
    return arr


def _wrap(x, out):
    if isinstance(x, ComplexSignal):
        return x.replace(out)
    return out


def fft(x):
    """Unitary DFT (``norm='ortho'``)."""
    arr = _as_array(x)
    if arr.size == 0:
        raise ValueError("fft of an empty signal")
    return _wrap(x, np.fft.fft(arr, norm="ortho"))


def ifft(x):
    """Inverse of :func:`fft`."""
    arr = _as_array(x)
    if arr.size == 0:
        raise ValueError("ifft of an empty signal")
    return _wrap(x, np.fft.ifft(arr, norm="ortho"))


def centered_fft(arr):
    """Unitary DFT with both axes centred on bin ``N // 2``.

    ``X[k] = N**-0.5 * sum_n x[n] exp(-2j*pi*(n-c)*(k-c)/N)``, ``c = N//2``.
    """
    arr = np.asarray(arr, dtype=np.complex128)
    return np.fft.fftshift(np.fft.fft(np.fft.ifftshift(arr), norm="ortho"))


def centered_ifft(arr):
    """Inverse of :func:`centered_fft`."""
    arr = np.asarray(arr, dtype=np.complex128)
    return np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(arr), norm="ortho"))


def _grid(n):
    return (np.arange(n) - n // 2) / np.sqrt(n)


@lru_cache(maxsize=32)
def _shifted_grid_sq(n):
    # squared centred coordinate, in FFT (ifftshift) order
    g = np.fft.ifftshift(_grid(n)) ** 2
    g.flags.writeable = False
    return g


def _reverse(arr):
    # index reversal about the centre bin: n - c -> c - n (mod N)
    n = arr.shape[-1]
    idx = (2 * (n // 2) - np.arange(n)) % n
    return arr[..., idx]


def _shear_rotation(arr, phis):
    """Three-shear rotation of ``arr`` (last axis) for each angle in ``phis``.

    ``phis`` is a 1-D array of angles in ``[-pi/2, pi/2]``; returns one row
    per angle.
    """
    n = arr.shape[-1]
    u2 = _shifted_grid_sq(n)
    phis = np.asarray(phis, dtype=float)[:, None]
    a = np.exp(-1j * np.pi * np.tan(phis / 2) * u2)
    b = np.exp(-1j * np.pi * np.sin(phis) * u2)
    xs = np.fft.ifftshift(arr)
    out = sfft.ifft(b * sfft.fft(a * xs, axis=-1, norm="ortho"), axis=-1, norm="ortho")
    out *= a
    out *= np.exp(0.5j * phis)
    return np.fft.fftshift(out, axes=-1)


def _reduce(phi):
    return float(np.remainder(phi + np.pi, 2 * np.pi) - np.pi)  # (-pi, pi]


def _special(arr, phi):
    quarter = phi / (np.pi / 2)
    nearest = round(quarter)
    if abs(quarter - nearest) >= 1e-12:
        return None
    k = nearest % 4
    if k == 0:
        return arr.copy()
    if k == 1:
        return centered_fft(arr)
    if k == 2:
        return _reverse(arr)
    return centered_ifft(arr)


def frft(x, phi, counter=None):
    """Fractional Fourier transform by rotation angle ``phi`` (radians).

    ``phi = pi/2`` is the centred unitary DFT, ``phi = pi`` reverses the
    index about bin ``N // 2`` and ``phi = 0`` is the identity.  Angles are
    reduced modulo ``2*pi``; the shear factorisation is only used on
    ``|phi| <= pi/2`` after peeling off a reversal.

    Parameters
    ----------
    x : ComplexSignal or array_like
        Input samples.
    phi : float
        Rotation angle in radians.
    counter : MultCounter, optional
        Receives the multiplication count under stage ``"frft"``.

    Returns
    -------
    ComplexSignal or numpy.ndarray
        Same type and length as ``x``.
    """
    arr = _as_array(x)
    n = arr.shape[0]
    if n == 0:
        raise ValueError("frft of an empty signal")
    if counter is not None:
        counter.add("frft", frft_mults(n))

    phi = _reduce(phi)
    out = _special(arr, phi)
    if out is None:
        if abs(phi) > np.pi / 2:
            arr = _reverse(arr)
            phi -= np.copysign(np.pi, phi)
        out = _shear_rotation(arr, [phi])[0]
    return _wrap(x, out)


def frft_many(x, phis, counter=None):
    """Evaluate :func:`frft` at every angle in ``phis``.

    Returns an array of shape ``(len(phis), len(x))``.  Angles inside
    ``[-pi/2, pi/2]`` are transformed in one vectorised batch.
    """
    arr = _as_array(x)
    n = arr.shape[0]
    if n == 0:
        raise ValueError("frft of an empty signal")
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    out = np.empty((phis.size, n), dtype=np.complex128)
    batch = []
    for i, phi in enumerate(phis):
        red = _reduce(phi)
        if _special(arr[:1], red) is None and abs(red) < np.pi / 2:
            batch.append(i)
        else:
            out[i] = frft(arr, phi)
    if batch:
        out[batch] = _shear_rotation(arr, [_reduce(phis[i]) for i in batch])
    if counter is not None:
        for _ in range(phis.size):
            counter.add("frft", frft_mults(n))
    return out


def chirp(spec):
    """Sample ``exp(j*pi*rho*(t*T)**2)`` with ``t = n - num_samples // 2``.

    Time is centred on bin ``num_samples // 2`` so the chirp's zero-frequency
    point coincides with the transform origin used by :func:`frft`.
    """
    n = np.arange(spec.num_samples) - spec.num_samples // 2
    t = n * spec.symbol_period
    phase = np.pi * spec.rho * t**2
    return ComplexSignal(np.exp(1j * phase), 1.0 / spec.symbol_period)
