"""Linear channel impairments and receiver resampling.

The simulator applies impairments in a fixed order::

    CD -> FO -> resample to the receiver rate -> TO -> AWGN

Dispersion uses the all-pass ``H(w) = exp(-1j * beta2/2 * w**2 * z)`` with
numpy's ``exp(-1j*w*t)`` forward FFT.  Under this sign an impulse spreads
into a chirp whose optimal FrFT angle obeys
``tan(phi_cd) = -sps * 2*pi*beta2*z / (ns * T**2)``, the relation the
estimator inverts.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy import signal as sps_signal

from .frft_core import ComplexSignal

__all__ = [
    "C_NM_PER_PS",
    "ALLOWED_RX_SPS",
    "ChannelConfig",
    "d_to_beta2",
    "beta2z_to_cd",
    "cd_to_beta2z",
    "apply_cd",
    "apply_fo",
    "apply_to",
    "add_awgn",
    "resample",
    "sps_ratio",
]

C_NM_PER_PS = 299792.458  # speed of light
ALLOWED_RX_SPS = (1.0, 1.25, 2.0)


@dataclass(frozen=True)
class ChannelConfig:
    """Ground-truth impairments for one transmission."""

    dispersion_ps_nm_km: float = 17.0
    distance_km: float = 0.0
    fo_hz: float = 0.0
    to_samples: int = 0
    snr_db: float = 20.0
    rx_sps: float = 2.0
    wavelength_nm: float = 1550.0

    def __post_init__(self):
        if self.distance_km < 0:
            raise ValueError("distance_km must be >= 0")
        if float(self.rx_sps) not in ALLOWED_RX_SPS:
            raise ValueError(f"rx_sps must be one of {ALLOWED_RX_SPS}")
        if np.isnan(self.snr_db):
            raise ValueError("snr_db must not be NaN")

    @property
    def beta2(self):
        return d_to_beta2(self.dispersion_ps_nm_km, self.wavelength_nm)

    @property
    def cd_ps_nm(self):
        return self.dispersion_ps_nm_km * self.distance_km


def d_to_beta2(d, wavelength_nm=1550.0):
    """Dispersion parameter ps/(nm km) -> GVD ``beta2`` in ps^2/km."""
    if wavelength_nm <= 0:
        raise ValueError("wavelength must be positive")
    return -d * wavelength_nm**2 / (2 * np.pi * C_NM_PER_PS)


def beta2z_to_cd(beta2z, wavelength_nm=1550.0):
    """Accumulated ``beta2*z`` (ps^2) -> accumulated dispersion in ps/nm."""
    return -beta2z * 2 * np.pi * C_NM_PER_PS / wavelength_nm**2


def cd_to_beta2z(cd_ps_nm, wavelength_nm=1550.0):
    return d_to_beta2(cd_ps_nm, wavelength_nm)


def apply_cd(x, beta2, z):
    """Frequency-domain all-pass dispersion; ``beta2`` in ps^2/km, ``z`` in km."""
    if len(x) < 2:
        raise ValueError("apply_cd needs at least two samples")
    if z == 0 or beta2 == 0:
        return x.replace(x.samples.copy())
    w = 2 * np.pi * np.fft.fftfreq(len(x), d=1.0 / x.sample_rate_hz) * 1e-12  # rad/ps
    h = np.exp(-0.5j * beta2 * z * w**2)
    return x.replace(np.fft.ifft(np.fft.fft(x.samples) * h))


def apply_fo(x, fo_hz):
    """Multiply sample ``n`` by ``exp(2j*pi*fo_hz*n/fs)``."""
    n = np.arange(len(x))
    return x.replace(x.samples * np.exp(2j * np.pi * fo_hz / x.sample_rate_hz * n))


def apply_to(x, shift):
    """Delay by ``shift`` samples (negative advances), zero-filling the gap."""
    shift = int(shift)
    n = len(x)
    if abs(shift) >= n:
        raise ValueError("|shift| must be smaller than the signal length")
    out = np.zeros(n, dtype=np.complex128)
    if shift >= 0:
        out[shift:] = x.samples[: n - shift]
    else:
        out[: n + shift] = x.samples[-shift:]
    return x.replace(out)


def add_awgn(x, snr_db, seed):
    """Add circular complex Gaussian noise at ``snr_db`` below the measured power."""
    if np.isinf(snr_db) and snr_db > 0:
        return x.replace(x.samples.copy())
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite or +inf")
    rng = np.random.default_rng(seed)
    power = np.mean(np.abs(x.samples) ** 2)
    sigma2 = power / 10 ** (snr_db / 10)
    noise = rng.standard_normal(len(x)) + 1j * rng.standard_normal(len(x))
    return x.replace(x.samples + np.sqrt(sigma2 / 2) * noise)


def sps_ratio(tx_sps, rx_sps):
    """Coprime ``(p, q)`` with ``p/q == rx_sps/tx_sps``."""
    num = int(round(rx_sps * 4))
    den = int(round(tx_sps * 4))
    g = gcd(num, den)
    return num // g, den // g


def resample(x, p, q):
    """Rational rate change by ``p/q`` (polyphase, Kaiser anti-alias filter).

    ``resample_poly`` compensates the filter delay, so output sample ``m``
    sits at input time ``m*q/p``.
    """
    p, q = int(p), int(q)
    if p < 1 or q < 1:
        raise ValueError("p and q must be >= 1")
    if gcd(p, q) != 1:
        raise ValueError("p and q must be coprime")
    if p == q:
        return x.replace(x.samples.copy())
    out = sps_signal.resample_poly(x.samples, p, q)
    return ComplexSignal(out, x.sample_rate_hz * p / q)
