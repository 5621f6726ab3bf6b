import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from frft_sync.frft_core import (
    ChirpSpec,
    ComplexSignal,
    MultCounter,
    chirp,
    fft,
    frft,
    frft_many,
    frft_mults,
    ifft,
)

import oracles


def rel(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b)


def random_signal(n, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def gaussian(n, width=1.0, shift=0.0):
    u = oracles.grid(n)
    return np.exp(-np.pi * ((u - shift) / width) ** 2).astype(complex)


# -- types --------------------------------------------------------------------

def test_complex_signal_validates():
    # an empty carrier is allowed (empty payload); transforms reject it
    assert len(ComplexSignal(np.array([], dtype=complex), 1.0)) == 0
    with pytest.raises(ValueError):
        ComplexSignal(np.ones((2, 2)), 1.0)
    with pytest.raises(ValueError):
        ComplexSignal(np.ones(4), 0.0)
    s = ComplexSignal(np.ones(4), 2.0)
    assert len(s) == 4 and s.samples.dtype == np.complex128


def test_chirp_spec_validates():
    with pytest.raises(ValueError):
        ChirpSpec(rho=1.0, num_samples=4)
    with pytest.raises(ValueError):
        ChirpSpec(rho=1.0, num_samples=16, symbol_period=0.0)


# -- fft ----------------------------------------------------------------------

def test_fft_impulse_is_flat():
    x = np.zeros(64, complex)
    x[0] = 1
    np.testing.assert_allclose(fft(x), np.full(64, 1 / 8), atol=1e-12)


@given(st.integers(1, 2048), st.integers(0, 2**32 - 1))
def test_fft_round_trip_and_parseval(n, seed):
    x = random_signal(n, seed)
    assert rel(ifft(fft(x)), x) < 1e-9
    assert abs(np.linalg.norm(fft(x)) - np.linalg.norm(x)) < 1e-9 * np.linalg.norm(x)


def test_fft_preserves_signal_type():
    s = ComplexSignal(random_signal(32, 0), 5.0)
    out = fft(s)
    assert isinstance(out, ComplexSignal) and out.sample_rate_hz == 5.0


def test_fft_rejects_empty():
    with pytest.raises(ValueError):
        fft(np.array([], dtype=complex))


# -- frft special cases ---------------------------------------------------------

def test_frft_zero_is_identity():
    x = random_signal(300, 1)
    assert np.max(np.abs(frft(x, 0.0) - x)) < 1e-9


def test_frft_of_constant_at_quarter_turn_is_centre_impulse():
    n = 256
    y = frft(np.ones(n), np.pi / 2)
    e = np.abs(y) ** 2
    assert e[n // 2 - 1 : n // 2 + 2].sum() >= 0.9 * e.sum()


@pytest.mark.parametrize("n", [64, 255, 1024])
def test_special_angles(n):
    x = random_signal(n, n)
    idx = (2 * (n // 2) - np.arange(n)) % n
    cases = {
        0.0: x,
        np.pi / 2: oracles.centred_dft(x),
        np.pi: x[idx],
        3 * np.pi / 2: np.conj(oracles.centred_dft(np.conj(x))),
        2 * np.pi: x,
        -np.pi / 2: np.conj(oracles.centred_dft(np.conj(x))),
    }
    for phi, want in cases.items():
        assert rel(frft(x, phi), want) < 1e-6, phi


def test_frft_rejects_empty():
    with pytest.raises(ValueError):
        frft(np.array([], dtype=complex), 0.3)


def test_frft_preserves_type_and_length():
    s = ComplexSignal(random_signal(100, 2), 3.0)
    out = frft(s, 0.4)
    assert isinstance(out, ComplexSignal) and len(out) == 100 and out.sample_rate_hz == 3.0


# -- properties ----------------------------------------------------------------

@given(st.integers(256, 4096), st.floats(-10, 10), st.integers(0, 2**32 - 1))
def test_unitarity(n, phi, seed):
    x = random_signal(n, seed)
    nx = np.linalg.norm(x)
    assert abs(np.linalg.norm(frft(x, phi)) - nx) <= 1e-6 * nx


@given(st.floats(0.15, 0.85), st.floats(0.15, 0.85), st.sampled_from([128, 256, 1000]))
def test_additivity_on_gaussians(a, b, n):
    phi_a, phi_b = a * np.pi, b * np.pi
    if not 0.15 < a + b < 0.85:
        phi_b = (0.85 - a) * np.pi if a + b >= 0.85 else phi_b
    g = gaussian(n, 1.3, 0.4)
    assert rel(frft(frft(g, phi_a), phi_b), frft(g, phi_a + phi_b)) <= 1e-2


def test_additivity_example():
    g = gaussian(512)
    assert rel(frft(frft(g, 0.3), 0.4), frft(g, 0.7)) <= 1e-2


@pytest.mark.parametrize("n", [16, 17, 64, 100, 256])
@pytest.mark.parametrize("phi", [0.05, 0.3, 1.0, -1.2, 2.0, 4.0, -3.0])
def test_matches_direct_kernel_summation(n, phi):
    x = random_signal(n, 7 * n)
    assert rel(frft(x, phi), oracles.dense_frft(x, phi)) <= 1e-2
    # in practice the agreement is at rounding level
    assert rel(frft(x, phi), oracles.dense_frft(x, phi)) <= 1e-10


@pytest.mark.parametrize("n", [64, 128, 256])
@pytest.mark.parametrize("phi", [0.3, 1.0, 2.0, -0.7, 4.0])
def test_matches_hermite_gauss_expansion(n, phi):
    kmax = int(0.4 * n)
    basis = oracles.hermite_gauss(n, kmax)
    rng = np.random.default_rng(n)
    c = rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)
    x = c @ basis
    assert rel(frft(x, phi), oracles.hermite_frft(c, phi, basis)) <= 1e-2


@pytest.mark.parametrize("k", [0, 1, 2, 5, 12])
def test_hermite_gauss_eigenfunctions(k):
    h = oracles.hermite_gauss(256, k + 1)[k]
    for phi in (0.2, 0.9, -1.4):
        assert rel(frft(h, phi), np.exp(-1j * k * phi) * h) < 1e-9


@pytest.mark.parametrize("phi", [0.2, 0.7, 1.3, -0.9])
def test_matches_continuous_kernel(phi):
    n = 256

    def f(t):
        return np.exp(-np.pi * (t - 0.5) ** 2 / 1.7) * np.exp(2j * np.pi * 0.8 * t)

    x = f(oracles.grid(n)) * n**-0.25
    assert rel(frft(x, phi), oracles.continuous_frft(f, phi, n)) <= 1e-2


def test_chirp_focuses_at_matched_angle():
    # exp(j*pi*rho*t**2) collapses at phi = -arctan(1 / (rho*N*T**2))
    n, T = 1024, 1.0
    rho = 1 / (n * T**2)
    c = chirp(ChirpSpec(rho, n, T)).samples / np.sqrt(n)
    phis = np.linspace(-np.pi / 2, np.pi / 2, 721)
    peak = [np.abs(frft(c, p)).max() for p in phis]
    assert abs(phis[int(np.argmax(peak))] - (-np.arctan(1.0))) < 0.005


# -- batch evaluation and counting ------------------------------------------------

def test_frft_many_matches_frft():
    x = random_signal(200, 3)
    phis = [-4.0, -np.pi / 2, -0.3, 0.0, 0.5, np.pi / 2, 2.5, np.pi]
    rows = frft_many(x, phis)
    for phi, row in zip(phis, rows):
        np.testing.assert_allclose(row, frft(x, phi), atol=1e-12)


def test_counter_charges_each_transform():
    c = MultCounter()
    frft(np.ones(1024), 0.3, counter=c)
    frft_many(np.ones(1024), [0.1, 0.2, 0.3], counter=c)
    # 2 FFTs of (n/2) log2 n plus 3 pointwise chirps
    assert frft_mults(1024) == 2 * 512 * 10 + 3 * 1024
    assert c.total == 4 * frft_mults(1024) and c.counts == {"frft": 4 * frft_mults(1024)}


# -- chirp ---------------------------------------------------------------------

def test_chirp_zero_rate_is_ones():
    np.testing.assert_array_equal(chirp(ChirpSpec(0.0, 16)).samples, np.ones(16))


def test_chirp_phases_before_centering():
    # direct evaluation of exp(j*pi*rho*(nT)**2) for n = 0..3
    want = np.array([0, np.pi / 2, 2 * np.pi, 9 * np.pi / 2])
    n = np.arange(4)
    np.testing.assert_allclose(np.pi * 0.5 * (n * 1.0) ** 2, want)
    # the generator uses t = n - N//2, so the same phases appear shifted
    spec = ChirpSpec(0.5, 8, 1.0)
    s = chirp(spec).samples
    np.testing.assert_allclose(s[4:8], np.exp(1j * want), atol=1e-12)


@given(st.floats(-5, 5), st.integers(8, 512), st.floats(0.1, 10))
def test_chirp_unit_modulus(rho, n, T):
    s = chirp(ChirpSpec(rho, n, T))
    assert len(s) == n
    np.testing.assert_allclose(np.abs(s.samples), 1.0, atol=1e-12)
    assert math.isclose(s.sample_rate_hz, 1 / T)
