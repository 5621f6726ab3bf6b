import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from frft_sync.baselines import (
    cde_frft_scan,
    complexity_report,
    foe_4power,
    locate_ts,
    toe_xcorr,
    traditional_estimate,
    ts_reference,
)
from frft_sync.channel import add_awgn
from frft_sync.estimator import PeakCoordinate, estimate, phi_opt_from_cd, solve_joint
from frft_sync.frft_core import ComplexSignal, MultCounter
from frft_sync.framing import FrameConfig, generate_payload, generate_ts, qam_constellation
from frft_sync.channel import d_to_beta2
from frft_sync.harness import TrialConfig, simulate_capture

NS = 1024
BAUD = 60e9


@pytest.fixture(scope="module")
def ts():
    return generate_ts(np.pi / 4, NS)


def qpsk(n, seed, fs=60e9):
    rng = np.random.default_rng(seed)
    return ComplexSignal(qam_constellation("QPSK")[rng.integers(0, 4, n)], fs)


# -- 4th-power FOE -------------------------------------------------------------------

def test_foe_zero_offset():
    n, fs = 8192, 60e9
    assert abs(foe_4power(qpsk(n, 0), fs)) <= fs / (4 * n) / 4


@pytest.mark.parametrize("fo", [1e9, -2.3e9, 6.7e9])
def test_foe_injected_offset(fo):
    n, fs = 16384, 75e9
    x = qpsk(n, 1, fs).samples * np.exp(2j * np.pi * fo * np.arange(n) / fs)
    # quarter of a bin of the x**4 spectrum, plus interpolation slack
    assert abs(foe_4power(x, fs) - fo) <= fs / (4 * n) + 1e6


def test_foe_pure_tone():
    n, fs, f = 4096, 60e9, 2.2e9
    tone = np.exp(2j * np.pi * f * np.arange(n) / fs)
    # x**4 of a tone is a tone at 4f; dividing by 4 gives f back
    assert foe_4power(tone, fs) == pytest.approx(f, abs=fs / (4 * n))


def test_foe_on_shaped_16qam():
    cfg = FrameConfig(payload_symbols=8192)
    x = generate_payload(cfg, 3)
    fs = x.sample_rate_hz
    y = x.samples * np.exp(2j * np.pi * 3e9 * np.arange(len(x)) / fs)
    assert abs(foe_4power(y, fs) - 3e9) < 30e6


def test_foe_rejects_empty():
    with pytest.raises(ValueError):
        foe_4power(np.array([], dtype=complex), 1.0)


# -- cross-correlation TOE -------------------------------------------------------------

def embed(ref, shift, total, seed, snr_db=math.inf):
    x = qpsk(total, seed).samples * 0.0
    x[shift : shift + ref.size] = ref
    rng = np.random.default_rng(seed + 1)
    filler = qam_constellation("QPSK")[rng.integers(0, 4, total)]
    mask = np.ones(total, bool)
    mask[shift : shift + ref.size] = False
    x[mask] = filler[mask]
    return add_awgn(ComplexSignal(x, 1.0), snr_db, seed).samples


@pytest.mark.parametrize("shift", [0, 17])
def test_xcorr_noiseless(shift):
    ref = qpsk(256, 5).samples
    assert toe_xcorr(embed(ref, shift, 2048, 0), ref) == shift


def test_xcorr_noisy_monte_carlo(ts):
    ref = ts_reference(ts, 2, 2.0).samples
    hits = sum(abs(toe_xcorr(embed(ref, 1000, 6000, s, 20.0), ref) - 1000) <= 1 for s in range(100))
    assert hits >= 99


def test_xcorr_rejects_long_reference():
    with pytest.raises(ValueError):
        toe_xcorr(np.ones(10, complex), np.ones(20, complex))


def test_locate_ts_under_dispersion(ts):
    c = simulate_capture(TrialConfig(distance_km=2000, sps=2, to_samples=100), 0)
    ref = ts_reference(ts, 2, 2.0)
    # dispersion smears the correlation over ~2000 samples; the CD scan only
    # needs the TS inside half a block of its two-block window
    assert abs(locate_ts(c.rx, ref) - c.to_true) < NS * 2 // 2


# -- per-chirp CDE scan ---------------------------------------------------------------

def test_cde_scan_back_to_back(ts):
    c = simulate_capture(TrialConfig(sps=2, to_samples=0, snr_db=math.inf), 0)
    assert abs(cde_frft_scan(c.rx, ts, 2, 2 * BAUD, c.to_true)) < 50


def test_cde_scan_1600km_and_agreement(ts):
    c = simulate_capture(TrialConfig(sps=2, distance_km=1600, to_samples=0), 1)
    cd = cde_frft_scan(c.rx, ts, 2, 2 * BAUD, c.to_true)
    assert abs(cd - 27200) <= 300
    prop = estimate(c.rx, ts, 2.0, 2 * BAUD).cd_total
    # CD change for one fine-grid step at the 1600 km operating angle
    phis = phi_opt_from_cd(d_to_beta2(17.0) * 1600, ts.alpha, NS, 1e12 / BAUD, 2)
    step = 0.001 * np.pi
    a = solve_joint(PeakCoordinate(phis[0], 0, 1), PeakCoordinate(phis[1], 0, 1),
                    ts.alpha, NS, 1e12 / BAUD, 2, 2 * BAUD)
    b = solve_joint(PeakCoordinate(phis[0] + step, 0, 1), PeakCoordinate(phis[1] + step, 0, 1),
                    ts.alpha, NS, 1e12 / BAUD, 2, 2 * BAUD)
    quantum = abs(b.cd_total - a.cd_total)
    assert abs(cd - prop) <= 2 * quantum


# -- traditional chain ---------------------------------------------------------------

def test_traditional_chain_end_to_end(ts):
    cfg = TrialConfig(sps=1.25, distance_km=1000, fo_hz=3e9, to_samples=None)
    c = simulate_capture(cfg, 2)
    counter = MultCounter()
    ref = ts_reference(ts, 2, 1.25)
    est = traditional_estimate(c.rx, ts, ref, 1.25, 1.25 * BAUD, counter=counter)
    assert abs(est.cd_total - 17000) < 300
    assert abs(est.fo_hz - 3e9) < 30e6
    assert abs(est.to_samples - c.to_true) <= 2
    assert set(counter.counts) == {"xcorr", "frft", "foe"}
    assert est.angle_evaluations > 0


# -- complexity model ------------------------------------------------------------------

def test_complexity_worked_example():
    r = complexity_report(65536, 1024, 300)
    assert r.proposed_mults == 3_727_360
    assert r.traditional_mults == 73_252_874
    assert r.ratio == pytest.approx(0.0508830, abs=1e-6)


def test_complexity_no_scans():
    r = complexity_report(65536, 1024, 0)
    assert r.proposed_mults == 65536 * 10
    assert math.isnan(r.measured_ratio)


def test_complexity_measured_fields():
    r = complexity_report(100, 16, 3, measured_proposed=50, measured_traditional=200)
    assert r.measured_ratio == 0.25
    d = r.as_dict()
    assert d["ratio"] == r.ratio and d["frame_len"] == 100


def test_complexity_rejects_bad_sizes():
    for args in ((0, 16, 1), (16, 0, 1), (16, 16, -1)):
        with pytest.raises(ValueError):
            complexity_report(*args)


@given(st.integers(1, 16), st.integers(0, 8), st.integers(0, 10**6))
def test_complexity_formulas(log_n, extra, k):
    n = 1 << log_n
    m = n << extra
    r = complexity_report(m, n, k)
    assert r.proposed_mults == (m + k * n) * log_n
    assert r.traditional_mults == (2 * k * n + 1) * log_n + m * n


@given(st.integers(1, 16), st.integers(0, 8), st.data())
def test_complexity_ratio_below_half(log_n, extra, data):
    # holds for any K: the condition reduces to log2(N)*(2M - 1) < M*N
    n = 1 << log_n
    m = n << extra
    k = data.draw(st.integers(0, m // n))
    assert complexity_report(m, n, k).ratio < 0.5


def test_complexity_ratio_exception_at_n3():
    # N = 3 is the one size where log2(N)*(2M - 1) >= M*N for large M
    assert complexity_report(30, 3, 1).ratio > 0.5
