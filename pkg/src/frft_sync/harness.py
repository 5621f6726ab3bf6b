"""Seeded Monte Carlo trials, parameter sweeps and method comparison.

One trial simulates a receiver capture around a single frame::

    [lead-in payload | TS | payload | tail payload]     (transmit stream)
      -> CD -> FO -> resample -> TO (zero-fill) -> crop -> AWGN

The crop drops the first ``round(ns*sps)`` samples (the largest TO) so the
zero-filled gap never reaches the receiver, and drops the tail, which
absorbs the circular wrap of the dispersion filter.  Ground-truth TO is the
receive-rate index of the first TS sample in the capture.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .baselines import complexity_report, traditional_estimate, ts_reference
from .channel import (
    add_awgn,
    apply_cd,
    apply_fo,
    apply_to,
    d_to_beta2,
    resample,
    sps_ratio,
    ChannelConfig,
)
from .estimator import EstimationError, SearchConfig, estimate
from .frft_core import ComplexSignal, MultCounter
from .framing import (
    FrameConfig,
    assemble_frame,
    generate_payload,
    generate_ts,
)

__all__ = [
    "TrialConfig",
    "SweepConfig",
    "TrialResult",
    "DATA_COLUMNS",
    "SUMMARY_COLUMNS",
    "trial_seed",
    "simulate_capture",
    "reference_waveform",
    "run_trial",
    "run_sweep",
    "summarize",
    "read_results",
    "compare_methods",
    "load_config",
]

DATA_COLUMNS = [
    "distance_km", "cd_true", "cd_est", "cd_err",
    "fo_true", "fo_est", "fo_err",
    "to_true", "to_est", "to_err",
    "sps", "snr_db", "seed", "mults_proposed", "mults_traditional",
]
EXTRA_COLUMNS = [
    "point", "trial", "ok", "error",
    "cd_trad", "fo_trad", "to_trad",
    "phi1", "phi2", "dn1", "dn2", "mag1", "mag2", "angle_evals",
    "frame_len", "window_len",
]
SUMMARY_COLUMNS = [
    "point", "distance_km", "fo_true", "sps", "n", "n_failed",
    "cd_err_mean", "cd_err_max", "fo_err_mean", "fo_err_max",
    "to_err_mean", "to_err_max", "to_zero_frac",
]


def _strict(cls, data):
    # "ts": {"alpha": .., "ns": ..} is accepted as a nested alias
    data = dict(data)
    ts = data.pop("ts", None)
    if ts is not None:
        if not isinstance(ts, dict) or set(ts) - {"alpha", "ns"}:
            raise ValueError("ts must be an object with keys alpha, ns")
        data.update(ts)
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**data)


@dataclass(frozen=True)
class TrialConfig:
    """Everything that defines one simulated capture except the seed."""

    distance_km: float = 0.0
    fo_hz: float = 0.0
    to_samples: int | None = None
    snr_db: float = 20.0
    sps: float = 2.0
    alpha: float = math.pi / 4
    ns: int = 1024
    baud: float = 60e9
    dispersion_ps_nm_km: float = 17.0
    wavelength_nm: float = 1550.0
    tx_sps: int = 2
    rolloff: float = 0.1
    modulation: str = "16QAM"
    payload_symbols: int = 28672
    lead_symbols: int = 4096
    tail_symbols: int = 2048
    iterations: int = 2
    run_baselines: bool = True

    def __post_init__(self):
        ChannelConfig(
            dispersion_ps_nm_km=self.dispersion_ps_nm_km,
            distance_km=self.distance_km,
            fo_hz=self.fo_hz,
            snr_db=self.snr_db,
            rx_sps=self.sps,
            wavelength_nm=self.wavelength_nm,
        )
        if (self.lead_symbols * self.sps) % 1:
            raise ValueError("lead_symbols * sps must be an integer")

    @property
    def block(self):
        return int(round(self.ns * self.sps))

    @property
    def search(self):
        return SearchConfig(iterations=self.iterations)

    @classmethod
    def from_dict(cls, data):
        return _strict(cls, data)


@dataclass(frozen=True)
class SweepConfig:
    """Grid of trial settings; every other field is shared by all points."""

    distances_km: tuple = (0.0, 400.0, 800.0, 1200.0, 1600.0, 2000.0)
    fo_grid_hz: tuple = (0.0,)
    to_mode: str = "random"
    to_fixed: int = 0
    trials_per_point: int = 20
    snr_db: float = 20.0
    sps: float = 2.0
    seed: int = 0
    alpha: float = math.pi / 4
    ns: int = 1024
    baud: float = 60e9
    dispersion_ps_nm_km: float = 17.0
    payload_symbols: int = 28672
    iterations: int = 2
    run_baselines: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "distances_km", tuple(float(d) for d in self.distances_km))
        object.__setattr__(self, "fo_grid_hz", tuple(float(f) for f in self.fo_grid_hz))
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be >= 1")
        if not self.distances_km or not self.fo_grid_hz:
            raise ValueError("distances_km and fo_grid_hz must be non-empty")
        if self.to_mode not in ("fixed", "random"):
            raise ValueError("to_mode must be 'fixed' or 'random'")

    @classmethod
    def from_dict(cls, data):
        return _strict(cls, data)

    def points(self):
        return [(d, f) for d in self.distances_km for f in self.fo_grid_hz]

    def trial_config(self, distance_km, fo_hz, to_samples):
        return TrialConfig(
            distance_km=distance_km,
            fo_hz=fo_hz,
            to_samples=to_samples,
            snr_db=self.snr_db,
            sps=self.sps,
            alpha=self.alpha,
            ns=self.ns,
            baud=self.baud,
            dispersion_ps_nm_km=self.dispersion_ps_nm_km,
            payload_symbols=self.payload_symbols,
            iterations=self.iterations,
            run_baselines=self.run_baselines,
        )


def load_config(path, cls):
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    return cls.from_dict(data)


def trial_seed(master, point, trial):
    """Counter-based per-trial seed; independent of execution order."""
    ss = np.random.SeedSequence([int(master), int(point), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


@dataclass(frozen=True)
class Capture:
    rx: ComplexSignal
    to_true: int
    to_shift: int
    frame_len: int


def simulate_capture(cfg, seed):
    """Build the transmit stream, apply the channel and crop the capture."""
    seeds = np.random.SeedSequence(seed).generate_state(4)
    rng = np.random.default_rng(seeds[0])
    block = cfg.block
    to = int(rng.integers(0, block)) if cfg.to_samples is None else int(cfg.to_samples)
    if not 0 <= to < block:
        raise ValueError(f"to_samples must lie in [0, {block})")

    fc = FrameConfig(payload_symbols=cfg.payload_symbols, modulation=cfg.modulation,
                     rolloff=cfg.rolloff, tx_sps=cfg.tx_sps, baud=cfg.baud)
    ts = generate_ts(cfg.alpha, cfg.ns)
    frame = assemble_frame(ts, generate_payload(fc, seeds[1]), cfg.tx_sps, cfg.baud, cfg.rolloff)
    lead = generate_payload(dataclasses.replace(fc, payload_symbols=cfg.lead_symbols), seeds[2])
    tail = generate_payload(dataclasses.replace(fc, payload_symbols=cfg.tail_symbols), seeds[3] + 1)
    fs_tx = cfg.baud * cfg.tx_sps
    tx = ComplexSignal(np.concatenate([lead.samples, frame.signal.samples, tail.samples]), fs_tx)

    x = apply_cd(tx, d_to_beta2(cfg.dispersion_ps_nm_km, cfg.wavelength_nm), cfg.distance_km)
    x = apply_fo(x, cfg.fo_hz)
    p, q = sps_ratio(cfg.tx_sps, cfg.sps)
    x = resample(x, p, q)
    x = apply_to(x, to)
    tail_rx = int(round(cfg.tail_symbols * cfg.sps))
    x = x.replace(x.samples[block : len(x) - tail_rx])
    x = add_awgn(x, cfg.snr_db, seeds[3])
    to_true = int(round(cfg.lead_symbols * cfg.sps)) + to - block
    return Capture(rx=x, to_true=to_true, to_shift=to, frame_len=len(x))


def reference_waveform(cfg):
    """The TS as the receiver expects it: shaped, power-normalised, resampled."""
    return ts_reference(generate_ts(cfg.alpha, cfg.ns), cfg.tx_sps, cfg.sps, cfg.rolloff, cfg.baud)


@dataclass
class TrialResult:
    """One row of the sweep data file."""

    distance_km: float
    cd_true: float
    fo_true: float
    to_true: int
    sps: float
    snr_db: float
    seed: int
    cd_est: float = math.nan
    fo_est: float = math.nan
    to_est: float = math.nan
    mults_proposed: int = 0
    mults_traditional: int = 0
    point: int = 0
    trial: int = 0
    ok: bool = True
    error: str = ""
    cd_trad: float = math.nan
    fo_trad: float = math.nan
    to_trad: float = math.nan
    phi1: float = math.nan
    phi2: float = math.nan
    dn1: float = math.nan
    dn2: float = math.nan
    mag1: float = math.nan
    mag2: float = math.nan
    angle_evals: int = 0
    frame_len: int = 0
    window_len: int = 0
    extra: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def cd_err(self):
        return self.cd_est - self.cd_true

    @property
    def fo_err(self):
        return self.fo_est - self.fo_true

    @property
    def to_err(self):
        return self.to_est - self.to_true

    def row(self):
        d = asdict(self)
        d.pop("extra")
        d.update(cd_err=self.cd_err, fo_err=self.fo_err, to_err=self.to_err)
        return {k: _fmt(d[k]) for k in DATA_COLUMNS + EXTRA_COLUMNS}

    @classmethod
    def from_row(cls, row):
        kw = {}
        for f in fields(cls):
            if f.name == "extra" or f.name not in row:
                continue
            raw = row[f.name]
            if f.name in ("to_true", "seed", "mults_proposed", "mults_traditional",
                          "point", "trial", "angle_evals", "frame_len", "window_len"):
                kw[f.name] = int(raw)
            elif f.name == "ok":
                kw[f.name] = raw in ("1", "True", "true")
            elif f.name == "error":
                kw[f.name] = raw
            else:
                kw[f.name] = float(raw)
        return cls(**kw)


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_trial(cfg, seed, point=0, trial=0):
    """Simulate one capture and run the proposed and (optionally) baseline chains.

    Estimator failures are recorded in the result, not raised.
    """
    cap = simulate_capture(cfg, seed)
    fs = cfg.baud * cfg.sps
    res = TrialResult(
        distance_km=float(cfg.distance_km),
        cd_true=float(cfg.dispersion_ps_nm_km * cfg.distance_km),
        fo_true=float(cfg.fo_hz),
        to_true=cap.to_true,
        sps=float(cfg.sps),
        snr_db=float(cfg.snr_db),
        seed=int(seed),
        point=point,
        trial=trial,
        frame_len=cap.frame_len,
    )
    ts = generate_ts(cfg.alpha, cfg.ns)
    counter = MultCounter()
    try:
        est = estimate(cap.rx, ts, cfg.sps, fs, cfg.search, counter, cfg.wavelength_nm)
    except EstimationError as err:
        res.ok = False
        res.error = f"{type(err).__name__}: {err}"
    else:
        p1, p2 = est.peaks
        res.cd_est = est.cd_total
        res.fo_est = est.fo_hz
        res.to_est = float(round(est.to_samples))
        res.phi1, res.phi2 = p1.phi, p2.phi
        res.dn1, res.dn2 = p1.delta_n, p2.delta_n
        res.mag1, res.mag2 = p1.magnitude, p2.magnitude
        res.angle_evals = est.angle_evaluations
        res.window_len = est.window_len
        res.extra["estimate"] = est
    res.mults_proposed = counter.total

    if cfg.run_baselines:
        tcount = MultCounter()
        trad = traditional_estimate(
            cap.rx, ts, reference_waveform(cfg), cfg.sps, fs, cfg.search, tcount,
            wavelength_nm=cfg.wavelength_nm,
        )
        res.cd_trad, res.fo_trad, res.to_trad = trad.cd_total, trad.fo_hz, float(trad.to_samples)
        res.mults_traditional = tcount.total
        res.extra["traditional"] = trad
    return res


def _job(args):
    cfg, seed, point, trial = args
    res = run_trial(cfg, seed, point, trial)
    res.extra.clear()
    return res


def sweep_jobs(sweep):
    jobs = []
    for p, (dist, fo) in enumerate(sweep.points()):
        for t in range(sweep.trials_per_point):
            to = None if sweep.to_mode == "random" else sweep.to_fixed
            jobs.append((sweep.trial_config(dist, fo, to), trial_seed(sweep.seed, p, t), p, t))
    return jobs


def summarize(results):
    """Per-point mean/max absolute errors, mirroring the error-vs-distance plots."""
    by_point = {}
    for r in results:
        by_point.setdefault(r.point, []).append(r)
    rows = []
    for p in sorted(by_point):
        rs = by_point[p]
        good = [r for r in rs if r.ok]
        cd = np.abs([r.cd_err for r in good]) if good else np.array([np.nan])
        fo = np.abs([r.fo_err for r in good]) if good else np.array([np.nan])
        to = np.abs([r.to_err for r in good]) if good else np.array([np.nan])
        rows.append({
            "point": p,
            "distance_km": rs[0].distance_km,
            "fo_true": rs[0].fo_true,
            "sps": rs[0].sps,
            "n": len(rs),
            "n_failed": len(rs) - len(good),
            "cd_err_mean": float(np.mean(cd)),
            "cd_err_max": float(np.max(cd)),
            "fo_err_mean": float(np.mean(fo)),
            "fo_err_max": float(np.max(fo)),
            "to_err_mean": float(np.mean(to)),
            "to_err_max": float(np.max(to)),
            "to_zero_frac": float(np.mean(to == 0)),
        })
    return rows


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row[k]) for k in columns})


def read_results(path):
    with open(path, newline="") as fh:
        return [TrialResult.from_row(row) for row in csv.DictReader(fh)]


def run_sweep(sweep, out_dir):
    """Run every trial of ``sweep`` and write ``trials.csv``, ``summary.csv``
    and ``run_meta.json`` into ``out_dir``.

    Rows are ordered by (point, trial) regardless of ``sweep.workers``.

    Returns
    -------
    (list of TrialResult, list of dict)
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = sweep_jobs(sweep)
    t0 = time.time()
    if sweep.workers > 1:
        with ProcessPoolExecutor(sweep.workers) as pool:
            results = list(pool.map(_job, jobs, chunksize=4))
    else:
        results = [_job(j) for j in jobs]
    _write_csv(out / "trials.csv", DATA_COLUMNS + EXTRA_COLUMNS, [r.row() for r in results])
    summary = summarize(results)
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    meta = {
        "config": _jsonable(asdict(sweep)),
        "started_unix": t0,
        "elapsed_s": time.time() - t0,
        "n_trials": len(results),
    }
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2))
    return results, summary


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def compare_methods(cfg, trials=5, seed=0, M=65536, N=1024):
    """Complexity and accuracy comparison of the two chains on identical frames.

    The closed forms are evaluated twice: at the nominal ``(M, N)`` with
    the measured mean angle-evaluation count ``K``, and at the sizes the
    instrumented run actually used (capture length, analysis-window
    length), which is the reference for the measured counts.
    """
    cfg = dataclasses.replace(cfg, run_baselines=True)
    rows = [run_trial(cfg, trial_seed(seed, 0, t), 0, t) for t in range(trials)]
    good = [r for r in rows if r.ok]
    if not good:
        raise EstimationError("proposed estimator failed on every comparison frame")
    K = int(round(np.mean([r.angle_evals for r in good])))
    nominal = complexity_report(M, N, K)
    measured_p = int(np.mean([r.mults_proposed for r in good]))
    measured_t = int(np.mean([r.mults_traditional for r in good]))
    instrumented = complexity_report(
        int(np.mean([r.frame_len for r in good])),
        int(np.mean([r.window_len for r in good])),
        K,
        measured_p,
        measured_t,
    )
    fo_delta = np.abs([r.fo_est - r.fo_trad for r in good])
    to_delta = np.abs([r.to_est - r.to_trad for r in good])
    return {
        "nominal": nominal.as_dict(),
        "instrumented": instrumented.as_dict(),
        "measured_over_formula": {
            "proposed": measured_p / instrumented.proposed_mults,
            "traditional": measured_t / instrumented.traditional_mults,
        },
        "accuracy": {
            "trials": len(rows),
            "failed": len(rows) - len(good),
            "cd_err_mean_proposed": float(np.mean(np.abs([r.cd_err for r in good]))),
            "cd_err_mean_traditional": float(np.mean(np.abs([r.cd_trad - r.cd_true for r in good]))),
            "fo_delta_max_hz": float(fo_delta.max()),
            "to_delta_max": float(to_delta.max()),
        },
    }
