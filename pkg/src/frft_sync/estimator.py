"""Joint CD / FO / TO estimation from the chirp-pair training sequence.

Pipeline: coarse block detection -> window extraction -> two-peak angle
search -> closed-form solve.  All angles live in the FrFT coordinates of
the analysis window (length ``L``); they are mapped back to the TS-length
geometry (``ns * sps`` samples) through ``tan(phi_ts) = tan(phi_L) * L / (ns*sps)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel import beta2z_to_cd
from .frft_core import ComplexSignal, MultCounter, frft, frft_many

__all__ = [
    "EstimationError",
    "TSNotFoundError",
    "DegenerateGeometryError",
    "PeakCoordinate",
    "SearchConfig",
    "JointEstimate",
    "DetectionTrace",
    "coarse_frame_detect",
    "extract_window",
    "angle_scan",
    "coarse_peaks",
    "refine_peak",
    "find_two_peaks",
    "phi_opt_from_cd",
    "solve_offsets",
    "solve_joint",
    "estimate",
]


class EstimationError(RuntimeError):
    """Base class for estimator failures."""


class TSNotFoundError(EstimationError):
    """The angle scan shows no pair of dominant chirp peaks."""


class DegenerateGeometryError(EstimationError):
    """The two peak angles do not give a solvable 2x2 system."""


@dataclass(frozen=True)
class PeakCoordinate:
    phi: float
    delta_n: float
    magnitude: float


@dataclass(frozen=True)
class SearchConfig:
    """Stepwise angle search grid.

    The coarse pass covers ``+-coarse_range`` at ``coarse_step``; the first
    fine pass covers ``+-fine_range`` at ``fine_step`` around each coarse
    peak.  ``iterations`` counts fine passes: every further pass divides the
    step by ``shrink`` and spans ``+-refine_steps`` steps of the previous
    pass.  ``guard`` is the extra analysis-window length in TS blocks and
    ``search_blocks`` the length of the wider window used to seed it.
    The coarse pass scores each angle by the largest energy inside a
    sliding run of ``coarse_smooth * L`` bins, which tolerates peaks that
    fall between coarse grid angles.
    """

    coarse_range: float = np.pi / 2
    coarse_step: float = 0.01 * np.pi
    fine_range: float = 0.1 * np.pi
    fine_step: float = 0.001 * np.pi
    iterations: int = 2
    shrink: float = 10.0
    refine_steps: float = 2.0
    min_separation: float = 0.05 * np.pi
    nms_radius: float = 0.03 * np.pi
    min_peak_ratio: float = 2.0
    coarse_smooth: float = 1 / 256
    guard: float = 1.0
    search_blocks: float = 4.0
    max_candidates: int = 3

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (self.coarse_range > 0 and self.fine_range > 0):
            raise ValueError("ranges must be positive")
        if not 0 < self.fine_step < self.coarse_step:
            raise ValueError("need 0 < fine_step < coarse_step")
        if self.shrink <= 1:
            raise ValueError("shrink must exceed 1")


@dataclass(frozen=True)
class JointEstimate:
    """Estimated impairments.

    ``to_samples`` is the receive-rate index of the first TS sample.
    """

    cd_total: float
    cd_per_chirp: tuple
    fo_hz: float
    to_samples: float
    peaks: tuple
    coarse_block: int
    window_start: int = 0
    window_len: int = 0
    angle_evaluations: int = 0
    mults: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DetectionTrace:
    m_values: np.ndarray
    argmin_block: int
    block_len: int
    hop: int

    @property
    def block_start(self):
        return self.argmin_block * self.hop


def _samples(x):
    return x.samples if isinstance(x, ComplexSignal) else np.asarray(x, dtype=np.complex128)


def coarse_frame_detect(rx, ns, sps, phi1, counter=None):
    """Locate the TS block by minimising ``sum |frft(block, phi1)|``.

    Blocks are ``round(ns*sps)`` samples long and hop by half a block.
    Concentration of the TS energy lowers the L1 norm of its block, so the
    minimum marks the TS.  On input with no TS the minimum is arbitrary.
    """
    x = _samples(rx)
    block = int(round(ns * sps))
    if x.shape[0] < block:
        raise ValueError("received signal is shorter than one block")
    hop = max(block // 2, 1)
    nblocks = (x.shape[0] - block) // hop + 1
    m = np.empty(nblocks)
    for k in range(nblocks):
        seg = x[k * hop : k * hop + block]
        m[k] = np.sum(np.abs(frft(seg, phi1, counter=counter)))
    return DetectionTrace(m, int(np.argmin(m)), block, hop)


def extract_window(rx, center, length):
    """Slice ``length`` samples centred on ``center``, kept inside ``rx``.

    Returns the window samples and the start index actually used.
    """
    x = _samples(rx)
    length = min(int(length), x.shape[0])
    start = int(round(center)) - length // 2
    start = min(max(start, 0), x.shape[0] - length)
    return x[start : start + length], start


def _parabolic(ym, y0, yp):
    den = ym - 2 * y0 + yp
    if den >= 0:
        return 0.0, y0
    off = 0.5 * (ym - yp) / den
    return off, y0 - 0.25 * (ym - yp) * off


def _peak_of(y):
    mag = np.abs(y)
    n = mag.shape[0]
    k = int(np.argmax(mag))
    if 0 < k < n - 1:
        off, peak = _parabolic(mag[k - 1], mag[k], mag[k + 1])
    else:
        off, peak = 0.0, mag[k]
    return k + off - n // 2, peak


def _smoothed_peak_of(y, width):
    p = np.abs(y) ** 2
    n = p.shape[0]
    width = max(1, min(int(width), n))
    csum = np.concatenate([[0.0], np.cumsum(np.concatenate([p, p[: width - 1]]))])
    run = csum[width : width + n] - csum[:n]
    k = int(np.argmax(run))
    return k + (width - 1) / 2 - n // 2, float(np.sqrt(run[k]))


def _grid(center, half_range, step):
    n = int(np.floor(half_range / step + 1e-9))
    return center + step * np.arange(-n, n + 1)


def angle_scan(window, center, half_range, step, counter=None, smooth_bins=None):
    """FrFT peak coordinate for every angle of ``center +- half_range``.

    Each entry records the strongest bin, refined by 3-point parabolic
    interpolation in both offset and magnitude.  Entries are ordered by
    angle.  With ``smooth_bins`` the strongest run of that many (circularly
    adjacent) bins is used instead; ``magnitude`` is then the root energy
    of the run and ``delta_n`` its centre.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = _samples(window)
    if x.shape[0] == 0:
        raise ValueError("empty window")
    phis = _grid(center, half_range, step)
    rows = frft_many(x, phis, counter=counter)
    out = []
    for phi, row in zip(phis, rows):
        dn, mag = _peak_of(row) if smooth_bins is None else _smoothed_peak_of(row, smooth_bins)
        out.append(PeakCoordinate(float(phi), float(dn), float(mag)))
    return out


def _local_maxima(mags, radius_pts):
    idx = []
    n = mags.shape[0]
    for i in range(n):
        lo, hi = max(0, i - radius_pts), min(n, i + radius_pts + 1)
        if mags[i] == mags[lo:hi].max() and mags[i] > 0:
            idx.append(i)
    return idx


def coarse_peaks(window, cfg=None, counter=None):
    """Coarse angle scan; returns the two strongest separated maxima.

    Angles are scored by run energy (see :class:`SearchConfig`).  Maxima
    are kept after non-maximum suppression over ``cfg.nms_radius`` and must
    exceed ``cfg.min_peak_ratio`` times the median magnitude.

    Raises
    ------
    TSNotFoundError
        If fewer than two such maxima exist.
    """
    cfg = cfg or SearchConfig()
    x = _samples(window)
    width = max(1, int(round(cfg.coarse_smooth * x.shape[0])))
    coarse = angle_scan(x, 0.0, cfg.coarse_range, cfg.coarse_step, counter, smooth_bins=width)
    mags = np.array([p.magnitude for p in coarse])
    background = float(np.median(mags))
    radius = max(1, int(round(cfg.nms_radius / cfg.coarse_step)))
    picked = []
    for i in sorted(_local_maxima(mags, radius), key=lambda i: -mags[i]):
        if mags[i] < cfg.min_peak_ratio * background:
            break
        if all(abs(coarse[i].phi - coarse[j].phi) > cfg.min_separation for j in picked):
            picked.append(i)
        if len(picked) == 2:
            break
    if len(picked) < 2:
        raise TSNotFoundError(
            f"found {len(picked)} chirp peak(s) above {cfg.min_peak_ratio}x background"
        )
    peaks = sorted((coarse[i] for i in picked), key=lambda p: -p.phi)
    return peaks[0], peaks[1]


def refine_peak(window, seed_phi, cfg=None, counter=None):
    """Fine passes around ``seed_phi`` plus a parabolic sub-step in angle."""
    cfg = cfg or SearchConfig()
    x = _samples(window)
    best, half, step = seed_phi, cfg.fine_range, cfg.fine_step
    for _ in range(cfg.iterations):
        scan = angle_scan(x, best, half, step, counter)
        mags = np.array([p.magnitude for p in scan])
        i = int(np.argmax(mags))
        best = scan[i].phi
        half, step = cfg.refine_steps * step, step / cfg.shrink
    step *= cfg.shrink
    if 0 < i < len(scan) - 1:
        off, _ = _parabolic(mags[i - 1], mags[i], mags[i + 1])
        phi = best + off * step
        dn, mag = _peak_of(frft_many(x, [phi], counter=counter)[0])
        return PeakCoordinate(float(phi), float(dn), float(mag))
    return scan[i]


def find_two_peaks(window, cfg=None, counter=None):
    """Coarse-to-fine search for the two chirp peaks of the TS.

    Returns
    -------
    (PeakCoordinate, PeakCoordinate)
        Ordered so the first has the larger angle.
    """
    cfg = cfg or SearchConfig()
    c1, c2 = coarse_peaks(window, cfg, counter)
    peaks = [refine_peak(window, c.phi, cfg, counter) for c in (c1, c2)]
    peaks.sort(key=lambda p: -p.phi)
    return peaks[0], peaks[1]


def phi_opt_from_cd(beta2z, alpha, ns, T, sps):
    """Forward model of both optimal angles at the receiver.

    ``tan(phi_opt) = sps*tan(phi_ts) + tan(phi_cd)`` with
    ``tan(phi_cd) = -sps*2*pi*beta2z / (ns*T**2)``; ``beta2z`` in ps^2 and
    ``T`` in ps.  Angles refer to an ``ns*sps``-sample window.
    """
    p = alpha / (np.pi / 2)
    phi_ts = (1 - p) * np.pi / 2
    tan_cd = -sps * 2 * np.pi * beta2z / (ns * T**2)
    return (
        float(np.arctan(sps * np.tan(phi_ts) + tan_cd)),
        float(np.arctan(sps * np.tan(-phi_ts) + tan_cd)),
    )


def solve_joint(
    p1,
    p2,
    alpha,
    ns,
    T,
    sps,
    fs_rx,
    coarse_block=0,
    window_start=0,
    window_len=None,
    wavelength_nm=1550.0,
):
    """Recover CD, FO and TO from the two peak coordinates.

    ``T`` is the symbol period in ps and ``window_len`` the length of the
    analysed window (``ns*sps`` if omitted).  Peak angles are measured in
    that window's coordinates.
    """
    if fs_rx <= 0:
        raise ValueError("fs_rx must be positive")
    nominal = ns * sps
    L = nominal if window_len is None else window_len
    scale = L / nominal
    p = alpha / (np.pi / 2)
    phi_ts = (1 - p) * np.pi / 2

    cds = []
    for peak, branch in ((p1, phi_ts), (p2, -phi_ts)):
        tan_opt = np.tan(peak.phi) * scale
        tan_cd = tan_opt - sps * np.tan(branch)
        beta2z = -tan_cd * ns * T**2 / (sps * 2 * np.pi)
        cds.append(float(beta2z_to_cd(beta2z, wavelength_nm)))

    dt, df = solve_offsets(p1, p2)

    to = window_start + (int(round(L)) // 2) + dt - (ns // 2) * sps
    fo = df * fs_rx / L
    return JointEstimate(
        cd_total=float(np.mean(cds)),
        cd_per_chirp=tuple(cds),
        fo_hz=float(fo),
        to_samples=float(to),
        peaks=(p1, p2),
        coarse_block=int(coarse_block),
        window_start=int(window_start),
        window_len=int(round(L)),
    )


def solve_offsets(p1, p2):
    """Solve ``dn_i = dt*cos(phi_i) + df*sin(phi_i)`` for ``(dt, df)``.

    ``dt`` is the time shift and ``df`` the frequency shift of the TS
    centre, both in window samples/bins.
    """
    a = np.array([[np.cos(p1.phi), np.sin(p1.phi)], [np.cos(p2.phi), np.sin(p2.phi)]])
    det = np.linalg.det(a)
    if abs(det) < 1e-6:
        raise DegenerateGeometryError(f"peak angles give a singular system (det={det:.2e})")
    dt, df = np.linalg.solve(a, [p1.delta_n, p2.delta_n])
    return float(dt), float(df)


def _candidate_blocks(trace, count):
    order = np.argsort(trace.m_values, kind="stable")
    picked = []
    for k in order:
        if all(abs(int(k) - j) > 2 for j in picked):
            picked.append(int(k))
        if len(picked) == count:
            break
    return picked


def estimate(rx, ts, sps, fs_rx, cfg=None, counter=None, wavelength_nm=1550.0):
    """Full estimation chain on a received frame holding one TS.

    ``ts`` is a :class:`~frft_sync.framing.TrainingSequence` (only ``alpha``
    and ``ns`` are used).  Steps:

    1. rank TS blocks by the detection metric;
    2. coarse angle scan on a ``search_blocks``-long window around the best
       block, falling back to the next candidate on :class:`TSNotFoundError`;
    3. re-centre a ``(1 + guard)``-block window on the TS centre implied by
       the coarse peaks and run the fine passes there;
    4. solve for CD, FO and TO.
    """
    cfg = cfg or SearchConfig()
    counter = counter if counter is not None else MultCounter()
    x = _samples(rx)
    ns, alpha = ts.ns, ts.alpha
    phi1 = (1 - alpha / (np.pi / 2)) * np.pi / 2
    evals = _EvalCounter(counter)

    before = counter.total
    trace = coarse_frame_detect(x, ns, sps, phi1, counter)
    framing_mults = counter.total - before

    before = counter.total
    block = trace.block_len
    last_error = None
    for k in _candidate_blocks(trace, cfg.max_candidates):
        wide, wide_start = extract_window(x, k * trace.hop + block / 2, block * cfg.search_blocks)
        try:
            c1, c2 = coarse_peaks(wide, cfg, evals)
            dt, _ = solve_offsets(c1, c2)
        except EstimationError as err:
            last_error = err
            continue
        break
    else:
        raise last_error

    ts_center = wide_start + wide.shape[0] // 2 + dt
    window, start = extract_window(x, ts_center, block * (1 + cfg.guard))
    ratio = wide.shape[0] / window.shape[0]
    seeds = [np.arctan(np.tan(c.phi) * ratio) for c in (c1, c2)]
    peaks = sorted((refine_peak(window, s, cfg, evals) for s in seeds), key=lambda p: -p.phi)
    search_mults = counter.total - before

    T = 1e12 * sps / fs_rx
    est = solve_joint(
        peaks[0], peaks[1], alpha, ns, T, sps, fs_rx,
        coarse_block=k,
        window_start=start,
        window_len=window.shape[0],
        wavelength_nm=wavelength_nm,
    )
    return replace(
        est,
        angle_evaluations=evals.evaluations,
        mults={"framing": framing_mults, "search": search_mults},
    )


class _EvalCounter:
    """Forwards multiplication counts and tallies FrFT evaluations."""

    def __init__(self, inner):
        self.inner = inner
        self.evaluations = 0

    def add(self, stage, n):
        if stage == "frft":
            self.evaluations += 1
        self.inner.add(stage, n)
