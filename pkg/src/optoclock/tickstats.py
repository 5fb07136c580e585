"""Point-process metrology on tick records.

Raw ticks are photodetection events; a finite-bandwidth detector current
with a threshold turns them into filtered ticks with an effective dead
time. Accuracy is the squared mean waiting time over its variance (the
expected number of ticks until the clock is off by one); resolution is
the inverse mean waiting time. Stability across averaging scales is
quantified by the overlapping Allan variance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks


@dataclass
class TickRecord:
    """Monotone sequence of tick timestamps (units of 1/gamma_h)."""
    times: np.ndarray
    origin: str = "raw"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1:
            raise ValueError("tick times must be a flat sequence")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("tick times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    def waits(self) -> np.ndarray:
        return np.diff(self.times)

    def after(self, t0: float) -> "TickRecord":
        """Drop ticks at or before t0 (transient removal)."""
        return TickRecord(self.times[self.times > t0], origin=self.origin,
                          meta=dict(self.meta, transient_cut=t0))

    def shifted(self, delta: float) -> "TickRecord":
        return TickRecord(self.times + delta, origin=self.origin,
                          meta=dict(self.meta))

    def dilated(self, factor: float) -> "TickRecord":
        return TickRecord(self.times * factor, origin=self.origin,
                          meta=dict(self.meta))


@dataclass(frozen=True)
class FilterConfig:
    """Detector model: low-pass bandwidth, threshold, and summation window."""
    gamma: float
    i_star: float
    m_sum: int = 1

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("bandwidth must be non-negative")
        if not (0 < self.i_star < self.m_sum):
            raise ValueError(
                f"threshold must lie in (0, {self.m_sum}) for {self.m_sum} "
                "summed windows")
        if self.m_sum < 1:
            raise ValueError("m_sum must be a positive integer")


def default_threshold(M: int) -> float:
    """Threshold convention M / (M + 3); 0.25 for a single emitter."""
    return M / (M + 3.0)


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    bin_width: float
    peak_locations: np.ndarray
    peak_heights: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def n_peaks(self) -> int:
        return self.peak_locations.size


@dataclass
class ClockMetrics:
    accuracy: float
    resolution: float
    mean_wait: float
    var_wait: float
    n_ticks: int
    allan_m: np.ndarray
    allan: np.ndarray
    allan_asymptote: np.ndarray
    cov_k: np.ndarray
    cov: np.ndarray
    histogram: Histogram


# -- detector current and filtering -------------------------------------------

def default_grid(record: TickRecord, cfg: FilterConfig,
                 points_per_decay: int = 20) -> np.ndarray:
    """Uniform evaluation grid resolving the detector decay time."""
    if len(record) == 0:
        raise ValueError("empty tick record")
    if cfg.gamma > 0:
        h = 1.0 / (points_per_decay * cfg.gamma)
    else:
        h = (record.times[-1] - record.times[0]) / max(10 * len(record), 100)
    t0 = record.times[0] - 2 * h
    t1 = record.times[-1] + 2 * h
    n = int(math.ceil((t1 - t0) / h)) + 1
    return t0 + h * np.arange(n)


def detector_current(record: TickRecord, cfg: FilterConfig,
                     t_grid: np.ndarray) -> np.ndarray:
    """Low-pass filtered detection record I(t).

    Each tick launches a decaying exponential that stays alive until it
    leaves the window of the last m_sum ticks, so I(t) sums the m_sum
    most recent exponentials. gamma = 0 degenerates to a step function
    counting the live windows.
    """
    if len(record) == 0:
        raise ValueError("empty tick record")
    times = record.times
    t = np.asarray(t_grid, dtype=float)
    idx = np.searchsorted(times, t, side="right")
    out = np.zeros_like(t)
    for k in range(1, cfg.m_sum + 1):
        sel = idx - k >= 0
        tk = times[np.clip(idx - k, 0, None)]
        contrib = np.exp(-cfg.gamma * (t - tk)) if cfg.gamma > 0 \
            else np.ones_like(t)
        out += np.where(sel, contrib, 0.0)
    return out


def filter_ticks(record: TickRecord, cfg: FilterConfig,
                 t_grid: np.ndarray | None = None) -> TickRecord:
    """Threshold the detector current into filtered ticks.

    A filtered tick is emitted whenever the sampled current crosses the
    threshold from strictly below to at-or-above; the exponential decay
    back below threshold realizes a detector dead time of
    ln(1/i_star)/gamma between filtered ticks.
    """
    if len(record) == 0:
        raise ValueError("empty tick record")
    if t_grid is None:
        t_grid = default_grid(record, cfg)
    if cfg.gamma > 0 and len(t_grid) > 1:
        h = t_grid[1] - t_grid[0]
        if h > 1.0 / (10 * cfg.gamma):
            warnings.warn("grid coarser than a tenth of the detector decay "
                          "time; crossings may be missed", stacklevel=2)
    current = detector_current(record, cfg, t_grid)
    below = current[:-1] < cfg.i_star
    at_or_above = current[1:] >= cfg.i_star
    crossings = t_grid[1:][below & at_or_above]
    meta = dict(record.meta, filter_gamma=cfg.gamma, filter_i_star=cfg.i_star,
                filter_m_sum=cfg.m_sum)
    if crossings.size == 0:
        warnings.warn("threshold never crossed; filtered record is empty",
                      stacklevel=2)
    return TickRecord(crossings, origin="filtered", meta=meta)


# -- waiting-time statistics ---------------------------------------------------

LOW_SAMPLE_WAITS = 100


def _waits(record: TickRecord, op_name: str) -> np.ndarray:
    w = record.waits()
    if w.size < 2:
        raise ValueError(f"{op_name} needs at least 3 ticks")
    if w.size < LOW_SAMPLE_WAITS:
        warnings.warn(f"{op_name} computed from only {w.size} waiting times",
                      stacklevel=3)
    return w


def accuracy(record: TickRecord) -> float:
    """Squared mean waiting time over its unbiased variance."""
    w = _waits(record, "accuracy")
    var = w.var(ddof=1)
    return float(w.mean() ** 2 / var)


def resolution(record: TickRecord) -> float:
    """Inverse mean waiting time."""
    w = _waits(record, "resolution")
    return float(1.0 / w.mean())


def allan_overlapping(record: TickRecord,
                      m_values: np.ndarray | None = None
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Overlapping two-sample variance of the normalized clock reading.

    Returns (m, avar, asymptote) where the asymptote 1/(m * accuracy) is
    the uncorrelated-waits limit.
    """
    t = record.times
    L = t.size
    if m_values is None:
        top = max(1, L // 4)
        m_values = np.unique(np.round(
            np.geomspace(1, top, num=min(60, top))).astype(int))
    else:
        m_values = np.asarray(m_values, dtype=int)
        if np.any(m_values < 1) or np.any(2 * m_values >= L):
            raise ValueError("each m must satisfy 1 <= m < L/2")
    w = _waits(record, "allan_overlapping")
    tau = w.mean()
    acc = float(w.mean() ** 2 / w.var(ddof=1))
    avar = np.empty(m_values.size)
    for i, m in enumerate(m_values):
        if 2 * m >= L:
            avar[i] = np.nan
            continue
        d = t[2 * m:] - 2 * t[m:-m] + t[:-2 * m]
        avar[i] = (d ** 2).sum() / (2 * m * m * tau * tau * (L - 2 * m))
    return m_values, avar, 1.0 / (m_values * acc)


def lag_covariance(record: TickRecord, k_max: int
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Stationary covariance between a waiting time and the k-th one after."""
    w = _waits(record, "lag_covariance")
    if k_max >= w.size:
        raise ValueError("k_max must be smaller than the number of waits")
    mean = w.mean()
    ks = np.arange(1, k_max + 1)
    cov = np.array([np.mean(w[:-k] * w[k:]) - mean * mean for k in ks])
    return ks, cov


def waiting_histogram(record: TickRecord, bin_width: float | None = None,
                      mech_period: float | None = None) -> Histogram:
    """Binned waiting times with a peak-detection summary.

    Default bin width resolves the half-period structure: (T_m / 2) / 50
    when the mechanical period is known (record metadata or argument).
    """
    w = record.waits()
    if w.size == 0:
        raise ValueError("histogram needs at least 2 ticks")
    if mech_period is None:
        omega = record.meta.get("Omega_m")
        mech_period = 2 * math.pi / omega if omega else None
    if bin_width is None:
        if mech_period is not None:
            bin_width = (mech_period / 2) / 50
        else:
            bin_width = w.max() / 100
    n_bins = max(4, int(math.ceil(w.max() / bin_width)))
    edges = bin_width * np.arange(n_bins + 1)
    counts, _ = np.histogram(w, bins=edges)

    min_sep = 5
    if mech_period is not None:
        min_sep = max(3, int(0.15 * (mech_period / 2) / bin_width))
    peaks, props = find_peaks(
        np.concatenate([[0], counts, [0]]).astype(float),
        height=max(counts.max() * 0.05, 1.0), distance=min_sep)
    peaks = peaks - 1
    centers = 0.5 * (edges[:-1] + edges[1:])
    return Histogram(edges=edges, counts=counts, bin_width=bin_width,
                     peak_locations=centers[peaks],
                     peak_heights=counts[peaks].astype(float))


def background_fraction(record: TickRecord, mech_period: float) -> float:
    """Fraction of waits far from the periodic structure (0, T/2, T, ...).

    Spurious thermally activated ticks land uniformly in time, filling
    the gaps between the peaks of the waiting-time distribution.
    """
    w = record.waits()
    if w.size == 0:
        raise ValueError("empty record")
    half = mech_period / 2.0
    frac = np.abs((w / half) - np.round(w / half))
    return float(np.mean(frac > 0.25))


def compute_metrics(record: TickRecord, k_max: int = 20,
                    mech_period: float | None = None) -> ClockMetrics:
    """All scalar metrics plus Allan curve, covariances, and histogram."""
    w = _waits(record, "compute_metrics")
    m, avar, asym = allan_overlapping(record)
    ks, cov = lag_covariance(record, min(k_max, w.size - 1))
    hist = waiting_histogram(record, mech_period=mech_period)
    return ClockMetrics(
        accuracy=float(w.mean() ** 2 / w.var(ddof=1)),
        resolution=float(1.0 / w.mean()),
        mean_wait=float(w.mean()),
        var_wait=float(w.var(ddof=1)),
        n_ticks=len(record),
        allan_m=m, allan=avar, allan_asymptote=asym,
        cov_k=ks, cov=cov, histogram=hist)
