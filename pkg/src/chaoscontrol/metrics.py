"""Attractor-climate statistics.

Two quantities summarise the long-term behaviour of a trajectory regardless
of pointwise agreement: the correlation dimension from the pair-counting
power law C(r) ~ r^nu (Grassberger-Procaccia), and the largest Lyapunov
exponent from the mean log-divergence of initially nearby states
(Rosenstein).  Both operate directly on the full state vector; no delay
embedding is performed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .dynamics import Trajectory
from .errors import InsufficientDataError

__all__ = [
    "GpConfig",
    "RosensteinConfig",
    "GpDiagnostics",
    "LyapunovDiagnostics",
    "ClimateStats",
    "correlation_dimension",
    "largest_lyapunov",
    "climate_stats",
    "write_gp_diagnostics_csv",
    "write_lyapunov_diagnostics_csv",
]


@dataclass(frozen=True)
class GpConfig:
    """Grassberger-Procaccia settings.

    ``r_min``/``r_max`` are fractions of the attractor diameter (twice the
    maximum distance from the centroid); ``n_r`` thresholds are log-spaced
    between them.  Above ``max_pairs`` point pairs, a seeded uniform random
    subsample of pairs is used instead of the full O(N^2) count.
    """

    r_min: float = 0.005
    r_max: float = 0.10
    n_r: int = 20
    max_pairs: int = 10_000_000
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.r_min < self.r_max):
            raise ValueError("require 0 < r_min < r_max")
        if self.n_r < 5:
            raise ValueError("n_r must be >= 5")
        if self.max_pairs < 1:
            raise ValueError("max_pairs must be positive")


@dataclass(frozen=True)
class RosensteinConfig:
    """Largest-Lyapunov settings.

    Nearest neighbours must be more than ``theiler_window`` steps apart in
    time; each pair is followed for ``follow_steps`` steps and the mean log
    distance curve is fitted linearly between ``fit_start`` and ``fit_end``.

    The fit window skips the first few steps, where the neighbour difference
    vectors are still rotating into the locally most expanding direction and
    the curve rises faster than the asymptotic rate.  Calibrated against a
    tangent-space oracle on the classic Lorenz attractor; the diagnostics
    expose the full curve for recalibration on other systems.
    """

    theiler_window: int = 50
    fit_start: int = 10
    fit_end: int = 60
    follow_steps: int = 60

    def __post_init__(self):
        if not (0 <= self.fit_start < self.fit_end <= self.follow_steps):
            raise ValueError("require fit_start < fit_end <= follow_steps")
        if self.theiler_window < 0:
            raise ValueError("theiler_window must be >= 0")


@dataclass
class GpDiagnostics:
    """Correlation-integral curve and fit quality for one estimate."""

    r: np.ndarray
    c: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    n_pairs: int
    subsampled: bool
    degenerate: bool = False
    low_fit_quality: bool = False


@dataclass
class LyapunovDiagnostics:
    """Divergence curve and fit quality for one estimate."""

    offsets: np.ndarray
    mean_log_dist: np.ndarray
    slope_per_step: float
    intercept: float
    r_squared: float
    valid_fraction: float
    few_neighbors: bool = False


@dataclass
class ClimateStats:
    """(largest Lyapunov exponent, correlation dimension) of an attractor."""

    lambda_max: float
    corr_dim: float
    lyap_diag: LyapunovDiagnostics | None = None
    gp_diag: GpDiagnostics | None = None


def _linear_fit(x, y):
    """Least-squares line fit returning (slope, intercept, R^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 0.0
    return float(slope), float(intercept), float(r2)


def _attractor_diameter(points: np.ndarray) -> float:
    """Rotation/translation-invariant size proxy: 2 * max |x - centroid|."""
    centered = points - points.mean(axis=0)
    return 2.0 * float(np.sqrt((centered**2).sum(axis=1).max()))


def correlation_dimension(
    traj: Trajectory, cfg: GpConfig = GpConfig()
) -> tuple[float, GpDiagnostics]:
    """Correlation dimension via pair counting over log-spaced thresholds.

    The correlation integral C(r) is the fraction of distinct point pairs
    closer than r; the dimension is the slope of log C against log r over
    the configured threshold range.  Returns (nu, diagnostics); a collapsed
    trajectory (all counts zero) or a fit with R^2 < 0.9 is flagged on the
    diagnostics rather than raised.
    """
    points = traj.samples
    n = points.shape[0]
    if n < 2:
        raise InsufficientDataError("need at least 2 samples for pair counting")

    diam = _attractor_diameter(points)
    if diam == 0.0:
        diag = GpDiagnostics(
            r=np.array([]), c=np.array([]), slope=float("nan"),
            intercept=float("nan"), r_squared=0.0, n_pairs=0,
            subsampled=False, degenerate=True,
        )
        return float("nan"), diag

    r_grid = np.geomspace(cfg.r_min * diam, cfg.r_max * diam, cfg.n_r)
    # squared-distance histogram edges; upper bin catches everything beyond
    edges = np.concatenate([[0.0], r_grid**2, [np.inf]])

    total_pairs = n * (n - 1)
    subsampled = total_pairs > cfg.max_pairs
    counts = np.zeros(len(edges) - 1, dtype=np.int64)

    if not subsampled:
        chunk = max(1, 2_000_000 // n)
        for lo in range(0, n, chunk):
            hi = min(lo + chunk, n)
            diff = points[lo:hi, None, :] - points[None, :, :]
            d2 = np.einsum("ijk,ijk->ij", diff, diff)
            # drop self-distances on the diagonal of this block
            for row in range(lo, hi):
                d2[row - lo, row] = np.inf
            counts += np.histogram(d2, bins=edges)[0]
        n_pairs = total_pairs
    else:
        rng = np.random.default_rng(cfg.seed)
        n_pairs = int(cfg.max_pairs)
        drawn = 0
        while drawn < n_pairs:
            m = min(2_000_000, n_pairs - drawn)
            i = rng.integers(0, n, size=m)
            j = rng.integers(0, n - 1, size=m)
            j = np.where(j >= i, j + 1, j)  # uniform over j != i
            diff = points[i] - points[j]
            d2 = np.einsum("ij,ij->i", diff, diff)
            counts += np.histogram(d2, bins=edges)[0]
            drawn += m

    cum = np.cumsum(counts)[: cfg.n_r]  # cum[m] = #pairs with d < r_grid[m]
    c_r = cum / n_pairs

    if cum[-1] == 0:
        diag = GpDiagnostics(
            r=r_grid, c=c_r, slope=float("nan"), intercept=float("nan"),
            r_squared=0.0, n_pairs=n_pairs, subsampled=subsampled,
            degenerate=True,
        )
        return float("nan"), diag

    mask = cum > 0
    slope, intercept, r2 = _linear_fit(np.log(r_grid[mask]), np.log(c_r[mask]))
    diag = GpDiagnostics(
        r=r_grid, c=c_r, slope=slope, intercept=intercept, r_squared=r2,
        n_pairs=n_pairs, subsampled=subsampled,
        low_fit_quality=r2 < 0.9,
    )
    return slope, diag


def largest_lyapunov(
    traj: Trajectory, cfg: RosensteinConfig = RosensteinConfig()
) -> tuple[float, LyapunovDiagnostics]:
    """Largest Lyapunov exponent from the mean divergence of neighbour pairs.

    For every sample, the nearest neighbour at temporal distance greater
    than the Theiler window is tracked for ``follow_steps`` steps; the slope
    of the mean log separation over the fit window, divided by dt, is the
    exponent.  Returns (lambda_max, diagnostics).
    """
    points = traj.samples
    n = points.shape[0]
    m = n - cfg.follow_steps  # trackable reference points
    if m < 2:
        raise InsufficientDataError("trajectory shorter than follow_steps")

    base = points[:m]
    tree = cKDTree(base)
    # at most 2W+1 candidates violate the Theiler window (incl. self), so
    # 2W+2 neighbours guarantee one valid hit when available
    k = min(2 * cfg.theiler_window + 2, m)
    dists, idx = tree.query(base, k=k)
    if k == 1:
        dists = dists[:, None]
        idx = idx[:, None]

    sep = np.abs(idx - np.arange(m)[:, None])
    valid = sep > cfg.theiler_window
    has_valid = valid.any(axis=1)
    first = np.argmax(valid, axis=1)
    nb = idx[np.arange(m), first]

    ref = np.flatnonzero(has_valid)
    nb = nb[ref]
    valid_fraction = float(len(ref)) / m
    if len(ref) == 0:
        raise InsufficientDataError("no neighbour pairs outside Theiler window")

    offsets = np.arange(cfg.follow_steps + 1)
    mean_log = np.empty(len(offsets))
    for kk in offsets:
        diff = points[ref + kk] - points[nb + kk]
        d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        nz = d > 0
        mean_log[kk] = np.log(d[nz]).mean() if nz.any() else -np.inf

    lo, hi = cfg.fit_start, cfg.fit_end
    window = np.arange(lo, hi + 1)
    finite = np.isfinite(mean_log[window])
    slope, intercept, r2 = _linear_fit(window[finite], mean_log[window][finite])
    lam = slope / traj.dt
    diag = LyapunovDiagnostics(
        offsets=offsets, mean_log_dist=mean_log, slope_per_step=slope,
        intercept=intercept, r_squared=r2, valid_fraction=valid_fraction,
        few_neighbors=valid_fraction < 0.1,
    )
    return lam, diag


def climate_stats(
    traj: Trajectory,
    gp_cfg: GpConfig = GpConfig(),
    ros_cfg: RosensteinConfig = RosensteinConfig(),
) -> ClimateStats:
    """Convenience wrapper computing both climate measures."""
    lam, lyap_diag = largest_lyapunov(traj, ros_cfg)
    nu, gp_diag = correlation_dimension(traj, gp_cfg)
    return ClimateStats(lambda_max=lam, corr_dim=nu,
                        lyap_diag=lyap_diag, gp_diag=gp_diag)


def write_gp_diagnostics_csv(path, diag: GpDiagnostics) -> None:
    """Write the correlation-integral curve as r,c columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "c"])
        for r, c in zip(diag.r, diag.c):
            writer.writerow([repr(float(r)), repr(float(c))])


def write_lyapunov_diagnostics_csv(path, diag: LyapunovDiagnostics) -> None:
    """Write the divergence curve as step,mean_log_distance columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "mean_log_distance"])
        for s, d in zip(diag.offsets, diag.mean_log_dist):
            writer.writerow([int(s), repr(float(d))])
