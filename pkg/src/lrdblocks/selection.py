"""Data-driven block selection.

Pipeline: estimate the memory exponent of the observed series by local
Whittle, build an empirical MSE curve for the variance estimator on
subsamples of length h against a pilot estimate, minimize it at two
subsample scales, and extrapolate the two minimizers to a block length
for the full series.  One memory estimate from the full series is reused
everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .estimators import BlockScheme, variance_estimator

_D_BOUND = 0.49


class WhittleEstimate(float):
    """alpha*m estimate; float value clamped to (0.01, 0.99).

    Carries the fitted pole exponent ``d``, the bandwidth, and a
    ``boundary`` flag set when the optimizer stopped at the search edge.
    """

    d: float
    bandwidth: int
    boundary: bool

    def __new__(cls, alpha_m, d, bandwidth, boundary):
        self = super().__new__(cls, alpha_m)
        self.d = float(d)
        self.bandwidth = int(bandwidth)
        self.boundary = bool(boundary)
        return self

    # float subclasses rebuild from a single argument under copy/pickle
    def __getnewargs__(self):
        return (float(self), self.d, self.bandwidth, self.boundary)


def local_whittle(series, bandwidth: Optional[int] = None) -> WhittleEstimate:
    """Memory exponent alpha*m of the series from low-frequency periodogram fit.

    Minimizes the profile objective R(d) = log(mean of lambda_j**(2d) I_j)
    - 2d mean(log lambda_j) over the first ``bandwidth`` Fourier
    frequencies (default floor(n**0.7)) and returns 1 - 2*d_hat.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 16:
        raise ValueError("series must be one-dimensional with at least 16 points")
    n = x.size
    if bandwidth is None:
        bandwidth = int(n**0.7)
    if not 2 <= bandwidth < n / 2:
        raise ValueError(f"bandwidth must lie in [2, n/2), got {bandwidth!r}")
    spectrum = np.fft.rfft(x)
    periodogram = np.abs(spectrum[1 : bandwidth + 1]) ** 2
    if not np.any(periodogram > 0.0):
        raise ValueError("degenerate (constant) series")
    periodogram = periodogram / periodogram.max()
    log_lam = np.log(2.0 * math.pi * np.arange(1, bandwidth + 1) / n)
    mean_log_lam = log_lam.mean()

    def slope(d):
        # derivative of the (convex) profile objective, up to a positive factor
        q = np.exp(2.0 * d * log_lam) * periodogram
        return float(q @ log_lam) / float(q.sum()) - mean_log_lam

    # The objective is strictly convex, so bisect the sign change of the
    # derivative; sign decisions are insensitive to an overall rescaling of
    # the series, which keeps the estimate invariant under x -> c*x.
    lo, hi = -_D_BOUND, _D_BOUND
    if slope(lo) >= 0.0:
        d_hat, boundary = lo, True
    elif slope(hi) <= 0.0:
        d_hat, boundary = hi, True
    else:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if slope(mid) > 0.0:
                hi = mid
            else:
                lo = mid
        d_hat, boundary = 0.5 * (lo + hi), False
    alpha_m = min(max(1.0 - 2.0 * d_hat, 0.01), 0.99)
    return WhittleEstimate(alpha_m, d_hat, bandwidth, boundary)


def _window_block_means(x: np.ndarray, ell: int) -> np.ndarray:
    s = np.concatenate(([0.0], np.cumsum(x)))
    return (s[ell:] - s[:-ell]) / ell


def empirical_mse(series, h: int, ell: int, pilot_value: float, *, alpha_m: float, scheme_kind: str = "nol") -> float:
    """Mean squared deviation of subsample variance estimators from the pilot.

    Runs the block variance estimator with block ``ell`` on every length-h
    contiguous subsample and averages the squared distance to
    ``pilot_value``.  The same alpha_m must be the one used for the pilot.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if not 1 <= ell < h <= n:
        raise ValueError(f"need 1 <= ell < h <= n, got ell={ell!r}, h={h!r}, n={n}")
    if h // ell < 2 and scheme_kind == "nol":
        raise ValueError("subsample too short for two blocks")
    w = _window_block_means(x, ell)  # means of every length-ell window
    n_sub = n - h + 1
    scale = float(ell) ** alpha_m
    if scheme_kind == "nol":
        b = h // ell
        offsets = ell * np.arange(b)
        acc = np.zeros(n_sub)
        acc_sq = np.zeros(n_sub)
        for off in offsets:
            seg = w[off : off + n_sub]
            acc += seg
            acc_sq += seg * seg
        v = scale * (acc_sq / b - (acc / b) ** 2)
    else:
        nb = h - ell + 1  # all block positions inside the window
        s1 = np.concatenate(([0.0], np.cumsum(w)))
        s2 = np.concatenate(([0.0], np.cumsum(w * w)))
        mean_w = (s1[nb:] - s1[:-nb])[:n_sub] / nb
        mean_w2 = (s2[nb:] - s2[:-nb])[:n_sub] / nb
        v = scale * (mean_w2 - mean_w**2)
    return float(np.mean((v - pilot_value) ** 2))


def candidate_grid(h: int) -> np.ndarray:
    """Search grid for block lengths on a length-h subsample.

    All integers 2..floor(h/3) while that stays small; a ~40 point
    geometric grid otherwise.
    """
    top = max(h // 3, 2)
    if h <= 200:
        return np.arange(2, top + 1)
    grid = np.unique(np.geomspace(2.0, top, 40).round().astype(int))
    return grid[grid >= 2]


def minimize_empirical_mse(series, h: int, pilot_value: float, grid, *, alpha_m: float, scheme_kind: str = "nol") -> int:
    """Grid argmin of the empirical MSE; ties resolve to the smaller block."""
    grid = np.asarray(grid, dtype=int)
    if grid.size == 0:
        raise ValueError("empty candidate grid")
    if grid.min() < 2 or grid.max() >= h:
        raise ValueError("grid must lie within [2, h-1]")
    grid = np.sort(grid)
    values = [empirical_mse(series, h, int(ell), pilot_value, alpha_m=alpha_m, scheme_kind=scheme_kind) for ell in grid]
    return int(grid[int(np.argmin(values))])


@dataclass(frozen=True)
class SelectionConfig:
    c1: float = 9.0
    c2: float = 12.0
    theta: float = 0.95
    r: int = 2
    pilot_length: Optional[int] = None  # default floor(sqrt(n))
    bandwidth: Optional[int] = None  # default floor(n**0.7)
    scheme_kind: str = "nol"
    grid: Optional[Sequence[int]] = None  # default candidate_grid policy

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("r must be >= 2")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if self.c1 <= 0.0 or self.c2 <= 0.0:
            raise ValueError("c1 and c2 must be positive")


@dataclass(frozen=True)
class SelectionResult:
    alpha_m: WhittleEstimate
    h: int
    h2: int
    pilot_length: int
    pilot_value: float
    ell_h: int
    ell_h2: int
    a_n: float
    i_n: float
    c_n: float
    ell_opt_n: float
    ell_n: int
    edge: bool


def extrapolate_block_size(ell_h: float, ell_h2: float, h: int, h2: int, n: int, *, c1: float = 9.0, r: int = 2):
    """(a_n, i_n, c_n, ell_opt_n) from the two subsample minimizers.

    The exponent estimate uses the two scales; the log-power estimate i_n
    is clamped to its theoretical range [-0.5, 1] before entering c_n.
    """
    if h == h2:
        raise ValueError("subsample lengths h and h2 must differ")
    log_ratio = math.log(h / h2)
    a_n = math.log(ell_h / ell_h2) / log_ratio
    i_n = 0.5 * (
        (math.log(ell_h) - a_n * math.log(h)) / math.log(math.log(h))
        + (math.log(ell_h2) - a_n * math.log(h2)) / math.log(math.log(h2))
    )
    i_n = min(max(i_n, -0.5), 1.0)
    c_n = r**i_n * (math.log(h2) / math.log(h)) ** ((r - 1) * i_n * math.log(h) / log_ratio)
    ell_opt_n = (ell_h / c1**a_n) ** r * (h**a_n / ell_h) ** (r - 1) * c_n
    return a_n, i_n, c_n, ell_opt_n


def two_scale_block_estimate(series, config: Optional[SelectionConfig] = None) -> SelectionResult:
    """Block length for the full series by two-scale extrapolation.

    Final rule: ell_n = min(floor(n/20), floor(ell_opt_n)), floored at 2.
    """
    cfg = config or SelectionConfig()
    x = np.asarray(series, dtype=float)
    n = x.size
    h = int(cfg.c1 * n ** (1.0 / cfg.r))
    h2 = int(cfg.c2 * n ** (cfg.theta / cfg.r))
    if h2 < 8 or h < 8:
        raise ValueError("series too short for subsample MSE estimation")
    if h == h2:
        raise ValueError("degenerate configuration: h == h2; adjust c1/c2/theta")
    if h >= n or h2 >= n:
        raise ValueError("subsample length exceeds the series")
    pilot_len = cfg.pilot_length if cfg.pilot_length is not None else int(math.isqrt(n))
    if not 2 <= pilot_len < h:
        raise ValueError("pilot block must lie in [2, h)")
    alpha_m = local_whittle(x, cfg.bandwidth)
    pilot = variance_estimator(x, BlockScheme(cfg.scheme_kind, pilot_len), float(alpha_m)).value

    edge = False
    minimizers = []
    for sub in (h, h2):
        grid = np.asarray(cfg.grid, dtype=int) if cfg.grid is not None else candidate_grid(sub)
        grid = grid[grid < sub]
        ell = minimize_empirical_mse(x, sub, pilot, grid, alpha_m=float(alpha_m), scheme_kind=cfg.scheme_kind)
        edge = edge or ell == int(grid.min()) or ell == int(grid.max())
        minimizers.append(ell)
    ell_h, ell_h2 = minimizers

    a_n, i_n, c_n, ell_opt_n = extrapolate_block_size(ell_h, ell_h2, h, h2, n, c1=cfg.c1, r=cfg.r)
    ell_n = max(2, min(n // 20, math.floor(ell_opt_n)))
    return SelectionResult(
        alpha_m=alpha_m,
        h=h,
        h2=h2,
        pilot_length=pilot_len,
        pilot_value=pilot,
        ell_h=ell_h,
        ell_h2=ell_h2,
        a_n=a_n,
        i_n=i_n,
        c_n=c_n,
        ell_opt_n=ell_opt_n,
        ell_n=ell_n,
        edge=edge,
    )
