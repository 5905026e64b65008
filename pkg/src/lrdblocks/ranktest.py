"""Bootstrap goodness-of-fit test for the Hermite rank of a transformed series.

The null hypothesis is rank one: after studentization, block means of the
observed series should look like block means of fractional Brownian motion
increments with the matching memory parameter.  The test statistic measures
how far the probability-integral-transformed block means stray from
uniformity (Anderson-Darling or Kolmogorov-Smirnov), and its null
distribution is calibrated by resampling fractional Gaussian noise at the
Hurst index implied by the local Whittle estimate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .estimators import overlapping_means
from .models import FGN, gaussian_sample_paths, simulate_gaussian
from .selection import WhittleEstimate, local_whittle

__all__ = [
    "RankTestConfig",
    "RankTestResult",
    "anderson_darling",
    "block_residuals",
    "fbm_increments",
    "ks_statistic",
    "rank_test",
]

_STATISTICS = ("ad", "ks")
_MIN_BLOCKS = 8


def _block_mean_matrix(paths: np.ndarray, ell: int, scheme_kind: str) -> np.ndarray:
    """Per-row block means of a (size, n) matrix of sample paths."""
    size, n = paths.shape
    if scheme_kind == "nol":
        b = n // ell
        return paths[:, : b * ell].reshape(size, b, ell).mean(axis=2)
    if scheme_kind == "ol":
        csum = np.cumsum(paths, axis=1, dtype=float)
        windows = np.empty((size, n - ell + 1))
        windows[:, 0] = csum[:, ell - 1]
        windows[:, 1:] = csum[:, ell:] - csum[:, :-ell]
        return windows / ell
    raise ValueError(f"scheme_kind must be 'ol' or 'nol', got {scheme_kind!r}")


def _studentized_uniforms(block_means: np.ndarray) -> np.ndarray:
    """Probability integral transform of studentized block means, row-wise."""
    center = block_means.mean(axis=1, keepdims=True)
    scale = block_means.std(axis=1, ddof=1, keepdims=True)
    if np.any(scale == 0.0):
        raise ValueError("block means are constant; residuals are degenerate")
    return ndtr((block_means - center) / scale)


def block_residuals(series, ell: int, scheme_kind: str = "nol") -> np.ndarray:
    """Uniform residuals Phi((W_i - mean W) / sd W) from block means.

    With the non-overlapping scheme the means come from b = floor(n / ell)
    complete blocks; the overlapping scheme uses every window of length
    ``ell``.  The standard deviation uses the b - 1 divisor.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    n = x.size
    if not 1 <= ell <= n // 2:
        raise ValueError(f"block length {ell} leaves fewer than two blocks for n={n}")
    if scheme_kind == "nol":
        b = n // ell
        means = x[: b * ell].reshape(b, ell).mean(axis=1)
    elif scheme_kind == "ol":
        means = overlapping_means(x, ell)
    else:
        raise ValueError(f"scheme_kind must be 'ol' or 'nol', got {scheme_kind!r}")
    return _studentized_uniforms(means[np.newaxis, :])[0]


def _clamped_sorted(residuals: np.ndarray) -> np.ndarray:
    r = np.sort(residuals, axis=-1)
    tiny = np.finfo(float).tiny
    eps = np.finfo(float).eps
    if np.any(r <= 0.0) or np.any(r >= 1.0):
        warnings.warn(
            "residuals at 0 or 1 clamped to the open unit interval",
            RuntimeWarning,
            stacklevel=3,
        )
        r = np.clip(r, tiny, 1.0 - eps)
    return r


def _anderson_darling_rows(residuals: np.ndarray) -> np.ndarray:
    r = _clamped_sorted(residuals)
    b = r.shape[-1]
    weights = 2.0 * np.arange(1, b + 1) - 1.0
    inner = np.log(r) + np.log1p(-r[..., ::-1])
    return -b - (inner @ weights) / b


def _ks_rows(residuals: np.ndarray) -> np.ndarray:
    r = np.sort(residuals, axis=-1)
    b = r.shape[-1]
    grid = np.arange(1, b + 1) / b
    upper = (grid - r).max(axis=-1)
    lower = (r - grid + 1.0 / b).max(axis=-1)
    return np.maximum(upper, lower)


def anderson_darling(residuals) -> float:
    """Anderson-Darling distance of residuals from the uniform law.

    A = -b - b^{-1} sum_i (2i - 1) log{ R_(i) (1 - R_(b+1-i)) }.  Residuals
    sitting exactly at 0 or 1 are clamped just inside the unit interval
    (with a warning) so the logarithms stay finite.
    """
    r = np.asarray(residuals, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise ValueError("residuals must be a one-dimensional array of length >= 2")
    return float(_anderson_darling_rows(r[np.newaxis, :])[0])


def ks_statistic(residuals) -> float:
    """Kolmogorov-Smirnov distance of residuals from the uniform law."""
    r = np.asarray(residuals, dtype=float)
    if r.ndim != 1 or r.size < 1:
        raise ValueError("residuals must be a one-dimensional array of length >= 1")
    return float(_ks_rows(r[np.newaxis, :])[0])


def fbm_increments(n: int, hurst: float, seed=None, *, rng=None) -> np.ndarray:
    """Increments of fractional Brownian motion on the grid j/n.

    Exact fractional Gaussian noise scaled by n^{-hurst}, so the j-th entry
    is B(j/n) - B((j-1)/n) in law.  The scale is irrelevant to the rank test
    statistic, which studentizes block means.
    """
    path = simulate_gaussian(FGN(hurst), n, seed=seed, rng=rng)
    return path * float(n) ** -hurst


_STAT_ROWS = {"ad": _anderson_darling_rows, "ks": _ks_rows}


@dataclass(frozen=True)
class RankTestConfig:
    """Tuning knobs for the bootstrap rank test.

    ell defaults to floor(sqrt(n)).  resamples is the Monte Carlo size M of
    the null calibration; alpha_sig the nominal level.
    """

    ell: int | None = None
    scheme_kind: str = "nol"
    statistic: str = "ad"
    resamples: int = 200
    alpha_sig: float = 0.05
    bandwidth: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.ell is not None and self.ell < 1:
            raise ValueError(f"ell must be positive, got {self.ell!r}")
        if self.scheme_kind not in ("ol", "nol"):
            raise ValueError(f"scheme_kind must be 'ol' or 'nol', got {self.scheme_kind!r}")
        if self.statistic not in _STATISTICS:
            raise ValueError(f"statistic must be one of {_STATISTICS}, got {self.statistic!r}")
        if self.resamples < 20:
            raise ValueError(f"resamples must be at least 20, got {self.resamples!r}")
        if not 0.0 < self.alpha_sig < 1.0:
            raise ValueError(f"alpha_sig must lie in (0, 1), got {self.alpha_sig!r}")


@dataclass(frozen=True)
class RankTestResult:
    """Outcome of the bootstrap rank test."""

    statistic: float
    quantile: float
    reject: bool
    alpha_m: WhittleEstimate
    hurst: float
    statistic_kind: str
    scheme_kind: str
    ell: int
    n_blocks: int
    resamples: int
    alpha_sig: float


def _null_statistics(
    n: int,
    hurst: float,
    ell: int,
    scheme_kind: str,
    statistic: str,
    resamples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Rank-test statistics for a batch of fractional Gaussian noise paths."""
    paths = gaussian_sample_paths(FGN(hurst), n, resamples, rng)
    means = _block_mean_matrix(paths, ell, scheme_kind)
    return _STAT_ROWS[statistic](_studentized_uniforms(means))


def _calibration_quantile(null_stats: np.ndarray, alpha_sig: float) -> float:
    # the ceil(M(1 - alpha))-th order statistic, e.g. the 190th of M = 200
    order = np.sort(null_stats)
    k = math.ceil(null_stats.size * (1.0 - alpha_sig))
    return float(order[k - 1])


def rank_test(series, config: RankTestConfig | None = None) -> RankTestResult:
    """Bootstrap test of the hypothesis that the Hermite rank equals one.

    Computes the chosen uniformity statistic from block-mean residuals of
    the data, estimates the memory parameter by local Whittle, resamples
    fractional Gaussian noise at the implied Hurst index, processes each
    resample identically, and rejects when the observed statistic exceeds
    the empirical (1 - alpha_sig) quantile of the resampled ones.
    """
    if config is None:
        config = RankTestConfig()
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    n = x.size
    ell = config.ell if config.ell is not None else math.isqrt(n)
    b = n // ell if config.scheme_kind == "nol" else n - ell + 1
    if b < _MIN_BLOCKS:
        raise ValueError(
            f"only {b} blocks at ell={ell}; need at least {_MIN_BLOCKS} "
            "for a meaningful residual sample"
        )

    residuals = block_residuals(x, ell, config.scheme_kind)
    t0 = float(_STAT_ROWS[config.statistic](residuals[np.newaxis, :])[0])

    alpha_m = local_whittle(x, bandwidth=config.bandwidth)
    hurst = 1.0 - float(alpha_m) / 2.0

    rng = np.random.default_rng(config.seed)
    null_stats = _null_statistics(
        n, hurst, ell, config.scheme_kind, config.statistic, config.resamples, rng
    )
    q_hat = _calibration_quantile(null_stats, config.alpha_sig)

    return RankTestResult(
        statistic=t0,
        quantile=q_hat,
        reject=t0 > q_hat,
        alpha_m=alpha_m,
        hurst=hurst,
        statistic_kind=config.statistic,
        scheme_kind=config.scheme_kind,
        ell=ell,
        n_blocks=b,
        resamples=config.resamples,
        alpha_sig=config.alpha_sig,
    )
