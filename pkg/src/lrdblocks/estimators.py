"""Block-mean variance estimators and exact finite-n target variances.

For a length-n series X and block length ell, the overlapping (OL) blocks
are all n-ell+1 windows and the non-overlapping (NOL) blocks are the
floor(n/ell) disjoint ones (trailing remainder dropped).  The estimator

    V = ell**am * mean_i (Xbar_i - mu)**2,   mu = mean of the block means,

scaled by the memory exponent am of the series, estimates the target
v_{n,am} = n**am * Var(Xbar_n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermite import HermiteSpec
from .models import CovarianceModel


@dataclass(frozen=True)
class BlockScheme:
    kind: str
    length: int

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in ("ol", "nol"):
            raise ValueError(f"scheme kind must be 'ol' or 'nol', got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.length < 1:
            raise ValueError("block length must be >= 1")


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    scheme: BlockScheme
    alpha_m: float
    n: int


def overlapping_means(x: np.ndarray, ell: int) -> np.ndarray:
    """All n-ell+1 overlapping block means, via one cumulative sum."""
    c = np.concatenate([[0.0], np.cumsum(x, dtype=float)])
    return (c[ell:] - c[:-ell]) / ell


def block_means(series, scheme: BlockScheme) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    n, ell = x.size, scheme.length
    if ell > n:
        raise ValueError(f"block length {ell} exceeds series length {n}")
    if scheme.kind == "ol":
        return overlapping_means(x, ell)
    b = n // ell
    return x[: b * ell].reshape(b, ell).mean(axis=1)


def variance_estimator(series, scheme: BlockScheme, alpha_m: float) -> VarianceEstimate:
    if not 0.0 < alpha_m <= 1.0:
        raise ValueError(f"alpha_m must lie in (0, 1], got {alpha_m!r}")
    means = block_means(series, scheme)
    if means.size < 2:
        raise ValueError("need at least 2 blocks")
    centered = means - means.mean()
    value = scheme.length**alpha_m * float(np.mean(centered * centered))
    return VarianceEstimate(value=value, scheme=scheme, alpha_m=alpha_m, n=len(series))


def subordinated_covariances(model: CovarianceModel, spec: HermiteSpec, lags) -> np.ndarray:
    """r(k) = Cov(G(Z_0), G(Z_k)) = sum_{j>=m} (J_j^2/j!) gamma(k)^j."""
    gamma = np.atleast_1d(model.covariance(lags))
    weights = spec.normalized_sq()
    r = np.zeros_like(gamma)
    for j in np.flatnonzero(weights[1:]) + 1:
        r += weights[j] * gamma ** int(j)
    return r


def target_variance(model: CovarianceModel, spec: HermiteSpec, n: int, alpha_m=None) -> float:
    """Exact v_{n,am} = n**am * Var(Xbar_n) for X = G(Z).

    The Monte Carlo ground truth for every standardized-MSE experiment.
    """
    alpha_m = _resolved_exponent(model, spec, alpha_m)
    if n < 1:
        raise ValueError("n must be >= 1")
    r0 = spec.variance()
    if n == 1:
        return r0
    k = np.arange(1, n)
    acc = r0 + 2.0 * float(np.sum((1.0 - k / n) * subordinated_covariances(model, spec, k)))
    return n ** (alpha_m - 1.0) * acc


def limit_variance(model: CovarianceModel, spec: HermiteSpec, alpha_m=None) -> float:
    """v_inf = (J_m^2/m!) * 2 c0^m / ((1-am)(2-am)), the long-run variance."""
    alpha_m = _resolved_exponent(model, spec, alpha_m)
    jm_sq = spec.normalized_sq()[spec.m]
    return jm_sq * 2.0 * model.c0**spec.m / ((1.0 - alpha_m) * (2.0 - alpha_m))


def _resolved_exponent(model, spec, alpha_m):
    if alpha_m is None:
        alpha_m = model.alpha * spec.m
    if not 0.0 < alpha_m < 1.0:
        raise ValueError(
            f"memory exponent alpha*m must lie in (0, 1), got {alpha_m!r}"
        )
    return alpha_m
