"""Statistical functionals, influence series, and the block jackknife.

Supported functional families: smooth functions of sample means,
M-estimators with a user score, L-estimators with a weight on [0, 1], and
the trimmed mean.  ``influence_estimates`` converts a sample into the
plug-in influence series X_hat_t = IF(Y_t, F_n); combined with the block
variance estimator this gives variance estimation for general statistics,
and ``block_jackknife`` provides the delete-a-block alternative that needs
no influence function at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .estimators import BlockScheme, VarianceEstimate, variance_estimator


class SolverError(RuntimeError):
    """Root-finding for an M-estimator failed."""


@dataclass(frozen=True)
class SmoothOfMeans:
    """H(mean phi_1, ..., mean phi_l) with an explicit gradient for H."""

    outer: Callable
    gradient: Callable
    base: Tuple[Callable, ...]

    def __post_init__(self):
        if not self.base:
            raise ValueError("need at least one base function")


@dataclass(frozen=True)
class MEstimator:
    """Root of the empirical score mean(psi(Y_t, theta)) = 0.

    ``score_derivative`` is d psi / d theta, used for the influence series.
    Default bracket: median(Y) +- 10 * MAD(Y).
    """

    score: Callable
    score_derivative: Callable
    bracket: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class LEstimator:
    """T_n = n^{-1} sum_t Y_(t) J(t/n) with weight J supported on (d1, d2]."""

    weight: Callable
    d1: float = 0.0
    d2: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.d1 < self.d2 <= 1.0:
            raise ValueError("need 0 <= d1 < d2 <= 1")


@dataclass(frozen=True)
class TrimmedMean:
    """Symmetric delta-trimmed mean: the L-estimator with the flat weight
    1{delta < x <= 1-delta} / (1 - 2*delta)."""

    delta: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.delta < 0.5:
            raise ValueError(f"delta must lie in [0, 0.5), got {self.delta!r}")

    @property
    def d1(self) -> float:
        return self.delta

    @property
    def d2(self) -> float:
        return 1.0 - self.delta


Functional = Union[SmoothOfMeans, MEstimator, LEstimator, TrimmedMean]


def mean_functional() -> SmoothOfMeans:
    """The sample mean as the identity smooth-of-means."""
    return SmoothOfMeans(
        outer=lambda v: float(v[0]),
        gradient=lambda v: np.ones(1),
        base=(lambda y: y,),
    )


def huber_functional(c: float = 1.345, bracket: Optional[Tuple[float, float]] = None) -> MEstimator:
    """Huber location M-estimator with clamp width c."""
    if c <= 0.0:
        raise ValueError("c must be positive")
    return MEstimator(
        score=lambda y, t: np.clip(y - t, -c, c),
        score_derivative=lambda y, t: -(np.abs(y - t) < c).astype(float),
        bracket=bracket,
    )


def _as_sample(sample) -> np.ndarray:
    y = np.asarray(sample, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("sample must be one-dimensional with length >= 2")
    return y


def _default_bracket(y: np.ndarray) -> Tuple[float, float]:
    center = float(np.median(y))
    mad = float(np.median(np.abs(y - center)))
    half = 10.0 * mad if mad > 0.0 else 10.0 * (float(y.std()) or 1.0)
    return center - half, center + half


def _m_evaluate(f: MEstimator, y: np.ndarray) -> float:
    lo, hi = f.bracket if f.bracket is not None else _default_bracket(y)
    g_lo = float(np.mean(f.score(y, lo)))
    g_hi = float(np.mean(f.score(y, hi)))
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if g_lo * g_hi > 0.0:
        raise SolverError(f"score has no sign change on bracket ({lo!r}, {hi!r})")
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        g_mid = float(np.mean(f.score(y, mid)))
        if g_mid == 0.0:
            return mid
        if g_lo * g_mid < 0.0:
            hi = mid
        else:
            lo, g_lo = mid, g_mid
    return 0.5 * (lo + hi)


def _l_evaluate(f, y: np.ndarray) -> float:
    n = y.size
    t = np.arange(1, n + 1) / n
    if isinstance(f, TrimmedMean):
        w = ((f.d1 < t) & (t <= f.d2)).astype(float) / (f.d2 - f.d1)
    else:
        w = np.asarray(f.weight(t), dtype=float)
        if w.ndim == 0:
            w = np.full(n, float(w))
    if not np.any(w != 0.0):
        raise ValueError("weight trims away the entire sample")
    return float(np.sort(y) @ w) / n


def evaluate(functional: Functional, sample) -> float:
    """The statistic T_n = T(F_n) on the sample."""
    y = _as_sample(sample)
    if isinstance(functional, SmoothOfMeans):
        v = np.array([float(np.mean(phi(y))) for phi in functional.base])
        return float(functional.outer(v))
    if isinstance(functional, MEstimator):
        return _m_evaluate(functional, y)
    if isinstance(functional, (LEstimator, TrimmedMean)):
        return _l_evaluate(functional, y)
    raise TypeError(f"unsupported functional {type(functional).__name__}")


def _trim_band(y_sorted: np.ndarray, d1: float, d2: float) -> Tuple[float, float]:
    # lower cut: the ceil(n*d1)-th order statistic (left-continuous inverse);
    # upper cut: the (floor(n*d2)+1)-th (right-continuous inverse), so the
    # band matches the half-open weight used in evaluation.
    n = y_sorted.size
    lo_rank = math.ceil(n * d1)
    hi_rank = math.floor(n * d2) + 1
    lo = -math.inf if lo_rank < 1 else float(y_sorted[lo_rank - 1])
    hi = math.inf if hi_rank > n else float(y_sorted[hi_rank - 1])
    return lo, hi


def influence_estimates(functional: Functional, sample) -> np.ndarray:
    """Plug-in influence series X_hat_t = IF(Y_t, F_n), aligned with the sample."""
    y = _as_sample(sample)
    if isinstance(functional, SmoothOfMeans):
        v = np.array([float(np.mean(phi(y))) for phi in functional.base])
        g = np.asarray(functional.gradient(v), dtype=float)
        out = np.zeros_like(y)
        for gj, phi in zip(g, functional.base):
            out += gj * (np.asarray(phi(y), dtype=float) - float(np.mean(phi(y))))
        return out
    if isinstance(functional, MEstimator):
        theta = _m_evaluate(functional, y)
        denom = float(np.mean(functional.score_derivative(y, theta)))
        if abs(denom) < 1e-12:
            raise SolverError("singular score derivative at the solution")
        return -np.asarray(functional.score(y, theta), dtype=float) / denom
    if isinstance(functional, TrimmedMean) or (
        isinstance(functional, LEstimator) and getattr(functional, "trim_band", None)
    ):
        lo, hi = _trim_band(np.sort(y), functional.d1, functional.d2)
        inside = (lo < y) & (y < hi)
        return np.where(inside, y / (functional.d2 - functional.d1), 0.0)
    raise TypeError(f"no influence form for {type(functional).__name__}")


def plugin_variance(functional: Functional, sample, scheme: BlockScheme, alpha_m: float) -> VarianceEstimate:
    """Block variance estimator applied to the influence series."""
    return variance_estimator(influence_estimates(functional, sample), scheme, alpha_m)


def block_jackknife(functional: Functional, sample, ell: int, alpha_m: float) -> VarianceEstimate:
    """Delete-a-block jackknife variance estimate (overlapping deletions).

    Recomputes the functional on each of the N = n - ell + 1 samples with
    one length-ell block removed and combines the replicates as
    ((N-1)^2 / ell^2) * (ell^alpha_m / N) * sum (T^(j) - mean T)^2.
    """
    y = _as_sample(sample)
    n = y.size
    if not 1 <= ell < n:
        raise ValueError(f"need 1 <= ell < n, got ell={ell!r}")
    n_del = n - ell + 1
    values = np.empty(n_del)
    for j in range(n_del):
        reduced = np.concatenate((y[:j], y[j + ell :]))
        try:
            values[j] = evaluate(functional, reduced)
        except Exception as exc:
            raise RuntimeError(f"functional failed with block {j} deleted") from exc
    centered = values - values.mean()
    value = (n_del - 1) ** 2 / ell**2 * (float(ell) ** alpha_m / n_del) * float(centered @ centered)
    return VarianceEstimate(value=value, scheme=BlockScheme("ol", ell), alpha_m=alpha_m, n=n)
