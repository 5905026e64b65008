"""Covariance models and exact simulation of LRD Gaussian series.

The latent process is a mean-zero, unit-variance stationary Gaussian
sequence Z_t whose autocovariance decays like gamma(k) ~ c0 * k**(-alpha)
for a memory exponent alpha in (0, 1).  Observed series are pointwise
transforms X_t = G(Z_t).

Simulation is exact: circulant embedding of the covariance sequence with
an FFT synthesis, falling back to a dense Cholesky factorization when the
embedding is not nonnegative definite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, ClassVar, Sequence, Union

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import gammaln


class SimulationError(RuntimeError):
    """Raised when no exact sampling scheme is feasible."""


def _as_lag_array(lag):
    k = np.asarray(lag)
    if np.any(k < 0) or not np.issubdtype(k.dtype, np.number):
        raise ValueError("lags must be nonnegative")
    return k.astype(float), np.isscalar(lag) or k.ndim == 0


@dataclass(frozen=True)
class FGN:
    """Fractional Gaussian noise with Hurst index in (0, 1).

    Long-range dependent for hurst > 0.5; hurst = 0.5 is the white-noise
    boundary (alpha = 1, c0 = 0), and hurst < 0.5 gives the anti-persistent
    regime (admitted for fractional-noise calibration, e.g. bootstrap null
    samples, though outside the LRD theory).
    """

    hurst: float
    tau: ClassVar[float] = 1.0

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst!r}")

    @property
    def alpha(self) -> float:
        return 2.0 - 2.0 * self.hurst

    @property
    def c0(self) -> float:
        return self.hurst * (2.0 * self.hurst - 1.0)

    def covariance(self, lag):
        k, scalar = _as_lag_array(lag)
        h2 = 2.0 * self.hurst
        g = 0.5 * ((k + 1.0) ** h2 - 2.0 * k**h2 + np.abs(k - 1.0) ** h2)
        return float(g) if scalar else g


@dataclass(frozen=True)
class Farima:
    """FARIMA(0, d, 0) fractional noise, standardized to unit variance."""

    d: float
    tau: ClassVar[float] = 1.0

    def __post_init__(self):
        if not 0.0 < self.d < 0.5:
            raise ValueError(f"d must lie in (0, 0.5), got {self.d!r}")

    @property
    def alpha(self) -> float:
        return 1.0 - 2.0 * self.d

    @property
    def c0(self) -> float:
        # Gamma(1-d)/Gamma(d): the k**(-alpha) scale of the autocorrelation
        return math.exp(gammaln(1.0 - self.d) - gammaln(self.d))

    def covariance(self, lag):
        k, scalar = _as_lag_array(lag)
        kmax = int(k.max()) if k.size else 0
        rho = np.ones(kmax + 1)
        if kmax >= 1:
            j = np.arange(1.0, kmax + 1.0)
            # rho(k) = rho(k-1) * (k-1+d) / (k-d), stable for all d in (0, 1/2)
            rho[1:] = np.cumprod((j - 1.0 + self.d) / (j - self.d))
        g = rho[k.astype(int)]
        return float(g) if scalar else g


@dataclass(frozen=True)
class ExplicitModel:
    """Covariance gamma(k) = c0 * k**(-alpha) * (1 + k**(-tau) * L(k)).

    ``l_table`` holds L(1), L(2), ...; beyond the table L(k) = l_default.
    gamma(0) = 1 always.
    """

    alpha: float
    c0: float
    tau: float = 1.0
    l_table: tuple = ()
    l_default: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.c0 <= 0.0 or self.tau <= 0.0:
            raise ValueError("c0 and tau must be positive")
        object.__setattr__(self, "l_table", tuple(float(v) for v in self.l_table))
        probe = self.covariance(np.arange(1, max(len(self.l_table), 8) + 1))
        if np.any(np.abs(probe) > 1.0):
            raise ValueError("covariance exceeds unit variance at small lags")

    def _slowly_varying(self, k):
        L = np.full(k.shape, self.l_default)
        if self.l_table:
            idx = k.astype(int) - 1
            inside = idx < len(self.l_table)
            L[inside] = np.asarray(self.l_table)[idx[inside]]
        return L

    def covariance(self, lag):
        k, scalar = _as_lag_array(lag)
        k = np.atleast_1d(k)
        g = np.ones_like(k)
        pos = k > 0
        kp = k[pos]
        g[pos] = self.c0 * kp ** (-self.alpha) * (1.0 + kp ** (-self.tau) * self._slowly_varying(kp))
        return float(g[0]) if scalar else g


CovarianceModel = Union[FGN, Farima, ExplicitModel]


def exact_covariance(model: CovarianceModel, lag):
    """gamma_Z at one lag or an array of lags."""
    return model.covariance(lag)


# ---------------------------------------------------------------------------
# sampling

_EIG_TOL = 1e-8
_MAX_DOUBLINGS = 5
_CHOLESKY_LIMIT = 8192


def _circulant_eigenvalues(model, half):
    # ring (g0 .. g_half, g_{half-1} .. g1) of even length 2*half
    g = model.covariance(np.arange(half + 1))
    ring = np.concatenate([g, g[-2:0:-1]])
    return np.fft.rfft(ring).real


def _embedding(model, n):
    half = max(n - 1, 1)
    for _ in range(_MAX_DOUBLINGS):
        ev = _circulant_eigenvalues(model, half)
        if ev.min() >= -_EIG_TOL * ev.max():
            return np.clip(ev, 0.0, None), 2 * half
        half *= 2
    return None, 0


def _synthesize(ev, ring_size, n, size, rng):
    # Hermitian half-spectrum draw; endpoints are the two real Fourier modes
    k = ev.shape[0]
    re = rng.standard_normal((size, k))
    im = rng.standard_normal((size, k))
    w = np.sqrt(ev / (2.0 * ring_size)) * (re + 1j * im)
    w[:, 0] = math.sqrt(ev[0] / ring_size) * re[:, 0]
    w[:, -1] = math.sqrt(ev[-1] / ring_size) * re[:, -1]
    return np.fft.irfft(w, n=ring_size, axis=-1)[:, :n] * ring_size


def _cholesky_paths(model, n, size, rng):
    if n > _CHOLESKY_LIMIT:
        raise SimulationError(
            f"circulant embedding failed and n={n} exceeds the dense fallback limit"
        )
    cov = toeplitz(model.covariance(np.arange(n)))
    jitter = 1e-12 * np.trace(cov) / n
    try:
        factor = np.linalg.cholesky(cov + jitter * np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise SimulationError("covariance matrix is not positive definite") from exc
    return rng.standard_normal((size, n)) @ factor.T


def gaussian_sample_paths(model: CovarianceModel, n: int, size: int, rng) -> np.ndarray:
    """Exact sample paths of the latent Gaussian process, one per row."""
    if n < 2:
        raise ValueError("need n >= 2")
    ev, ring_size = _embedding(model, n)
    if ev is None:
        return _cholesky_paths(model, n, size, rng)
    return _synthesize(ev, ring_size, n, size, rng)


def simulate_gaussian(model: CovarianceModel, n: int, seed=None, *, rng=None) -> np.ndarray:
    """One exact sample of length n; deterministic under a fixed seed."""
    if rng is None:
        rng = np.random.default_rng(seed)
    return gaussian_sample_paths(model, n, 1, rng)[0]


def replicate_rng(seed, index: int):
    """Independent per-replicate stream, stable under scheduling order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


# ---------------------------------------------------------------------------
# pointwise transforms

def _hermite_values(k, z):
    h_prev, h = np.ones_like(z), z.copy()
    if k == 0:
        return h_prev
    for j in range(1, k):
        h_prev, h = h, z * h - j * h_prev
    return h


def _expansion_fn(coeffs):
    c = np.asarray(coeffs, dtype=float)

    def g(z):
        out = np.zeros_like(z)
        h_prev, h = np.ones_like(z), z
        fact = 1.0
        for k in range(len(c)):
            out += (c[k] / fact) * (h_prev if k == 0 else h)
            if k >= 1:
                h_prev, h = h, z * h - k * h_prev
            fact *= k + 1
        return out

    return g


_SQRT3 = math.sqrt(3.0)

TRANSFORM_PRESETS: dict = {
    "identity": lambda z: z,
    "sin": np.sin,
    "cos": np.cos,
    # z + H2(z)/20, the mildly nonlinear rank-1 design
    "zh2": lambda z: z + (z * z - 1.0) / 20.0,
    # z + H2(z)/20 + H3(z)/(20*sqrt(3)), the rank-1 test design
    "g1": lambda z: z + (z * z - 1.0) / 20.0 + (z**3 - 3.0 * z) / (20.0 * _SQRT3),
}


def preset_transform(name: str) -> Callable:
    """Resolve a transform by name.

    Accepts the registry names, ``h<k>`` for Hermite polynomials, and the
    prefixed forms ``poly:c0,c1,...`` (power series) and
    ``hermite:J0,J1,...`` (Hermite coefficients, G = sum J_k H_k / k!).
    """
    key = name.strip().lower()
    if key in TRANSFORM_PRESETS:
        return TRANSFORM_PRESETS[key]
    if key.startswith("h") and key[1:].isdigit():
        k = int(key[1:])
        return lambda z: _hermite_values(k, z)
    if key.startswith("poly:"):
        c = [float(v) for v in key[5:].split(",")]
        return lambda z: np.polynomial.polynomial.polyval(z, c)
    if key.startswith("hermite:"):
        c = [float(v) for v in key[8:].split(",")]
        return _expansion_fn(c)
    raise ValueError(f"unknown transform {name!r}")


def transform(series, g) -> np.ndarray:
    """Pointwise X_t = G(Z_t); G is a callable or a preset name."""
    fn = g if callable(g) else preset_transform(g)
    z = np.asarray(series, dtype=float)
    x = np.asarray(fn(z), dtype=float)
    if x.shape != z.shape:
        raise ValueError("transform must be applied pointwise")
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise ValueError(f"transform produced a non-finite value at index {bad[0]}")
    return x
