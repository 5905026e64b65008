"""Hermite polynomial algebra for transformations of a Gaussian series.

Uses the probabilists' convention throughout: H_0 = 1, H_1 = z and
H_{k+1}(z) = z H_k(z) - k H_{k-1}(z), which is the family generated by the
Rodrigues formula (-1)^k e^{z^2/2} d^k/dz^k e^{-z^2/2}.  The coefficients
of a transformation G are J_k = E[G(Z) H_k(Z)] for standard normal Z, and
G = sum_k (J_k / k!) H_k in L2.

Three ranks of G drive everything downstream: the Hermite rank m (first
k >= 1 with J_k != 0), the second rank m2 (next one after m), and the
pair rank m_p (first k >= m with both J_k and J_{k+1} nonzero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import gammaln


class QuadratureError(RuntimeError):
    """Gauss-Hermite orders disagree beyond tolerance."""


class DegenerateTransformError(ValueError):
    """All J_k for k >= 1 fall below the zero tolerance."""


def hermite_poly(k: int, z):
    """Probabilists' Hermite polynomial H_k evaluated at z."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    z = np.asarray(z, dtype=float)
    h_prev = np.ones_like(z)
    if k == 0:
        return float(h_prev) if z.ndim == 0 else h_prev
    h = z.copy()
    for j in range(1, k):
        h_prev, h = h, z * h - j * h_prev
    return float(h) if z.ndim == 0 else h


def _normalized_table(z: np.ndarray, k_max: int) -> np.ndarray:
    """Rows H_k(z)/sqrt(k!) for k = 0..k_max; stable to large k."""
    table = np.empty((k_max + 1, z.size))
    table[0] = 1.0
    if k_max >= 1:
        table[1] = z
    for k in range(1, k_max):
        table[k + 1] = (z * table[k] - math.sqrt(k) * table[k - 1]) / math.sqrt(k + 1)
    return table


def _quadrature_coeffs(g, k_max, order):
    z, w = hermegauss(order)
    gz = np.asarray(g(z), dtype=float)
    if not np.all(np.isfinite(gz)):
        raise ValueError("transformation returned non-finite values on quadrature nodes")
    # weights integrate against e^{-z^2/2}; normalize to the N(0,1) law
    weights = w / math.sqrt(2.0 * math.pi)
    return _normalized_table(z, k_max) @ (weights * gz)


def ranks(coefficients, tol: float | None = None):
    """(m, m2, m_p) from a J_0..J_K coefficient vector.

    With tol=None the comparison happens on the normalized scale
    J_k/sqrt(k!) against 1e-8 of its largest entry, which keeps the
    factorial growth of raw J_k from promoting quadrature noise to a rank.
    An explicit tol compares |J_k| directly.
    """
    j = np.asarray(coefficients, dtype=float)
    if j.size < 2:
        raise DegenerateTransformError("need coefficients J_0, J_1, ...")
    if tol is None:
        normalized = np.abs(j) * np.exp(-0.5 * gammaln(np.arange(j.size) + 1.0))
        live = normalized > 1e-8 * max(normalized.max(), np.finfo(float).tiny)
    else:
        live = np.abs(j) > tol
    live[0] = False
    idx = np.flatnonzero(live)
    if idx.size == 0:
        raise DegenerateTransformError("no Hermite component above tolerance for k >= 1")
    m = int(idx[0])
    later = idx[idx > m]
    m2 = int(later[0]) if later.size else math.inf
    pairs = np.flatnonzero(live[:-1] & live[1:])
    pairs = pairs[pairs >= m]
    mp = int(pairs[0]) if pairs.size else math.inf
    return m, m2, mp


@dataclass(frozen=True, eq=False)
class HermiteSpec:
    """Hermite coefficients of a transformation plus its three ranks."""

    coefficients: np.ndarray
    m: int
    m2: float
    mp: float
    tol: float

    @property
    def k_max(self) -> int:
        return self.coefficients.size - 1

    @property
    def mean(self) -> float:
        return float(self.coefficients[0])

    def normalized_sq(self) -> np.ndarray:
        """J_k^2 / k! for every k, computed on the stable log scale."""
        j = np.abs(self.coefficients)
        out = np.zeros_like(j)
        pos = j > 0
        k = np.arange(j.size)[pos]
        out[pos] = np.exp(2.0 * np.log(j[pos]) - gammaln(k + 1.0))
        return out

    def variance(self) -> float:
        """Var G(Z) = sum_{k>=1} J_k^2 / k!."""
        return float(self.normalized_sq()[1:].sum())

    def coefficient(self, k: int) -> float:
        return float(self.coefficients[k]) if k <= self.k_max else 0.0


def spec_from_coefficients(coefficients, tol: float | None = None) -> HermiteSpec:
    j = np.asarray(coefficients, dtype=float).copy()
    m, m2, mp = ranks(j, tol)
    if tol is None:
        normalized = np.abs(j) * np.exp(-0.5 * gammaln(np.arange(j.size) + 1.0))
        tol = 1e-8 * float(normalized.max())
    j.setflags(write=False)
    return HermiteSpec(coefficients=j, m=m, m2=m2, mp=mp, tol=tol)


def hermite_coefficients(g, k_max: int = 32, *, tol: float | None = None) -> HermiteSpec:
    """J_0..J_kmax of G by adaptive Gauss-Hermite quadrature.

    Doubles the quadrature order until two successive orders agree on the
    normalized coefficients to 1e-10 of their scale.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    order = max(64, 2 * (k_max + 1))
    prev = _quadrature_coeffs(g, k_max, order)
    for _ in range(3):
        order *= 2
        cur = _quadrature_coeffs(g, k_max, order)
        scale = max(np.abs(cur).max(), 1e-300)
        if np.abs(cur - prev).max() <= 1e-10 * scale:
            break
        prev = cur
    else:
        raise QuadratureError("Gauss-Hermite quadrature failed to settle; is G square-integrable?")
    # back to raw J_k = sqrt(k!) * normalized coefficient
    k = np.arange(k_max + 1)
    coeffs = cur * np.exp(0.5 * gammaln(k + 1.0))
    return spec_from_coefficients(coeffs, tol)
