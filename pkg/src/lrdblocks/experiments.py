"""Monte Carlo harness for the block-resampling study.

Reproduces the simulation tables: empirical MSE curves over block sizes and
their argmins, standardized MSE of variance estimators under data-driven
block selection (sample mean and trimmed mean), bootstrap confidence
interval coverage, and rank-test rejection rates.  Every experiment runs
from per-replicate seed streams so cell values are independent of replicate
scheduling, and CSV/manifest outputs are byte-stable under a fixed config.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, ndtr

from .estimators import BlockScheme, overlapping_means, target_variance, variance_estimator
from .functionals import (
    Functional,
    TrimmedMean,
    evaluate,
    influence_estimates,
    mean_functional,
)
from .hermite import HermiteSpec, hermite_coefficients, spec_from_coefficients
from .models import (
    FGN,
    CovarianceModel,
    Farima,
    gaussian_sample_paths,
    preset_transform,
    replicate_rng,
    simulate_gaussian,
)
from .ranktest import (
    _MIN_BLOCKS,
    _STAT_ROWS,
    _block_mean_matrix,
    _calibration_quantile,
    _studentized_uniforms,
    block_residuals,
)
from .selection import local_whittle, two_scale_block_estimate

__all__ = [
    "BootstrapInterval",
    "CurveResult",
    "ExperimentConfig",
    "McSummary",
    "TableResult",
    "TableRun",
    "bootstrap_ci",
    "coverage_study",
    "influence_variance",
    "mse_curve",
    "optimal_block_table",
    "process_mean",
    "pushforward_cdf",
    "pushforward_quantile",
    "rank_test_power",
    "trimmed_influence_spec",
    "trimmed_mean_parameter",
    "variance_mse_table",
    "winsorized_influence_spec",
]

_Z_MAX = 12.0  # Gaussian mass beyond 12 sigma is ~1e-32, below every tolerance here


# ---------------------------------------------------------------------------
# result containers


@dataclass(frozen=True)
class McSummary:
    """One Monte Carlo cell: point estimate, its standard error, replicates."""

    value: float
    mc_se: float
    reps: int

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.mc_se >= 0.0:
            raise ValueError("mc_se must be non-negative")

    @classmethod
    def of_sample(cls, values) -> "McSummary":
        v = np.asarray(values, dtype=float)
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        return cls(value=float(v.mean()), mc_se=se, reps=v.size)

    @classmethod
    def rate(cls, successes: int, reps: int) -> "McSummary":
        p = successes / reps
        if not 0.0 <= p <= 1.0:
            raise ValueError("a rate must lie in [0, 1]")
        return cls(value=p, mc_se=math.sqrt(p * (1.0 - p) / reps), reps=reps)


_POLICIES = ("sqrt-n", "data-driven")


def _resolve_policy_ell(policy: Union[str, int], n: int) -> Optional[int]:
    """Block length for a policy, or None when it needs the data (rule-based)."""
    if isinstance(policy, int):
        if not 2 <= policy <= n // 2:
            raise ValueError(f"fixed block length {policy} not in [2, {n // 2}] for n={n}")
        return policy
    if policy == "sqrt-n":
        ell = math.isqrt(n)
        if ell < 2:
            raise ValueError(f"sqrt-n policy needs n >= 4, got n={n}")
        return ell
    if policy == "data-driven":
        h = int(9.0 * n**0.5)
        h2 = int(12.0 * n ** (0.95 / 2))
        if h < 8 or h2 < 8 or h == h2 or h >= n or not 2 <= math.isqrt(n) < h:
            raise ValueError(f"data-driven policy is not resolvable at n={n}")
        return None
    raise ValueError(f"ell policy must be an int or one of {_POLICIES}, got {policy!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo design: a process, sample sizes, and estimator settings."""

    model: CovarianceModel
    transform: Union[str, Callable]
    n_values: tuple
    reps: int
    scheme_kind: str = "ol"
    ell_policy: Union[str, int] = "sqrt-n"
    ell_grid: Optional[tuple] = None
    alpha_m: Optional[float] = None
    seed: int = 0
    out_path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if not self.n_values:
            raise ValueError("n_values must be non-empty")
        if self.reps < 1:
            raise ValueError("replicate count must be >= 1")
        if self.scheme_kind not in ("ol", "nol"):
            raise ValueError(f"scheme_kind must be 'ol' or 'nol', got {self.scheme_kind!r}")
        for n in self.n_values:
            _resolve_policy_ell(self.ell_policy, n)
        if self.ell_grid is not None:
            grid = tuple(int(v) for v in self.ell_grid)
            if not grid or any(not 2 <= v <= min(self.n_values) // 2 for v in grid):
                raise ValueError("ell_grid entries must lie in [2, min(n)/2]")
            object.__setattr__(self, "ell_grid", grid)

    def transform_fn(self) -> Callable:
        return self.transform if callable(self.transform) else preset_transform(self.transform)

    def transform_label(self) -> str:
        if callable(self.transform):
            return getattr(self.transform, "__name__", repr(self.transform))
        return self.transform


@dataclass(frozen=True)
class TableRun:
    """Shared harness settings for the fixed table designs."""

    reps: Optional[int] = None
    seed: int = 2026
    out_dir: Optional[Union[str, Path]] = None
    full_scale: bool = False

    def resolve_reps(self, desk: int, full: int) -> int:
        if self.reps is not None:
            if self.reps < 1:
                raise ValueError("reps must be >= 1")
            return self.reps
        return full if self.full_scale else desk


@dataclass(frozen=True)
class TableResult:
    """A finished table: column names, raw rows, and per-cell summaries."""

    name: str
    columns: tuple
    rows: tuple
    cells: Mapping[tuple, McSummary] = field(repr=False)
    csv_path: Optional[Path] = None


@dataclass(frozen=True)
class CurveResult:
    """Standardized MSE over a block-size grid, with per-n argmins."""

    columns: tuple
    rows: tuple
    argmin: Mapping[int, int]
    csv_path: Optional[Path] = None


# ---------------------------------------------------------------------------
# pushforward law of G(Z): CDF, quantiles, and trimmed-mean truth


@lru_cache(maxsize=32)
def _scan_table(label: str):
    g = preset_transform(label)
    z = np.linspace(-_Z_MAX, _Z_MAX, 24001)
    return z, np.asarray(g(z), dtype=float)


def _scalar_fn(g: Callable) -> Callable:
    return lambda t: float(np.asarray(g(np.asarray([t], dtype=float)))[0])


def _level_roots(g, level, z, vals):
    """All solutions of g = level inside the scan range, by bracketed bisection."""
    if not np.isfinite(level):
        return []
    d = vals - level
    f = _scalar_fn(g)
    roots = [float(z[i]) for i in np.flatnonzero(d == 0.0)]
    sign_flip = np.flatnonzero(d[:-1] * d[1:] < 0.0)
    roots += [brentq(lambda t: f(t) - level, z[i], z[i + 1], xtol=1e-13) for i in sign_flip]
    return roots


def _preimage_intervals(label: str, lo: float, hi: float):
    """z-intervals inside [-Z_MAX, Z_MAX] where lo < G(z) < hi."""
    g = preset_transform(label)
    z, vals = _scan_table(label)
    cuts = sorted(set(_level_roots(g, lo, z, vals) + _level_roots(g, hi, z, vals)))
    edges = [-_Z_MAX, *cuts, _Z_MAX]
    f = _scalar_fn(g)
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        if lo < f(0.5 * (a + b)) < hi:
            if out and out[-1][1] == a:
                out[-1] = (out[-1][0], b)
            else:
                out.append((a, b))
    return out


def pushforward_cdf(transform: str, y: float) -> float:
    """P(G(Z) <= y) for standard normal Z."""
    total = 0.0
    for a, b in _preimage_intervals(transform, -math.inf, float(y)):
        total += float(ndtr(b) - ndtr(a))
    return min(total, 1.0)


def pushforward_quantile(transform: str, p: float) -> float:
    """Quantile of the G(Z) law, by root-finding on the interval-sum CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    _, vals = _scan_table(transform)
    lo, hi = float(vals.min()), float(vals.max())
    f_lo = pushforward_cdf(transform, lo) - p
    if f_lo >= 0.0:
        return lo
    return float(brentq(lambda y: pushforward_cdf(transform, y) - p, lo, hi, xtol=1e-12))


def _gauss_legendre_sum(fn: Callable, intervals, *, tol: float = 1e-10) -> float:
    """Integral of a smooth vectorized fn over a union of intervals.

    Gauss-Legendre with node doubling until two consecutive orders agree.
    """
    total = None
    nodes = 200
    while nodes <= 3200:
        t_ref, w_ref = np.polynomial.legendre.leggauss(nodes)
        acc = 0.0
        for a, b in intervals:
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            t = mid + half * t_ref
            acc += half * float(w_ref @ fn(t))
        if total is not None and abs(acc - total) <= tol * max(1.0, abs(acc)):
            return acc
        total = acc
        nodes *= 2
    raise RuntimeError("quadrature failed to stabilize on the pushforward law")


def _phi(t: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)


@lru_cache(maxsize=32)
def process_mean(transform: str) -> float:
    """E G(Z), the mean-functional truth for coverage studies."""
    g = preset_transform(transform)
    return _gauss_legendre_sum(lambda t: np.asarray(g(t)) * _phi(t), [(-_Z_MAX, _Z_MAX)])


@lru_cache(maxsize=32)
def _trim_quantiles(transform: str, delta: float):
    return (
        pushforward_quantile(transform, delta),
        pushforward_quantile(transform, 1.0 - delta),
    )


@lru_cache(maxsize=32)
def trimmed_mean_parameter(transform: str, delta: float = 0.2) -> float:
    """Trimmed-mean parameter of the G(Z) law: E[Y 1(q_lo < Y < q_hi)]/(1-2*delta)."""
    q_lo, q_hi = _trim_quantiles(transform, delta)
    g = preset_transform(transform)
    bands = _preimage_intervals(transform, q_lo, q_hi)
    raw = _gauss_legendre_sum(lambda t: np.asarray(g(t)) * _phi(t), bands)
    return raw / (1.0 - 2.0 * delta)


def _normalized_hermite_table(t: np.ndarray, k_max: int) -> np.ndarray:
    """Rows He_k(t)/sqrt(k!) for k = 0..k_max, by the stable scaled recurrence."""
    table = np.empty((k_max + 1, t.size))
    table[0] = 1.0
    if k_max >= 1:
        table[1] = t
    for k in range(1, k_max):
        table[k + 1] = (t * table[k] - math.sqrt(k) * table[k - 1]) / math.sqrt(k + 1)
    return table


def _hermite_projection(value_fn: Callable, pieces, k_max: int) -> HermiteSpec:
    """Project a piecewise-smooth function onto Hermite polynomials.

    Gauss-Legendre per piece with node doubling; pieces must be split at
    every discontinuity or kink of value_fn.
    """
    nodes = 400
    coeffs = None
    while nodes <= 6400:
        t_ref, w_ref = np.polynomial.legendre.leggauss(nodes)
        acc = np.zeros(k_max + 1)
        for a, b in pieces:
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            t = mid + half * t_ref
            weight = half * w_ref * value_fn(t) * _phi(t)
            acc += _normalized_hermite_table(t, k_max) @ weight
        if coeffs is not None and np.max(np.abs(acc - coeffs)) < 1e-10:
            coeffs = acc
            break
        coeffs = acc
        nodes *= 2
    # back to raw inner products J_k = c_k sqrt(k!)
    ks = np.arange(k_max + 1)
    raw = coeffs * np.exp(0.5 * gammaln(ks + 1.0))
    return spec_from_coefficients(raw)


def _quantile_cuts(transform: str, delta: float):
    """Partition of the scan range at every crossing of the two trim levels."""
    q_lo, q_hi = _trim_quantiles(transform, delta)
    g = preset_transform(transform)
    z, vals = _scan_table(transform)
    cuts = sorted(set(_level_roots(g, q_lo, z, vals) + _level_roots(g, q_hi, z, vals)))
    edges = [-_Z_MAX, *cuts, _Z_MAX]
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


@lru_cache(maxsize=32)
def trimmed_influence_spec(transform: str, delta: float = 0.2, k_max: int = 128) -> HermiteSpec:
    """Hermite description of the trimmed-mean influence h(z) = G(z)1(band)/(1-2*delta).

    The band is cut at the population quantiles of the G(Z) law; this is the
    function whose estimated values the plug-in substitutes into the block
    variance estimator.
    """
    q_lo, q_hi = _trim_quantiles(transform, delta)
    g = preset_transform(transform)
    bands = _preimage_intervals(transform, q_lo, q_hi)
    if not bands:
        raise ValueError("the trimming band has no Gaussian preimage")
    scale = 1.0 - 2.0 * delta
    return _hermite_projection(lambda t: np.asarray(g(t)) / scale, bands, k_max)


@lru_cache(maxsize=32)
def winsorized_influence_spec(transform: str, delta: float = 0.2, k_max: int = 128) -> HermiteSpec:
    """Hermite description of the winsorized influence clip(G(z), q_lo, q_hi)/(1-2*delta).

    This is the full linearization of the trimmed mean: estimating the trim
    quantiles turns the discarded tails into point masses at the cut levels,
    so the sampling variance of the trimmed mean tracks the clipped function,
    not the band-restricted one.
    """
    q_lo, q_hi = _trim_quantiles(transform, delta)
    g = preset_transform(transform)
    scale = 1.0 - 2.0 * delta
    pieces = _quantile_cuts(transform, delta)
    return _hermite_projection(
        lambda t: np.clip(np.asarray(g(t)), q_lo, q_hi) / scale, pieces, k_max
    )


@lru_cache(maxsize=32)
def influence_variance(transform: str, delta: float = 0.2, form: str = "band") -> float:
    """Exact Var of the influence function, by direct quadrature.

    form='band' is the trimming-band influence G(z)1(q_lo < G < q_hi)/(1-2d);
    form='winsorized' is the clipped linearization clip(G(z), q_lo, q_hi)/(1-2d).
    The truncated Hermite spec understates the lag-0 variance (slowly for the
    discontinuous band form); every lag k >= 1 covariance is unaffected
    because the tail is damped by rho(k)^k_max.
    """
    q_lo, q_hi = _trim_quantiles(transform, delta)
    g = preset_transform(transform)
    scale = 1.0 - 2.0 * delta
    if form == "band":
        pieces = _preimage_intervals(transform, q_lo, q_hi)
        val = lambda t: np.asarray(g(t)) / scale
    elif form == "winsorized":
        pieces = _quantile_cuts(transform, delta)
        val = lambda t: np.clip(np.asarray(g(t)), q_lo, q_hi) / scale
    else:
        raise ValueError(f"form must be 'band' or 'winsorized', got {form!r}")
    first = _gauss_legendre_sum(lambda t: val(t) * _phi(t), pieces)
    second = _gauss_legendre_sum(lambda t: val(t) ** 2 * _phi(t), pieces)
    return second - first * first


def _trimmed_target(model: CovarianceModel, transform: str, n: int, delta: float = 0.2) -> float:
    """n^am Var(trimmed mean), via the winsorized linearization.

    The plug-in estimator substitutes band influences, but the statistic it
    is judged against fluctuates with the clipped function: the estimated
    trim quantiles move the discarded tails onto the cut levels instead of
    deleting them.  The lag-0 term is corrected to the exact quadrature value.
    """
    spec = winsorized_influence_spec(transform, delta)
    am = model.alpha * spec.m
    base = target_variance(model, spec, n, alpha_m=am)
    gap = influence_variance(transform, delta, "winsorized") - spec.variance()
    return base + n ** (am - 1.0) * gap


# ---------------------------------------------------------------------------
# block bootstrap confidence interval


@dataclass(frozen=True)
class BootstrapInterval:
    """Symmetric bootstrap interval for a functional of an LRD series."""

    lower: float
    upper: float
    center: float
    q_star: float
    alpha_m: float
    ell: int
    blocks: int
    level: float
    resamples: int

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    def covers(self, theta: float) -> bool:
        return self.lower <= theta <= self.upper


def bootstrap_ci(
    series,
    functional: Optional[Functional] = None,
    ell: Optional[int] = None,
    level: float = 0.95,
    resamples: int = 200,
    *,
    alpha_m: Optional[float] = None,
    seed=None,
    rng=None,
) -> BootstrapInterval:
    """Block bootstrap confidence interval for T(F) from one observed stretch.

    Resamples b = floor(n/ell) overlapping blocks of estimated influences,
    forms Delta* = sqrt(b) ell^(am/2) |mean* - E* mean|, and returns
    T_n +/- q*/n^(am/2) with q* the level-quantile of the Delta* sample.
    """
    if resamples < 50:
        raise ValueError("resamples must be >= 50")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or y.size < 4:
        raise ValueError("series must be one-dimensional with n >= 4")
    n = y.size
    if functional is None:
        functional = mean_functional()
    if ell is None:
        ell = math.isqrt(n)
    if not 2 <= ell <= n // 2:
        raise ValueError(f"block length {ell} must lie in [2, n/2]")

    t_n = evaluate(functional, y)
    x_hat = influence_estimates(functional, y)
    b = n // ell

    if np.ptp(x_hat) == 0.0:
        # degenerate influences: every resample average coincides
        return BootstrapInterval(
            lower=t_n, upper=t_n, center=t_n, q_star=0.0, alpha_m=math.nan,
            ell=ell, blocks=b, level=level, resamples=resamples,
        )

    am = float(local_whittle(x_hat)) if alpha_m is None else float(alpha_m)
    if rng is None:
        rng = np.random.default_rng(seed)
    w = overlapping_means(x_hat, ell)
    e_star = float(w.mean())
    picks = rng.integers(0, w.size, size=(resamples, b))
    delta = math.sqrt(b) * ell ** (0.5 * am) * np.abs(w[picks].mean(axis=1) - e_star)
    order = np.sort(delta)
    q_star = float(order[math.ceil(resamples * level) - 1])
    half = q_star / n ** (0.5 * am)
    return BootstrapInterval(
        lower=t_n - half, upper=t_n + half, center=t_n, q_star=q_star,
        alpha_m=am, ell=ell, blocks=b, level=level, resamples=resamples,
    )


# ---------------------------------------------------------------------------
# output plumbing


def _cell_stream(seed: int, label: str, replicate: int):
    digest = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "big")
    return replicate_rng((seed, digest), replicate)


def _format_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _write_csv(path: Path, columns, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_value(v) for v in row])
    return path


def _write_manifest(path: Path, table: str, config: dict) -> Path:
    try:
        from importlib.metadata import version

        pkg_version = version("lrdblocks")
    except Exception:
        pkg_version = "unknown"
    import scipy

    payload = {
        "table": table,
        "config": config,
        "config_sha256": hashlib.sha256(
            json.dumps(config, sort_keys=True).encode()
        ).hexdigest(),
        "versions": {
            "lrdblocks": pkg_version,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _emit(name: str, columns, rows, cells, run: TableRun, config: dict) -> TableResult:
    csv_path = None
    if run.out_dir is not None:
        out = Path(run.out_dir)
        csv_path = _write_csv(out / f"{name}.csv", columns, rows)
        _write_manifest(out / f"{name}.manifest.json", name, config)
    return TableResult(
        name=name, columns=tuple(columns), rows=tuple(tuple(r) for r in rows),
        cells=cells, csv_path=csv_path,
    )


# ---------------------------------------------------------------------------
# MSE curves over block sizes


def _curve_values(x: np.ndarray, grid, scheme_kind: str, alpha_m: float) -> np.ndarray:
    """Block variance estimates over a grid of lengths, one cumulative sum."""
    n = x.size
    c = np.concatenate([[0.0], np.cumsum(x, dtype=float)])
    out = np.empty(len(grid))
    for i, ell in enumerate(grid):
        if scheme_kind == "ol":
            w = (c[ell:] - c[:-ell]) / ell
        else:
            b = n // ell
            w = (c[ell * np.arange(1, b + 1)] - c[ell * np.arange(b)]) / ell
        out[i] = ell**alpha_m * w.var()
    return out


def _auto_grid(n: int) -> tuple:
    return tuple(range(2, max(13, 2 * math.isqrt(n)) + 1))


def _hermite_rank_spec(m: int) -> HermiteSpec:
    return spec_from_coefficients([0.0] * m + [float(math.factorial(m))])


def _spec_for_transform(transform: Union[str, Callable]) -> HermiteSpec:
    if isinstance(transform, str):
        key = transform.strip().lower()
        if key.startswith("h") and key[1:].isdigit():
            return _hermite_rank_spec(int(key[1:]))
        return hermite_coefficients(preset_transform(key), k_max=32)
    return hermite_coefficients(transform, k_max=32)


def mse_curve(config: ExperimentConfig) -> CurveResult:
    """Standardized MSE of the block variance estimator over a block-size grid.

    For each n, averages (V_ell - v_n)^2 / v_n^2 across replicates against the
    exact target v_n = n^am Var(mean), and reports the grid argmin.
    """
    g = config.transform_fn()
    rows = []
    argmin = {}
    label_base = f"msecurve:{config.transform_label()}:{config.scheme_kind}"
    spec = _spec_for_transform(config.transform)
    am = config.alpha_m if config.alpha_m is not None else config.model.alpha * spec.m
    for n in config.n_values:
        grid = config.ell_grid if config.ell_grid is not None else _auto_grid(n)
        v_n = target_variance(config.model, spec, n, alpha_m=am)
        acc = np.zeros(len(grid))
        acc_sq = np.zeros(len(grid))
        for i in range(config.reps):
            rng = _cell_stream(config.seed, f"{label_base}:{n}", i)
            x = g(simulate_gaussian(config.model, n, rng=rng))
            err = (_curve_values(x, grid, config.scheme_kind, am) - v_n) ** 2 / v_n**2
            acc += err
            acc_sq += err * err
        mse = acc / config.reps
        var = np.maximum(acc_sq / config.reps - mse**2, 0.0)
        se = np.sqrt(var / max(config.reps - 1, 1))
        best = int(np.argmin(mse))
        argmin[n] = int(grid[best])
        for j, ell in enumerate(grid):
            rows.append((n, int(ell), float(mse[j]), float(se[j]), config.reps))
    columns = ("n", "ell", "mse", "mc_se", "reps")
    csv_path = None
    if config.out_path is not None:
        csv_path = _write_csv(Path(config.out_path), columns, rows)
        _write_manifest(
            Path(config.out_path).with_suffix(".manifest.json"),
            "msecurve",
            {
                "model": repr(config.model),
                "transform": config.transform_label(),
                "n_values": list(config.n_values),
                "reps": config.reps,
                "scheme_kind": config.scheme_kind,
                "seed": config.seed,
            },
        )
    return CurveResult(
        columns=columns, rows=tuple(rows), argmin=argmin, csv_path=csv_path
    )


# ---------------------------------------------------------------------------
# table designs


_TABLE1_DESIGN = (
    (2, 0.400), (2, 0.425), (2, 0.450),
    (3, 0.300), (3, 0.315), (3, 0.330),
)
_TABLE1_N = (1000, 5000)

_TABLE2_DESIGN = ((2, 0.20), (2, 0.45), (3, 0.20), (3, 0.30))
_TABLE4_DESIGN = (("h2", 0.20), ("h2", 0.45), ("sin", 0.20), ("sin", 0.30))
_TABLE24_N = (500, 1000, 2000)

_TABLE5_TRANSFORMS = ("sin", "zh2")
_TABLE5_ALPHAS = (0.2, 0.5, 0.8)
_TABLE5_N = (1000, 5000)

_TABLE6_TRANSFORMS = ("g1", "cos")
_TABLE6_ALPHAS = (0.2, 0.8)
_TABLE6_N = (400, 1000, 10000)


def optimal_block_table(run: Optional[TableRun] = None) -> TableResult:
    """Empirical optimal OL block sizes for Hermite-rank 2 and 3 processes."""
    run = run or TableRun()
    reps = run.resolve_reps(desk=1000, full=3000)
    rows = []
    cells = {}
    for m, alpha in _TABLE1_DESIGN:
        for n in _TABLE1_N:
            config = ExperimentConfig(
                model=FGN(1.0 - alpha / 2.0),
                transform=f"h{m}",
                n_values=(n,),
                reps=reps,
                scheme_kind="ol",
                alpha_m=alpha * m,
                seed=run.seed,
            )
            curve = mse_curve(config)
            ell_best = curve.argmin[n]
            at_min = next(r for r in curve.rows if r[0] == n and r[1] == ell_best)
            cells[(m, alpha, n)] = McSummary(value=float(ell_best), mc_se=at_min[3], reps=reps)
            rows.append((m, alpha, n, ell_best, at_min[2], at_min[3], reps))
    columns = ("m", "alpha", "n", "ell_opt", "mse_at_opt", "mc_se", "reps")
    return _emit(
        "table1", columns, rows, cells, run,
        {"design": [list(d) for d in _TABLE1_DESIGN], "n": list(_TABLE1_N),
         "reps": reps, "seed": run.seed, "scheme": "ol"},
    )


def _rule_and_sqrt_mse(x_hat, n, v_target):
    """Standardized squared errors at the rule-selected and sqrt-n blocks."""
    am = float(local_whittle(x_hat))
    sel = two_scale_block_estimate(x_hat)
    out = {}
    for policy, ell in (("rule", sel.ell_n), ("sqrt", math.isqrt(n))):
        vh = variance_estimator(x_hat, BlockScheme("ol", ell), am).value
        out[policy] = (vh - v_target) ** 2 / v_target**2
    return out


def variance_mse_table(
    run: Optional[TableRun] = None,
    kind: str = "mean",
    *,
    designs: Optional[Sequence] = None,
    n_values: Optional[Sequence[int]] = None,
) -> TableResult:
    """Standardized MSE of OL variance estimators at data-driven block sizes.

    kind='mean' covers the Hermite-rank designs for the sample mean;
    kind='trimmed' the plug-in estimator for the 40% trimmed mean, computed
    on estimated influences with the target taken from the population
    influence transform.
    """
    run = run or TableRun()
    if kind not in ("mean", "trimmed"):
        raise ValueError(f"kind must be 'mean' or 'trimmed', got {kind!r}")
    reps = run.resolve_reps(desk=200, full=500)
    designs = tuple(designs) if designs is not None else (
        _TABLE2_DESIGN if kind == "mean" else _TABLE4_DESIGN
    )
    n_list = tuple(n_values) if n_values is not None else _TABLE24_N
    trimmer = TrimmedMean(0.2)

    rows = []
    cells = {}
    for proc, alpha in designs:
        model = FGN(1.0 - alpha / 2.0)
        if kind == "mean":
            g = preset_transform(f"h{proc}")
            spec = _hermite_rank_spec(int(proc))
            label = f"h{proc}"
        else:
            g = preset_transform(proc)
            label = proc
        for n in n_list:
            v_target = (
                target_variance(model, spec, n) if kind == "mean"
                else _trimmed_target(model, proc, n)
            )
            errs = {"rule": [], "sqrt": []}
            for i in range(reps):
                rng = _cell_stream(run.seed, f"table-{kind}:{label}:{alpha}:{n}", i)
                y = g(simulate_gaussian(model, n, rng=rng))
                x_hat = y if kind == "mean" else influence_estimates(trimmer, y)
                for policy, err in _rule_and_sqrt_mse(x_hat, n, v_target).items():
                    errs[policy].append(err)
            for policy in ("rule", "sqrt"):
                summary = McSummary.of_sample(errs[policy])
                cells[(label, alpha, n, policy)] = summary
                rows.append((label, alpha, n, policy, summary.value, summary.mc_se, reps))
    columns = ("process", "alpha", "n", "block_policy", "mse", "mc_se", "reps")
    name = "table2" if kind == "mean" else "table4"
    return _emit(
        name, columns, rows, cells, run,
        {"kind": kind, "design": [list(d) for d in designs], "n": list(n_list),
         "reps": reps, "seed": run.seed},
    )


def coverage_study(
    run: Optional[TableRun] = None,
    *,
    statistics: Sequence[str] = ("mean", "trimmed"),
    transforms: Optional[Sequence[str]] = None,
    alphas: Optional[Sequence[float]] = None,
    n_values: Optional[Sequence[int]] = None,
    resamples: int = 200,
    level: float = 0.95,
) -> TableResult:
    """Empirical coverage of block bootstrap confidence intervals.

    Per replicate, selects blocks by the two-scale rule (and the sqrt-n
    default) on the estimated influence series, bootstraps the studentized
    deviation, and checks whether the interval covers the process truth.
    """
    run = run or TableRun()
    reps = run.resolve_reps(desk=200, full=500)
    transforms = tuple(transforms) if transforms is not None else _TABLE5_TRANSFORMS
    alphas = tuple(alphas) if alphas is not None else _TABLE5_ALPHAS
    n_list = tuple(n_values) if n_values is not None else _TABLE5_N

    rows = []
    cells = {}
    for statistic in statistics:
        if statistic == "mean":
            functional: Functional = mean_functional()
        elif statistic == "trimmed":
            functional = TrimmedMean(0.2)
        else:
            raise ValueError(f"statistic must be 'mean' or 'trimmed', got {statistic!r}")
        for label in transforms:
            g = preset_transform(label)
            theta = (
                process_mean(label) if statistic == "mean"
                else trimmed_mean_parameter(label, 0.2)
            )
            for alpha in alphas:
                model = FGN(1.0 - alpha / 2.0)
                for n in n_list:
                    hits = {"rule": 0, "sqrt": 0}
                    for i in range(reps):
                        rng = _cell_stream(
                            run.seed, f"table5:{statistic}:{label}:{alpha}:{n}", i
                        )
                        y = g(simulate_gaussian(model, n, rng=rng))
                        x_hat = influence_estimates(functional, y)
                        am = float(local_whittle(x_hat))
                        sel = two_scale_block_estimate(x_hat)
                        for policy, ell in (("rule", sel.ell_n), ("sqrt", math.isqrt(n))):
                            ci = bootstrap_ci(
                                y, functional, ell, level, resamples,
                                alpha_m=am, rng=rng,
                            )
                            hits[policy] += ci.covers(theta)
                    for policy in ("rule", "sqrt"):
                        summary = McSummary.rate(hits[policy], reps)
                        cells[(statistic, label, alpha, n, policy)] = summary
                        rows.append(
                            (statistic, label, alpha, n, policy,
                             summary.value, summary.mc_se, reps)
                        )
    columns = ("statistic", "process", "alpha", "n", "block_policy",
               "coverage", "mc_se", "reps")
    return _emit(
        "table5", columns, rows, cells, run,
        {"statistics": list(statistics), "transforms": list(transforms),
         "alphas": list(alphas), "n": list(n_list), "reps": reps,
         "resamples": resamples, "level": level, "seed": run.seed},
    )


def rank_test_power(
    run: Optional[TableRun] = None,
    *,
    transforms: Optional[Sequence[str]] = None,
    alphas: Optional[Sequence[float]] = None,
    n_values: Optional[Sequence[int]] = None,
    schemes: Sequence[str] = ("ol", "nol"),
    statistic: str = "ad",
    resamples: int = 200,
    alpha_sig: float = 0.05,
) -> TableResult:
    """Rejection rates of the bootstrap Hermite-rank test.

    The latent process is standardized FARIMA(0, (1-alpha)/2, 0); both block
    schemes are evaluated on the same replicate and share one batch of
    fractional Gaussian noise resamples, which is valid because the null
    calibration depends only on the fitted Hurst index.
    """
    run = run or TableRun()
    reps = run.resolve_reps(desk=200, full=500)
    transforms = tuple(transforms) if transforms is not None else _TABLE6_TRANSFORMS
    alphas = tuple(alphas) if alphas is not None else _TABLE6_ALPHAS
    n_list = tuple(n_values) if n_values is not None else _TABLE6_N
    stat_rows = _STAT_ROWS[statistic]

    rows = []
    cells = {}
    for label in transforms:
        g = preset_transform(label)
        for alpha in alphas:
            model = Farima((1.0 - alpha) / 2.0)
            for n in n_list:
                ell = math.isqrt(n)
                rejections = {s: 0 for s in schemes}
                for i in range(reps):
                    rng = _cell_stream(run.seed, f"table6:{label}:{alpha}:{n}", i)
                    x = g(simulate_gaussian(model, n, rng=rng))
                    am = float(local_whittle(x))
                    hurst = 1.0 - am / 2.0
                    paths = gaussian_sample_paths(FGN(hurst), n, resamples, rng)
                    for scheme in schemes:
                        b = n // ell if scheme == "nol" else n - ell + 1
                        if b < _MIN_BLOCKS:
                            raise ValueError(f"too few blocks at n={n}, ell={ell}")
                        t0 = float(
                            stat_rows(block_residuals(x, ell, scheme)[np.newaxis, :])[0]
                        )
                        means = _block_mean_matrix(paths, ell, scheme)
                        null = stat_rows(_studentized_uniforms(means))
                        q_hat = _calibration_quantile(null, alpha_sig)
                        rejections[scheme] += t0 > q_hat
                for scheme in schemes:
                    summary = McSummary.rate(rejections[scheme], reps)
                    cells[(label, alpha, n, scheme)] = summary
                    rows.append(
                        (label, alpha, n, scheme, summary.value, summary.mc_se, reps)
                    )
    columns = ("process", "alpha", "n", "scheme", "rejection_rate", "mc_se", "reps")
    return _emit(
        "table6", columns, rows, cells, run,
        {"transforms": list(transforms), "alphas": list(alphas), "n": list(n_list),
         "schemes": list(schemes), "statistic": statistic, "reps": reps,
         "resamples": resamples, "alpha_sig": alpha_sig, "seed": run.seed},
    )
