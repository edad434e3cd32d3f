"""Empirical-distribution tooling: ECDF, one-sample K-S test, kernel density.

Samples fed to the goodness-of-fit machinery are meant to be independent
across paths (one observation per seed at a fixed time); within-path time
samples are serially correlated and would invalidate the K-S null.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analytic import StationaryLaw
from .errors import DegenerateSampleError, DomainError, InsufficientSampleError

__all__ = [
    "Sample",
    "Ecdf",
    "ecdf",
    "KSResult",
    "ks_test",
    "ks_critical_constant",
    "DensityCurve",
    "empirical_density",
    "silverman_bandwidth",
    "JointHistogram",
    "joint_histogram",
]


@dataclass(frozen=True)
class Sample:
    """A finite sample of positive reals plus a provenance note."""

    values: np.ndarray
    origin: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DomainError("Sample requires a nonempty 1-d array")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise DomainError("Sample values must be finite and strictly positive")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class Ecdf:
    """Right-continuous empirical CDF: F(t) = #{v_i <= t}/n."""

    sorted_values: np.ndarray

    @property
    def n(self) -> int:
        return self.sorted_values.size

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.searchsorted(self.sorted_values, t_arr, side="right") / self.n
        return float(out) if out.ndim == 0 else out


def ecdf(sample: Sample) -> Ecdf:
    """Empirical CDF of the sample (steps of 1/n at each observation)."""
    return Ecdf(sorted_values=np.sort(sample.values))


def ks_critical_constant(level: float) -> float:
    """Asymptotic Kolmogorov constant c with P(sup|F_n - F| > c/sqrt(n)) = level.

    c = sqrt(-ln(level/2)/2); c(0.05) = 1.358.
    """
    if not (0.0 < level < 1.0):
        raise DomainError("level must lie in (0, 1)")
    return math.sqrt(-math.log(level / 2.0) / 2.0)


@dataclass(frozen=True)
class KSResult:
    """One-sample Kolmogorov-Smirnov outcome; reject iff D_n > critical_value."""

    statistic: float
    n: int
    critical_value: float
    reject: bool
    level: float

    def to_json_dict(self, **extra) -> dict:
        out = {
            "statistic": self.statistic,
            "n": self.n,
            "critical_value": self.critical_value,
            "reject": self.reject,
            "level": self.level,
        }
        out.update(extra)
        return out


def ks_test(sample: Sample, law: StationaryLaw, level: float = 0.05) -> KSResult:
    """Two-sided one-sample K-S test of the sample against an analytic law.

    D_n = sup_t |F_n(t) - F(t)| evaluated exactly on the order statistics:
    max over i of max(i/n - F(v_(i)), F(v_(i)) - (i-1)/n).  The critical
    value is the asymptotic c(level)/sqrt(n).
    """
    if sample.n < 20:
        raise InsufficientSampleError(f"ks_test requires n >= 20, got {sample.n}")
    v = np.sort(sample.values)
    cdf = law.cdf(v)
    i = np.arange(1, sample.n + 1, dtype=float)
    d_plus = np.max(i / sample.n - cdf)
    d_minus = np.max(cdf - (i - 1.0) / sample.n)
    statistic = float(max(d_plus, d_minus, 0.0))
    critical = ks_critical_constant(level) / math.sqrt(sample.n)
    return KSResult(
        statistic=statistic,
        n=sample.n,
        critical_value=critical,
        reject=statistic > critical,
        level=level,
    )


def silverman_bandwidth(values: np.ndarray) -> float:
    """Rule-of-thumb bandwidth 0.9 * min(sd, IQR/1.34) * n^(-1/5)."""
    sd = float(np.std(values, ddof=1))
    q75, q25 = np.percentile(values, [75.0, 25.0])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * values.size ** (-0.2)


@dataclass(frozen=True)
class DensityCurve:
    """Gaussian-kernel density estimate evaluated on a regular grid."""

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.grid))

    @property
    def mode(self) -> float:
        return float(self.grid[int(np.argmax(self.density))])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("grid,density\n")
            np.savetxt(fh, np.column_stack([self.grid, self.density]), delimiter=",", fmt="%.17g")


def empirical_density(
    sample: Sample,
    bandwidth: Optional[float] = None,
    grid_size: int = 512,
    span: float = 4.0,
) -> DensityCurve:
    """Gaussian-kernel KDE of the sample on a grid covering +/- span bandwidths.

    The default bandwidth follows Silverman's rule.  The returned curve is
    nonnegative and integrates to one over its grid to within the grid
    resolution (the grid extends ``span`` bandwidths past the extremes).
    """
    if sample.n < 50:
        raise InsufficientSampleError(f"empirical_density requires n >= 50, got {sample.n}")
    values = sample.values
    if np.std(values) == 0.0:
        raise DegenerateSampleError("sample has zero variance; KDE bandwidth is undefined")
    h = silverman_bandwidth(values) if bandwidth is None else float(bandwidth)
    if h <= 0:
        raise DomainError("bandwidth must be > 0")
    grid = np.linspace(values.min() - span * h, values.max() + span * h, grid_size)
    u = (grid[:, None] - values[None, :]) / h
    density = np.exp(-0.5 * u * u).mean(axis=1) / (h * math.sqrt(2.0 * math.pi))
    return DensityCurve(grid=grid, density=density, bandwidth=h)


@dataclass(frozen=True)
class JointHistogram:
    """Normalized 2-d histogram on cell centers (figure-reproduction helper)."""

    x_centers: np.ndarray
    y_centers: np.ndarray
    density: np.ndarray  # shape (len(x_centers), len(y_centers))

    def to_csv(self, path) -> None:
        X, Y = np.meshgrid(self.x_centers, self.y_centers, indexing="ij")
        data = np.column_stack([X.ravel(), Y.ravel(), self.density.ravel()])
        with open(path, "w", newline="") as fh:
            fh.write("x,y,density\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")


def joint_histogram(xs: np.ndarray, ys: np.ndarray, bins: int = 60) -> JointHistogram:
    """Density-normalized 2-d histogram of paired observations."""
    if len(xs) != len(ys) or len(xs) == 0:
        raise DomainError("joint_histogram requires nonempty paired samples")
    H, x_edges, y_edges = np.histogram2d(xs, ys, bins=bins, density=True)
    return JointHistogram(
        x_centers=0.5 * (x_edges[:-1] + x_edges[1:]),
        y_centers=0.5 * (y_edges[:-1] + y_edges[1:]),
        density=H,
    )
