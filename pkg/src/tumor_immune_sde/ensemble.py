"""Ensemble simulation and Monte-Carlo estimation of long-run statistics.

Paths are independent: sub-seeds are spawned injectively from the master
seed, so every estimate is reproducible bit-for-bit and, with the worker
count overridden (``TUMOR_IMMUNE_WORKERS``), path blocks run in separate
processes without changing any result (the per-path streams and the
reduction order are both fixed).

Asymptotic claims (limsup/liminf as t -> infinity) are probed at finite
horizons: estimates come with a cross-path standard error and the
verification suites allow three standard errors of slack.

Each estimator exists in two layers: a ``*_of`` function that reduces an
already-simulated :class:`EnsembleResult`, and a driver of the same name
without the suffix that runs the ensemble itself.  Verification suites use
the ``*_of`` layer to share one ensemble across several assertions.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

import numpy as np

from .errors import DomainError, NonFiniteEstimateError
from .integrate import AUX_PROCESSES, RawPaths, StepPolicy, _run_paths
from .model import ModelParams, State

__all__ = [
    "EnsembleSpec",
    "EstimateWithCI",
    "EnsembleResult",
    "run_ensemble",
    "estimate_moment",
    "moment_of",
    "time_average",
    "time_average_of",
    "decay_rate",
    "decay_rate_of",
    "permanence_occupation",
    "occupation_of",
    "box_indicator",
    "LOG_FLOOR",
]

WORKERS_ENV = "TUMOR_IMMUNE_WORKERS"

# ln-decay fits ignore values below this floor; genuinely extinct paths fall
# out of double range and the fit uses data up to the crossing time.
LOG_FLOOR = 1e-300

COORDINATES = ("x", "y") + AUX_PROCESSES

_NAMED_FUNCTIONALS: dict[str, Callable] = {
    "x": lambda x, y: x,
    "y": lambda x, y: y,
    "1/x": lambda x, y: 1.0 / x,
    "x^2": lambda x, y: x * x,
    "y^2": lambda x, y: y * y,
}


@dataclass(frozen=True)
class EnsembleSpec:
    """Size, horizon, and discretization of one ensemble run.

    ``burn_in`` (default: 20% of the horizon) is discarded before any time
    averaging.  ``record_stride`` thins the stored grid; the final point is
    always recorded.  Sub-seeds for paths are spawned injectively from
    ``master_seed``.
    """

    n_paths: int
    horizon: float
    policy: StepPolicy
    master_seed: int
    burn_in: Optional[float] = None
    record_stride: int = 100

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError("horizon must be finite and > 0")
        if self.record_stride < 1:
            raise DomainError("record_stride must be >= 1")
        if self.burn_in is not None and not (0.0 <= self.burn_in < self.horizon):
            raise DomainError("burn_in must lie in [0, horizon)")

    @property
    def effective_burn_in(self) -> float:
        return 0.2 * self.horizon if self.burn_in is None else self.burn_in


@dataclass(frozen=True)
class EstimateWithCI:
    """Point estimate with cross-path standard error.

    The 95% interval ``point +/- 1.96*std_error`` is the usual normal
    approximation over ``n`` independent paths.
    """

    point: float
    std_error: float
    n: int

    def __post_init__(self):
        if self.std_error < 0:
            raise DomainError("std_error must be >= 0")

    @property
    def ci95(self) -> tuple[float, float]:
        half = 1.96 * self.std_error
        return (self.point - half, self.point + half)

    def to_json_dict(self, **extra) -> dict:
        out = {"point": self.point, "std_error": self.std_error, "n": self.n}
        out.update(extra)
        return out


@dataclass
class EnsembleResult:
    """Recorded ensemble: coordinate arrays shaped (n_record, n_paths)."""

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    psi: Optional[np.ndarray]
    phi: Optional[np.ndarray]
    z: Optional[np.ndarray]
    halvings: np.ndarray
    spec: EnsembleSpec

    @property
    def n_paths(self) -> int:
        return self.x.shape[1]

    def series(self, which: str) -> np.ndarray:
        if which not in COORDINATES:
            raise DomainError(f"unknown coordinate {which!r}; expected one of {COORDINATES}")
        arr = getattr(self, which)
        if arr is None:
            raise DomainError(f"coordinate {which!r} was not simulated in this ensemble")
        return arr

    def nearest_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def at_time(self, which: str, t: float) -> np.ndarray:
        """Cross-path values of a coordinate at the grid time nearest ``t``."""
        return self.series(which)[self.nearest_index(t)]


def _block_raw(args) -> RawPaths:
    p, x0, y0, policy, horizon, master_seed, n_paths, lo, hi, which, t0, stride = args
    seeds = np.random.SeedSequence(master_seed).spawn(n_paths)[lo:hi]
    return _run_paths(
        p, x0, y0, policy, horizon, seeds,
        which=which, t0_for_z=t0, record_stride=stride,
    )


def _concat(blocks: list) -> RawPaths:
    def cat(name):
        first = getattr(blocks[0], name)
        if first is None:
            return None
        return np.concatenate([getattr(b, name) for b in blocks], axis=1)

    return RawPaths(
        times=blocks[0].times,
        x=cat("x"),
        y=cat("y"),
        psi=cat("psi"),
        phi=cat("phi"),
        z=cat("z"),
        halvings=np.concatenate([b.halvings for b in blocks]),
    )


def _blocks(n: int, workers: int) -> list:
    if workers <= 1 or n <= 1:
        return [(0, n)]
    size = math.ceil(n / workers)
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def run_ensemble(
    p: ModelParams,
    s0: State,
    spec: EnsembleSpec,
    which: Iterable[str] = (),
    t0_for_z: float = 0.0,
) -> EnsembleResult:
    """Simulate ``spec.n_paths`` independent paths (optionally coupled).

    Deterministic given ``spec.master_seed`` regardless of the worker count:
    paths are split into fixed contiguous blocks and concatenated in block
    order, and each path's random stream depends only on its own sub-seed.
    """
    which = tuple(w for w in which if w in AUX_PROCESSES)
    workers = int(os.environ.get(WORKERS_ENV, "1") or "1")
    args = [
        (p, s0.x, s0.y, spec.policy, spec.horizon, spec.master_seed,
         spec.n_paths, lo, hi, which, t0_for_z, spec.record_stride)
        for lo, hi in _blocks(spec.n_paths, workers)
    ]
    if len(args) == 1:
        raw = _block_raw(args[0])
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = _concat(list(pool.map(_block_raw, args)))
    else:
        raw = _concat([_block_raw(a) for a in args])
    return EnsembleResult(
        times=raw.times,
        x=raw.x,
        y=raw.y,
        psi=raw.psi,
        phi=raw.phi,
        z=raw.z,
        halvings=raw.halvings,
        spec=spec,
    )


def _mean_se(values: np.ndarray) -> EstimateWithCI:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFiniteEstimateError("estimate is not finite (overflow or inactive coordinate)")
    n = values.size
    point = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EstimateWithCI(point=point, std_error=se, n=n)


# ---------------------------------------------------------------------------
# reductions over an already-simulated ensemble
# ---------------------------------------------------------------------------


def moment_of(result: EnsembleResult, which: str, power: float, at: float) -> EstimateWithCI:
    """Cross-path mean of ``coordinate**power`` at the grid time nearest ``at``."""
    if power == 0.0:
        return EstimateWithCI(point=1.0, std_error=0.0, n=result.n_paths)
    return _mean_se(result.at_time(which, at) ** power)


def _resolve_functional(functional: Union[str, Callable]) -> Callable:
    if callable(functional):
        return functional
    try:
        return _NAMED_FUNCTIONALS[functional]
    except KeyError:
        raise DomainError(
            f"unknown functional {functional!r}; expected one of "
            f"{sorted(_NAMED_FUNCTIONALS)} or a callable"
        ) from None


def time_average_of(
    result: EnsembleResult,
    functional: Union[str, Callable],
    burn_in: Optional[float] = None,
) -> EstimateWithCI:
    """Per-path time average of f(x, y) over [burn_in, horizon], then across paths."""
    fn = _resolve_functional(functional)
    burn_in = result.spec.effective_burn_in if burn_in is None else burn_in
    mask = result.times >= burn_in
    if not mask.any():
        raise DomainError("burn_in leaves no recorded points to average")
    per_path = fn(result.x[mask], result.y[mask]).mean(axis=0)
    return _mean_se(per_path)


def _log_slope(times: np.ndarray, values: np.ndarray, floor: float = LOG_FLOOR) -> float:
    """Least-squares slope of ln(values) vs times, truncated at the floor.

    Values at or below the floor mark the underflow crossing: the fit uses
    data strictly before the first crossing (the crossing time caps the
    window).  Returns NaN when fewer than two usable points remain.
    """
    below = values <= floor
    cut = int(np.argmax(below)) if below.any() else len(values)
    if cut < 2:
        return math.nan
    return float(np.polyfit(times[:cut], np.log(values[:cut]), 1)[0])


def decay_rate_of(
    result: EnsembleResult,
    which: str = "y",
    burn_in: Optional[float] = None,
) -> EstimateWithCI:
    """Cross-path mean of per-path ln-linear slopes of a coordinate."""
    series = result.series(which)
    burn_in = result.spec.effective_burn_in if burn_in is None else burn_in
    mask = result.times >= burn_in
    if mask.sum() < 2:
        raise DomainError("burn_in leaves fewer than two recorded points")
    t = result.times[mask]
    slopes = np.array([_log_slope(t, series[mask, j]) for j in range(result.n_paths)])
    slopes = slopes[np.isfinite(slopes)]
    if slopes.size == 0:
        raise NonFiniteEstimateError("no path retained two points above the underflow floor")
    return _mean_se(slopes)


def occupation_of(
    result: EnsembleResult,
    zeta_box: float,
    axis: str = "both",
) -> EstimateWithCI:
    """Fraction of paths whose final state lies in [zeta, 1/zeta] (binomial SE)."""
    if not (0.0 < zeta_box < 1.0):
        raise DomainError("zeta_box must lie in (0, 1)")
    if axis not in ("both", "x", "y"):
        raise DomainError("axis must be 'both', 'x', or 'y'")
    lo, hi = zeta_box, 1.0 / zeta_box
    x_in = (result.x[-1] >= lo) & (result.x[-1] <= hi)
    y_in = (result.y[-1] >= lo) & (result.y[-1] <= hi)
    inside = {"both": x_in & y_in, "x": x_in, "y": y_in}[axis]
    n = inside.size
    frac = float(inside.mean())
    se = math.sqrt(frac * (1.0 - frac) / n)
    return EstimateWithCI(point=frac, std_error=se, n=n)


# ---------------------------------------------------------------------------
# one-call drivers
# ---------------------------------------------------------------------------


def _coupling_for(which: str) -> tuple:
    return (which,) if which in AUX_PROCESSES else ()


def estimate_moment(
    p: ModelParams,
    s0: State,
    spec: EnsembleSpec,
    which: str = "y",
    power: float = 1.0,
    at: Optional[float] = None,
) -> EstimateWithCI:
    """Cross-path moment of a coordinate (or comparison process) at time ``at``.

    ``at`` defaults to the horizon and may not exceed it.  ``power = 0``
    returns exactly one with zero standard error.  A non-finite estimate
    (overflow, or a comparison process inactive at ``at``) raises
    :class:`NonFiniteEstimateError`.
    """
    at = spec.horizon if at is None else at
    if at > spec.horizon:
        raise DomainError(f"at={at} exceeds the ensemble horizon {spec.horizon}")
    result = run_ensemble(p, s0, spec, which=_coupling_for(which))
    return moment_of(result, which, power, at)


def time_average(
    p: ModelParams,
    s0: State,
    spec: EnsembleSpec,
    functional: Union[str, Callable],
) -> EstimateWithCI:
    """Ergodic average of a functional of the state.

    ``functional`` is one of "x", "y", "1/x", "x^2", "y^2" or any callable
    f(x, y) acting elementwise (see :func:`box_indicator`).
    """
    result = run_ensemble(p, s0, spec)
    return time_average_of(result, functional)


def decay_rate(
    p: ModelParams,
    s0: State,
    spec: EnsembleSpec,
    which: str = "y",
) -> EstimateWithCI:
    """Per-path exponential rate of a coordinate from ln-linear regression.

    Fits ln(coordinate) against t over [burn_in, horizon] path by path and
    averages the slopes across paths.  Paths that underflow the 1e-300
    floor are fitted up to their crossing time; paths with fewer than two
    usable points are dropped from the cross-path statistics.
    """
    result = run_ensemble(p, s0, spec, which=_coupling_for(which))
    return decay_rate_of(result, which)


def permanence_occupation(
    p: ModelParams,
    s0: State,
    spec: EnsembleSpec,
    zeta_box: float,
    axis: str = "both",
) -> EstimateWithCI:
    """Fraction of paths inside [zeta, 1/zeta] (per axis or jointly) at the end."""
    result = run_ensemble(p, s0, spec)
    return occupation_of(result, zeta_box, axis)


def box_indicator(x_lo: float, x_hi: float, y_lo: float, y_hi: float) -> Callable:
    """Indicator functional of the closed box [x_lo, x_hi] x [y_lo, y_hi]."""

    def indicator(x, y):
        inside = (x >= x_lo) & (x <= x_hi) & (y >= y_lo) & (y <= y_hi)
        return inside.astype(float) if isinstance(inside, np.ndarray) else float(inside)

    return indicator
