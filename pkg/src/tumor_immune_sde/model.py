"""Core tumor-immune model: parameters, vector fields, generator, test functions.

The state is a pair of nondimensional cell densities: ``x`` for effector
(immune) cells, ``y`` for tumor cells.  The dynamics pair a saturating
immune-stimulation term with mass-action inactivation on the ``x`` equation
and a logistic growth law with predation on the ``y`` equation, each
coordinate carrying multiplicative white noise:

    dx = (sigma + rho*x*y/(eta + y) - mu*x*y - delta*x) dt + sigma1 * x dB1
    dy = (alpha*y - beta*y**2 - x*y) dt                 + sigma2 * y dB2

with B1, B2 independent Brownian motions.  With both noise intensities zero
the system reduces to the deterministic ODE model.

Everything downstream (integration, analytic bounds, regime classification)
is phrased in these nondimensional rates.  Dimensional (laboratory-table)
parameters enter only through :func:`nondimensionalize`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

__all__ = [
    "DimensionalParams",
    "ModelParams",
    "State",
    "TestFunction",
    "nondimensionalize",
    "drift",
    "diffusion",
    "net_response",
    "response_peak",
    "generator_apply",
    "check_derivatives",
    "positivity_test_function",
    "moment_test_function",
    "inverse_moment_test_function",
    "recurrence_test_function",
]


@dataclass(frozen=True)
class DimensionalParams:
    """Laboratory-scale model parameters, as they appear in data tables.

    Fields
    ------
    a   : tumor-cell intrinsic growth rate (1/day)
    b   : reciprocal tumor carrying capacity (1/cell)
    s   : effector-cell inflow rate (cells/day)
    d   : effector destruction/migration coefficient (1/day)
    g   : response-functional half-saturation constant (cells)
    q   : response rate q = f*K (1/day)
    r1  : effector inactivation rate (1/(day*cell))
    r2  : tumor lysis-programming rate (1/(day*cell))
    E0, T0 : effector / tumor population scales (cells)

    This type exists for ingestion and provenance only; all computation is
    done on :class:`ModelParams`.
    """

    a: float
    b: float
    s: float
    d: float
    g: float
    q: float
    r1: float
    r2: float
    E0: float
    T0: float

    def __post_init__(self):
        for name in ("a", "b", "s", "d", "g", "q", "r1", "r2", "E0", "T0"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0.0:
                raise DomainError(f"DimensionalParams.{name} must be finite and > 0, got {v!r}")


@dataclass(frozen=True)
class ModelParams:
    """Nondimensional rates of the stochastic system.

    sigma  : baseline effector inflow
    rho    : immune-response strength
    eta    : response half-saturation
    mu     : effector inactivation rate
    delta  : effector death rate
    alpha  : tumor growth rate
    beta   : tumor self-limitation
    sigma1 : effector noise intensity
    sigma2 : tumor noise intensity

    eta, delta, alpha, beta must be strictly positive; sigma, rho, mu and the
    noise intensities may be zero (sigma = 0 admits the exactly solvable
    geometric-Brownian reduction used by the scheme-order checks; operations
    whose formulas divide by sigma enforce sigma > 0 themselves).
    """

    sigma: float
    rho: float
    eta: float
    mu: float
    delta: float
    alpha: float
    beta: float
    sigma1: float = 0.0
    sigma2: float = 0.0

    def __post_init__(self):
        for name in ("sigma", "rho", "eta", "mu", "delta", "alpha", "beta", "sigma1", "sigma2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0.0:
                raise DomainError(f"ModelParams.{name} must be finite and >= 0, got {v!r}")
        for name in ("eta", "delta", "alpha", "beta"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"ModelParams.{name} must be strictly positive")

    def replace(self, **changes) -> "ModelParams":
        from dataclasses import replace as _replace

        return _replace(self, **changes)


@dataclass(frozen=True)
class State:
    """A point in the open positive quadrant: (effector density, tumor density)."""

    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and self.x > 0.0):
            raise DomainError(f"State.x must be finite and > 0, got {self.x!r}")
        if not (np.isfinite(self.y) and self.y > 0.0):
            raise DomainError(f"State.y must be finite and > 0, got {self.y!r}")


def nondimensionalize(p: DimensionalParams) -> ModelParams:
    """Map laboratory-scale parameters to the nondimensional rates.

    sigma = s/(r2*E0*T0), rho = q/(r2*T0), mu = r1/r2, delta = d/(r2*T0),
    alpha = a/(r2*T0), eta = g/T0, beta = a*b/r2.  Noise intensities are
    returned as zero; they are chosen on the nondimensional scale.
    """
    return ModelParams(
        sigma=p.s / (p.r2 * p.E0 * p.T0),
        rho=p.q / (p.r2 * p.T0),
        eta=p.g / p.T0,
        mu=p.r1 / p.r2,
        delta=p.d / (p.r2 * p.T0),
        alpha=p.a / (p.r2 * p.T0),
        beta=p.a * p.b / p.r2,
        sigma1=0.0,
        sigma2=0.0,
    )


def _drift_xy(p: ModelParams, x, y):
    """Drift field at (x, y); accepts scalars or ndarrays."""
    dx = p.sigma + p.rho * x * y / (p.eta + y) - p.mu * x * y - p.delta * x
    dy = p.alpha * y - p.beta * y * y - x * y
    return dx, dy


def drift(p: ModelParams, s: State) -> tuple[float, float]:
    """Deterministic rate of change (dx/dt, dy/dt) at a state."""
    dx, dy = _drift_xy(p, s.x, s.y)
    return float(dx), float(dy)


def diffusion(p: ModelParams, s: State) -> tuple[float, float]:
    """Noise coefficients (sigma1*x, sigma2*y) at a state."""
    return p.sigma1 * s.x, p.sigma2 * s.y


def net_response(p: ModelParams, y):
    """Net per-effector immune response rho*y/(eta+y) - mu*y, for y >= 0.

    Stimulation saturates while inactivation grows linearly, so the response
    is bounded above by ``response_peak(p)**2`` and is negative for all y > 0
    whenever rho <= mu*eta.  Accepts scalars or ndarrays.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0.0):
        raise DomainError("net_response requires y >= 0")
    out = p.rho * y_arr / (p.eta + y_arr) - p.mu * y_arr
    return float(out) if np.isscalar(y) or y_arr.ndim == 0 else out


def response_peak(p: ModelParams) -> float:
    """Clipped response amplitude max(sqrt(rho) - sqrt(mu*eta), 0).

    Its square is a tight upper bound for :func:`net_response` over y >= 0:
    the supremum is attained at y = sqrt(rho*eta/mu) - eta when rho > mu*eta
    and the clipped branch covers the everywhere-negative case.
    """
    return max(math.sqrt(p.rho) - math.sqrt(p.mu * p.eta), 0.0)


@dataclass(frozen=True)
class TestFunction:
    """Scalar function of the state with caller-supplied derivatives.

    The diffusion matrix is diagonal, so the generator only ever needs the
    gradient and the two pure second derivatives; mixed partials are not
    carried.  ``gradient`` and ``hessian_diagonal`` must agree with centered
    finite differences of ``value`` (see :func:`check_derivatives`).
    """

    # pytest must not collect this (mathematical) test-function type
    __test__ = False

    value: Callable[[float, float], float]
    gradient: Callable[[float, float], tuple[float, float]]
    hessian_diagonal: Callable[[float, float], tuple[float, float]]


def generator_apply(p: ModelParams, f: TestFunction, s: State) -> float:
    """Infinitesimal generator of the diffusion applied to ``f`` at ``s``.

    L f = f_x * drift_x + f_y * drift_y
          + (f_xx * sigma1^2 x^2 + f_yy * sigma2^2 y^2) / 2
    """
    dx, dy = _drift_xy(p, s.x, s.y)
    fx, fy = f.gradient(s.x, s.y)
    fxx, fyy = f.hessian_diagonal(s.x, s.y)
    return (
        fx * dx
        + fy * dy
        + 0.5 * (fxx * p.sigma1**2 * s.x**2 + fyy * p.sigma2**2 * s.y**2)
    )


def check_derivatives(f: TestFunction, points, rtol: float = 1e-5) -> None:
    """Verify supplied derivatives against centered finite differences.

    Raises :class:`DomainError` on the first probe point where either the
    gradient or the diagonal Hessian disagrees beyond ``rtol`` (relative,
    with a matching absolute floor for near-zero entries).
    """
    for (x, y) in points:
        # first differences tolerate a small step; second differences balance
        # truncation against cancellation, which grows with the magnitude of
        # the function value itself
        gx_step = max(abs(x), 1.0) * 1e-6
        gy_step = max(abs(y), 1.0) * 1e-6
        mag = (1.0 + abs(f.value(x, y))) ** 0.25
        hx = max(abs(x), 1.0) * 3e-4 * mag
        hy = max(abs(y), 1.0) * 3e-4 * mag
        gx = (f.value(x + gx_step, y) - f.value(x - gx_step, y)) / (2 * gx_step)
        gy = (f.value(x, y + gy_step) - f.value(x, y - gy_step)) / (2 * gy_step)
        hxx = (f.value(x + hx, y) - 2 * f.value(x, y) + f.value(x - hx, y)) / hx**2
        hyy = (f.value(x, y + hy) - 2 * f.value(x, y) + f.value(x, y - hy)) / hy**2
        sup_gx, sup_gy = f.gradient(x, y)
        sup_hxx, sup_hyy = f.hessian_diagonal(x, y)
        for name, got, want in (
            ("gradient_x", sup_gx, gx),
            ("gradient_y", sup_gy, gy),
            ("hessian_xx", sup_hxx, hxx),
            ("hessian_yy", sup_hyy, hyy),
        ):
            # absolute floor keeps near-zero derivatives from demanding more
            # precision than centered differences can deliver
            scale = max(abs(want), abs(got), 1e-2)
            if abs(got - want) > rtol * scale:
                raise DomainError(
                    f"{name} mismatch at ({x}, {y}): supplied {got}, finite difference {want}"
                )


def positivity_test_function() -> TestFunction:
    """V(x, y) = (x + 1 - log x) + (y + 1 - log y).

    Radially unbounded on the open quadrant and blowing up at its boundary;
    the workhorse for checking that paths cannot explode or touch the axes.
    """
    return TestFunction(
        value=lambda x, y: (x + 1 - np.log(x)) + (y + 1 - np.log(y)),
        gradient=lambda x, y: (1 - 1 / x, 1 - 1 / y),
        hessian_diagonal=lambda x, y: (1 / x**2, 1 / y**2),
    )


def moment_test_function(c: float, theta: float) -> TestFunction:
    """V1(x, y) = (1 + x + c*y)**theta, used for direct moment bounds."""
    if c <= 0 or theta <= 0:
        raise DomainError("moment_test_function requires c > 0 and theta > 0")

    def base(x, y):
        return 1.0 + x + c * y

    return TestFunction(
        value=lambda x, y: base(x, y) ** theta,
        gradient=lambda x, y: (
            theta * base(x, y) ** (theta - 1),
            c * theta * base(x, y) ** (theta - 1),
        ),
        hessian_diagonal=lambda x, y: (
            theta * (theta - 1) * base(x, y) ** (theta - 2),
            c * c * theta * (theta - 1) * base(x, y) ** (theta - 2),
        ),
    )


def inverse_moment_test_function(theta: float) -> TestFunction:
    """V2(x) = (1 + 1/x)**theta, used for inverse-moment bounds on x."""
    if theta <= 0:
        raise DomainError("inverse_moment_test_function requires theta > 0")

    def value(x, y):
        return (1.0 + 1.0 / x) ** theta

    def gradient(x, y):
        return (-theta * (1.0 + 1.0 / x) ** (theta - 1) / x**2, 0.0)

    def hessian_diagonal(x, y):
        u = 1.0 + 1.0 / x
        fxx = theta * (theta - 1) * u ** (theta - 2) / x**4 + 2 * theta * u ** (theta - 1) / x**3
        return (fxx, 0.0)

    return TestFunction(value=value, gradient=gradient, hessian_diagonal=hessian_diagonal)


def recurrence_test_function(p: ModelParams, c: float) -> TestFunction:
    """U(x, y) = x + c/x + y^2 + (delta - h^2) * log(1 + 1/y).

    The potential whose super-level sets certify positive recurrence in the
    permanence regime: outside a compact box its generator value drops below
    a strictly negative margin.  Requires delta > h^2 so the log coefficient
    is positive; c > 0.
    """
    if c <= 0:
        raise DomainError("recurrence_test_function requires c > 0")
    h = response_peak(p)
    coef = p.delta - h * h
    if coef <= 0:
        raise DomainError(
            f"recurrence_test_function requires delta > h^2 (delta - h^2 = {coef:.6g})"
        )

    def value(x, y):
        return x + c / x + y * y + coef * np.log1p(1.0 / y)

    def gradient(x, y):
        return (1.0 - c / x**2, 2.0 * y - coef / (y * (y + 1.0)))

    def hessian_diagonal(x, y):
        return (2.0 * c / x**3, 2.0 + coef * (2.0 * y + 1.0) / (y * y * (y + 1.0) ** 2))

    return TestFunction(value=value, gradient=gradient, hessian_diagonal=hessian_diagonal)
