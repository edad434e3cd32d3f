"""Closed-form stationary laws, regime thresholds, and Lyapunov constants.

Three scalar comparison processes admit explicit stationary distributions
(obtained by solving the corresponding stationary Fokker-Planck equations):

    phi (dominates x, needs delta > h^2) : inverse-Gamma(a1, b1),
        a1 = 2*(delta - h^2)/sigma1^2 + 1,  b1 = 2*sigma/sigma1^2
    psi (dominates y, needs 2*alpha > sigma2^2) : Gamma(a2, b2),
        a2 = 2*alpha/sigma2^2 - 1,          b2 = 2*beta/sigma2^2
    z (effector boundary process, needs sigma1 > 0) : inverse-Gamma(a3, b3),
        a3 = 2*delta/sigma1^2 + 1,          b3 = 2*sigma/sigma1^2

where h = max(sqrt(rho) - sqrt(mu*eta), 0) caps the net immune response.
The long-run behaviour of the full system is classified by three
thresholds:

    lambda1 = sigma2^2/2 - alpha                   > 0  => tumor extinction
    lambda2 = (mu*(alpha - sigma2^2/2)/beta + delta + sigma1^2/2)/sigma
                                   (bounds the time average of 1/x)
    lambda3 = (alpha - sigma2^2/2 - sigma/(delta - h^2))/beta
                                   (lower-bounds the time average of y)

Extinction holds iff lambda1 > 0; permanence (unique ergodic invariant
measure on the open quadrant) iff delta > h^2 and
alpha - sigma2^2/2 - sigma/(delta - h^2) > 0.  In the extinction regime the
effector marginal converges to the boundary law IG(a3, b3).

The module also evaluates every supremum constant appearing in the moment
and inverse-moment bounds (L1..L4, L6, L7), the logistic moment envelope,
and the recurrence potential U together with the compact domain outside
which its generator value is below a strictly negative margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import gammainccinv, gammaincinv, gammainc, gammaincc, gammaln

from .errors import DomainError
from .model import (
    ModelParams,
    State,
    TestFunction,
    _drift_xy,
    generator_apply,
    recurrence_test_function,
    response_peak,
)

__all__ = [
    "LawKind",
    "StationaryLaw",
    "StationaryLaws",
    "stationary_laws",
    "ergodic_moment",
    "rho_k",
    "logistic_moment_bound",
    "Regime",
    "PsiFate",
    "Certificate",
    "RegimeReport",
    "classify_regime",
    "BoundConstants",
    "lyapunov_constants",
    "RecurrenceEval",
    "lyapunov_recurrence",
    "recurrence_bound",
    "uniqueness_margin",
    "admissible_c",
    "RecurrenceDomain",
    "recurrence_domain",
]


class LawKind(Enum):
    GAMMA = "gamma"
    INVERSE_GAMMA = "inverse-gamma"


def _as_float_or_array(x_in, out):
    if np.isscalar(x_in) or np.asarray(x_in).ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class StationaryLaw:
    """Gamma or inverse-Gamma law with shape/rate parameters.

    Gamma(a, b):          pdf = b^a / Gamma(a) * x^(a-1) * exp(-b*x)
    inverse-Gamma(a, b):  pdf = b^a / Gamma(a) * x^(-a-1) * exp(-b/x)

    The two kinds are dual: X ~ Gamma(a, b) iff 1/X ~ inverse-Gamma(a, b).
    Moments are evaluated through log-Gamma so large shapes do not overflow.
    """

    kind: LawKind
    shape: float
    rate: float

    def __post_init__(self):
        if not (np.isfinite(self.shape) and self.shape > 0):
            raise DomainError(f"shape must be finite and > 0, got {self.shape!r}")
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise DomainError(f"rate must be finite and > 0, got {self.rate!r}")

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = np.zeros_like(x_arr)
        m = x_arr > 0
        xm = x_arr[m]
        if self.kind is LawKind.GAMMA:
            logp = (
                self.shape * math.log(self.rate)
                + (self.shape - 1) * np.log(xm)
                - self.rate * xm
                - gammaln(self.shape)
            )
        else:
            logp = (
                self.shape * math.log(self.rate)
                - (self.shape + 1) * np.log(xm)
                - self.rate / xm
                - gammaln(self.shape)
            )
        out[m] = np.exp(logp)
        return _as_float_or_array(x, out)

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = np.zeros_like(x_arr)
        m = x_arr > 0
        if self.kind is LawKind.GAMMA:
            out[m] = gammainc(self.shape, self.rate * x_arr[m])
        else:
            out[m] = gammaincc(self.shape, self.rate / x_arr[m])
        return _as_float_or_array(x, out)

    def ppf(self, q):
        q_arr = np.asarray(q, dtype=float)
        if np.any((q_arr <= 0) | (q_arr >= 1)):
            raise DomainError("ppf requires quantiles strictly inside (0, 1)")
        if self.kind is LawKind.GAMMA:
            out = gammaincinv(self.shape, q_arr) / self.rate
        else:
            out = self.rate / gammainccinv(self.shape, q_arr)
        return _as_float_or_array(q, out)

    def moment(self, power: float) -> float:
        """E[X^power], in closed form.

        Gamma: Gamma(a+p)/(Gamma(a) b^p) for p > -a; inverse-Gamma:
        b^p Gamma(a-p)/Gamma(a) for p < a.  Raises DomainError (naming the
        constraint) when the moment does not exist.
        """
        a, b = self.shape, self.rate
        if self.kind is LawKind.GAMMA:
            if power <= -a:
                raise DomainError(
                    f"Gamma moment requires power > -shape (power={power}, shape={a})"
                )
            return math.exp(gammaln(a + power) - gammaln(a) - power * math.log(b))
        if power >= a:
            raise DomainError(
                f"inverse-Gamma moment requires power < shape (power={power}, shape={a})"
            )
        return math.exp(power * math.log(b) + gammaln(a - power) - gammaln(a))

    @property
    def mean(self) -> float:
        return self.moment(1.0)

    @property
    def mode(self) -> float:
        if self.kind is LawKind.GAMMA:
            return (self.shape - 1.0) / self.rate if self.shape >= 1.0 else 0.0
        return self.rate / (self.shape + 1.0)

    def dual(self) -> "StationaryLaw":
        """Law of 1/X: swaps Gamma and inverse-Gamma at the same (a, b)."""
        other = LawKind.INVERSE_GAMMA if self.kind is LawKind.GAMMA else LawKind.GAMMA
        return StationaryLaw(kind=other, shape=self.shape, rate=self.rate)

    def to_json_dict(self) -> dict:
        return {"kind": self.kind.value, "shape": self.shape, "rate": self.rate}


def ergodic_moment(law: StationaryLaw, power: float) -> float:
    """Long-run time average of X^power under the law (= its power-moment)."""
    return law.moment(power)


@dataclass(frozen=True)
class StationaryLaws:
    """The three auxiliary stationary laws; absent laws carry a reason."""

    phi: Optional[StationaryLaw]
    psi: Optional[StationaryLaw]
    z: Optional[StationaryLaw]
    reasons: dict


def stationary_laws(p: ModelParams) -> StationaryLaws:
    """Stationary distributions of the phi, psi, and z comparison processes.

    Each law is present only when its premise holds; otherwise the entry is
    None and ``reasons`` records the violated premise.
    """
    reasons: dict[str, str] = {}
    h = response_peak(p)
    gap = p.delta - h * h

    phi = None
    if p.sigma1 <= 0:
        reasons["phi"] = "sigma1 = 0: phi has no diffusion, no stationary density"
    elif p.sigma <= 0:
        reasons["phi"] = "sigma = 0: rate parameter b1 = 2*sigma/sigma1^2 degenerates"
    elif gap <= 0:
        reasons["phi"] = f"delta - h^2 = {gap:.6g} <= 0: phi is not mean-reverting"
    else:
        phi = StationaryLaw(
            LawKind.INVERSE_GAMMA,
            shape=2.0 * gap / p.sigma1**2 + 1.0,
            rate=2.0 * p.sigma / p.sigma1**2,
        )

    psi = None
    if p.sigma2 <= 0:
        reasons["psi"] = "sigma2 = 0: psi has no diffusion, no stationary density"
    elif 2.0 * p.alpha <= p.sigma2**2:
        reasons["psi"] = (
            f"2*alpha - sigma2^2 = {2.0 * p.alpha - p.sigma2**2:.6g} <= 0: psi goes extinct"
        )
    else:
        psi = StationaryLaw(
            LawKind.GAMMA,
            shape=2.0 * p.alpha / p.sigma2**2 - 1.0,
            rate=2.0 * p.beta / p.sigma2**2,
        )

    z = None
    if p.sigma1 <= 0:
        reasons["z"] = "sigma1 = 0: z has no diffusion, no stationary density"
    elif p.sigma <= 0:
        reasons["z"] = "sigma = 0: rate parameter b3 = 2*sigma/sigma1^2 degenerates"
    else:
        z = StationaryLaw(
            LawKind.INVERSE_GAMMA,
            shape=2.0 * p.delta / p.sigma1**2 + 1.0,
            rate=2.0 * p.sigma / p.sigma1**2,
        )

    return StationaryLaws(phi=phi, psi=psi, z=z, reasons=reasons)


def rho_k(p: ModelParams, k: float) -> float:
    """Asymptotic k-th moment cap of the logistic envelope, k > 1.

    rho_k = ((2*alpha + (k-1)*sigma2^2) / (2*beta))^k; it upper-bounds
    limsup E[psi^k] and hence limsup E[y^k].
    """
    if k <= 1:
        raise DomainError(f"rho_k requires k > 1, got {k}")
    return ((2.0 * p.alpha + (k - 1.0) * p.sigma2**2) / (2.0 * p.beta)) ** k


def logistic_moment_bound(p: ModelParams, k: float, t, y0: float):
    """Finite-time envelope for E[psi(t)^k] of the logistic process, k > 1.

    The moment ODE m' = k*a*m - k*beta*E[psi^(k+1)] with
    a = alpha + (k-1)*sigma2^2/2 is dominated (via Jensen) by a Bernoulli
    equation whose solution gives

        E[psi(t)^k] <= [ exp(-a t)/y0
                         + (2 beta/(2 alpha + (k-1) sigma2^2)) (1 - exp(-a t)) ]^(-k)

    The bound starts at y0^k at t = 0 and moves monotonically toward
    rho_k(p, k) as t grows.  ``t`` may be a scalar or an array.
    """
    if k <= 1:
        raise DomainError(f"logistic_moment_bound requires k > 1, got {k}")
    if y0 <= 0:
        raise DomainError("y0 must be > 0")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("t must be >= 0")
    a = p.alpha + 0.5 * (k - 1.0) * p.sigma2**2
    if a == 0.0:
        raise DomainError("alpha + (k-1)*sigma2^2/2 must be nonzero")
    decay = np.exp(-a * t_arr)
    bracket = decay / y0 + (2.0 * p.beta / (2.0 * p.alpha + (k - 1.0) * p.sigma2**2)) * (1.0 - decay)
    out = bracket ** (-k)
    return _as_float_or_array(t, out)


class Regime(Enum):
    EXTINCTION = "extinction"
    PERMANENCE = "permanence"
    INDETERMINATE = "indeterminate"


class PsiFate(Enum):
    EXTINCT = "extinct"
    STATIONARY_GAMMA = "stationary-gamma"


@dataclass(frozen=True)
class Certificate:
    condition: str
    value: Optional[float]
    satisfied: bool

    def to_json_dict(self) -> dict:
        return {
            "condition": self.condition,
            "value": None if self.value is None else float(self.value),
            "satisfied": bool(self.satisfied),
        }


@dataclass(frozen=True)
class RegimeReport:
    """Evaluated thresholds and the classified long-run regime.

    regime is EXTINCTION iff lambda1 > 0; PERMANENCE iff delta > h^2 and
    alpha - sigma2^2/2 - sigma/(delta - h^2) > 0; otherwise INDETERMINATE.
    ``certificates`` lists each inequality with its numeric slack.
    """

    regime: Regime
    lambda1: float
    lambda2: Optional[float]
    lambda3: Optional[float]
    h: float
    delta_minus_h2: float
    aux_psi_fate: PsiFate
    aux_phi_law: Optional[StationaryLaw]
    boundary_z_law: Optional[StationaryLaw]
    certificates: tuple

    def to_json_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "thresholds": {
                "lambda1": self.lambda1,
                "lambda2": self.lambda2,
                "lambda3": self.lambda3,
                "h": self.h,
                "delta_minus_h2": self.delta_minus_h2,
            },
            "aux_psi_fate": self.aux_psi_fate.value,
            "laws": {
                "phi": self.aux_phi_law.to_json_dict() if self.aux_phi_law else None,
                "z": self.boundary_z_law.to_json_dict() if self.boundary_z_law else None,
            },
            "certificates": [c.to_json_dict() for c in self.certificates],
        }


def classify_regime(p: ModelParams) -> RegimeReport:
    """Evaluate all thresholds and classify the long-run regime."""
    h = response_peak(p)
    gap = p.delta - h * h
    lambda1 = 0.5 * p.sigma2**2 - p.alpha
    lambda2 = (
        ((p.mu / p.beta) * (p.alpha - 0.5 * p.sigma2**2) + p.delta + 0.5 * p.sigma1**2) / p.sigma
        if p.sigma > 0
        else None
    )
    margin = p.alpha - 0.5 * p.sigma2**2 - p.sigma / gap if gap > 0 else None
    lambda3 = margin / p.beta if margin is not None else None

    if lambda1 > 0:
        regime = Regime.EXTINCTION
    elif gap > 0 and margin is not None and margin > 0:
        regime = Regime.PERMANENCE
    else:
        regime = Regime.INDETERMINATE

    laws = stationary_laws(p)
    certificates = (
        Certificate(
            "2*alpha - sigma2^2 < 0 (extinction premise)",
            2.0 * p.alpha - p.sigma2**2,
            2.0 * p.alpha - p.sigma2**2 < 0,
        ),
        Certificate("delta - h^2 > 0 (permanence premise)", gap, gap > 0),
        Certificate(
            "alpha - sigma2^2/2 - sigma/(delta - h^2) > 0 (permanence margin)",
            margin,
            margin is not None and margin > 0,
        ),
    )
    return RegimeReport(
        regime=regime,
        lambda1=lambda1,
        lambda2=lambda2,
        lambda3=lambda3,
        h=h,
        delta_minus_h2=gap,
        aux_psi_fate=PsiFate.STATIONARY_GAMMA if 2.0 * p.alpha > p.sigma2**2 else PsiFate.EXTINCT,
        aux_phi_law=laws.phi,
        boundary_z_law=laws.z,
        certificates=certificates,
    )


# ---------------------------------------------------------------------------
# supremum constants for the moment / inverse-moment bounds
# ---------------------------------------------------------------------------


def _sup_downward_quadratic(a: float, b: float, c: float) -> float:
    """sup over v > 0 of -a*v^2 + b*v + c, a > 0 (boundary value c if b <= 0)."""
    return c + max(b, 0.0) ** 2 / (4.0 * a)


def _sup_downward_cubic(a: float, b: float, c: float, d: float) -> float:
    """sup over v > 0 of -a*v^3 + b*v^2 + c*v + d with a > 0, c >= 0.

    The derivative -3a v^2 + 2b v + c has a single positive root when c > 0;
    the supremum is the larger of that stationary value and the v -> 0 limit.
    """
    if a <= 0:
        raise DomainError("cubic supremum requires a positive leading coefficient")
    disc = b * b + 3.0 * a * c
    if disc < 0:
        return d
    v = (b + math.sqrt(disc)) / (3.0 * a)
    if v <= 0:
        return d
    return max(d, -a * v**3 + b * v**2 + c * v + d)


def _sup_inverse_expression(p: ModelParams, theta: float, kappa: float) -> float:
    """sup over x > 0 of the inverse-moment drift envelope

        -sigma/x^3 + (4 mu/5)/x^(5/2) - C2/x^2 + C1/x + kappa/theta

    with C2 = sigma - delta - (theta+1) sigma1^2/2 - kappa/theta - mu/2 and
    C1 = delta + sigma1^2 + 2 kappa/theta.  Substituting u = 1/x = w^2 turns
    it into a polynomial in w whose stationary points are roots of a quartic.
    Returns +inf when sigma = 0 (the envelope is then unbounded above).
    """
    if p.sigma == 0.0:
        return math.inf
    c2 = p.sigma - p.delta - 0.5 * (theta + 1.0) * p.sigma1**2 - kappa / theta - 0.5 * p.mu
    c1 = p.delta + p.sigma1**2 + 2.0 * kappa / theta
    tail = kappa / theta  # u -> 0 boundary value

    def value(w):
        return (
            -p.sigma * w**6
            + 0.8 * p.mu * w**5
            - c2 * w**4
            + c1 * w**2
            + kappa / theta
        )

    roots = np.roots([-6.0 * p.sigma, 4.0 * p.mu, -4.0 * c2, 0.0, 2.0 * c1])
    best = tail
    for r in roots:
        if abs(r.imag) < 1e-9 and r.real > 0:
            best = max(best, float(value(r.real)))
    return best


@dataclass(frozen=True)
class BoundConstants:
    """Every constant entering the moment and inverse-moment bounds.

    L1..L4 drive limsup E[(1 + x + c*y)^theta] <= moment_bound = L4/kappa;
    L6, L7 drive limsup E[x^-theta] <= inverse_moment_bound = L7/kappa.
    rho_k maps k to the asymptotic k-th moment cap of y; M_p / Mbar_p hold
    the ergodic power averages of phi / psi when their laws exist.
    """

    theta: float
    c: float
    kappa: float
    L1: float
    L2: float
    L3: float
    L4: float
    L6: float
    L7: float
    moment_bound: float
    inverse_moment_bound: float
    rho_k: dict
    M_p: Optional[dict]
    Mbar_p: Optional[dict]
    lambda1: float
    lambda2: Optional[float]
    lambda3: Optional[float]
    h: float
    zeta: Optional[float]


def lyapunov_constants(
    p: ModelParams, theta: float, c: float, kappa: Optional[float] = None
) -> BoundConstants:
    """Assemble all bound constants for exponent ``theta`` and mix ``c``.

    Premises: 0 < theta < 1 + 2*delta/sigma1^2 and c > max(rho/eta - mu, 0).
    ``kappa`` defaults to half its admissible ceiling,
    theta*(delta + (1-theta)*sigma1^2/2)/2, which keeps L1 > 0 with margin;
    an explicit kappa must lie strictly inside (0, ceiling).
    """
    theta_cap = math.inf if p.sigma1 == 0 else 1.0 + 2.0 * p.delta / p.sigma1**2
    if not (0.0 < theta < theta_cap):
        raise DomainError(
            f"theta must lie in (0, 1 + 2*delta/sigma1^2) = (0, {theta_cap:.6g}), got {theta}"
        )
    c_floor = max(p.rho / p.eta - p.mu, 0.0)
    if not (c > c_floor):
        raise DomainError(f"c must exceed max(rho/eta - mu, 0) = {c_floor:.6g}, got {c}")
    kappa_cap = theta * (p.delta + 0.5 * (1.0 - theta) * p.sigma1**2)
    if kappa is None:
        kappa = 0.5 * kappa_cap
    if not (0.0 < kappa < kappa_cap):
        raise DomainError(
            f"kappa must lie in (0, theta*(delta + (1-theta)*sigma1^2/2)) = (0, {kappa_cap:.6g}), "
            f"got {kappa}"
        )

    L1 = p.delta + 0.5 * (1.0 - theta) * p.sigma1**2 - kappa / theta
    k_t = kappa / theta
    L2 = _sup_downward_quadratic(
        a=c * (p.beta + p.mu + c),
        b=c * p.alpha + c * p.rho - c * p.delta - p.mu - c + 2.0 * c * k_t,
        # the conservative (larger) of the two printed constant terms
        c=p.rho - p.delta + max(p.sigma, p.alpha) + 2.0 * k_t,
    )
    L3 = _sup_downward_cubic(
        a=c * c * p.beta,
        b=c * c * p.alpha - c * p.beta + 0.5 * (theta - 1.0) * c * c * p.sigma2**2 + c * c * k_t,
        c=c * (p.alpha + p.sigma + 2.0 * k_t),
        d=p.sigma + k_t,
    )
    L4 = max(1.0, _sup_downward_quadratic(a=L1, b=L2, c=L3))
    L6 = _sup_inverse_expression(p, theta, kappa)
    rhos = {k: rho_k(p, k) for k in (2, 3, 4, 5)}
    L7 = L6 + (p.mu / 5.0) * rhos[5] + (p.mu / 2.0) * rhos[2]

    laws = stationary_laws(p)

    def _moments(law: Optional[StationaryLaw]) -> Optional[dict]:
        if law is None:
            return None
        out = {}
        for power in (1, 2):
            try:
                out[power] = law.moment(power)
            except DomainError:
                pass
        return out

    report = classify_regime(p)
    return BoundConstants(
        theta=theta,
        c=c,
        kappa=kappa,
        L1=L1,
        L2=L2,
        L3=L3,
        L4=L4,
        L6=L6,
        L7=L7,
        moment_bound=L4 / kappa,
        inverse_moment_bound=L7 / kappa,
        rho_k=rhos,
        M_p=_moments(laws.phi),
        Mbar_p=_moments(laws.psi),
        lambda1=report.lambda1,
        lambda2=report.lambda2,
        lambda3=report.lambda3,
        h=report.h,
        zeta=uniqueness_margin(p),
    )


# ---------------------------------------------------------------------------
# recurrence potential
# ---------------------------------------------------------------------------


def uniqueness_margin(p: ModelParams) -> Optional[float]:
    """zeta = ((delta - h^2)*(alpha - sigma2^2/2) - sigma)/2 when positive."""
    h = response_peak(p)
    two_zeta = (p.delta - h * h) * (p.alpha - 0.5 * p.sigma2**2) - p.sigma
    return 0.5 * two_zeta if two_zeta > 0 else None


def admissible_c(p: ModelParams, fraction: float = 0.9) -> float:
    """A mixing coefficient strictly inside c*(delta + sigma1^2) <= sigma*zeta."""
    zeta = uniqueness_margin(p)
    if zeta is None:
        raise DomainError(
            "(delta - h^2)*(alpha - sigma2^2/2) - sigma must be positive for recurrence"
        )
    if not (0.0 < fraction <= 1.0):
        raise DomainError("fraction must lie in (0, 1]")
    return fraction * p.sigma * zeta / (p.delta + p.sigma1**2)


def _check_recurrence_premises(p: ModelParams, c: float) -> float:
    zeta = uniqueness_margin(p)
    if zeta is None:
        raise DomainError(
            "premise violated: (delta - h^2)*(alpha - sigma2^2/2) - sigma > 0 fails"
        )
    if c <= 0:
        raise DomainError("c must be > 0")
    if c * (p.delta + p.sigma1**2) > p.sigma * zeta:
        raise DomainError(
            f"premise violated: c*(delta + sigma1^2) = {c * (p.delta + p.sigma1**2):.6g} "
            f"exceeds sigma*zeta = {p.sigma * zeta:.6g}"
        )
    return zeta


def recurrence_bound(p: ModelParams, c: float, x, y):
    """Closed-form upper envelope for the generator of the recurrence potential.

    Obtained from the exact generator value by capping the net response at
    h^2 and Young-splitting the mu*y/x cross term:

        B(x, y) = sigma - (delta - h^2) x - c sigma/(2 x^2)
                  + c (delta + sigma1^2)/x
                  + (2 alpha + sigma2^2 + c mu^2/(2 sigma)) y^2 - 2 beta y^3
                  + (delta - h^2) [ -sigma2^2/(2 (y+1)^2)
                                    - (alpha - sigma2^2 - x)/(y+1)
                                    + beta y/(y+1) ]

    Requires sigma > 0 (the Young split divides by sigma); accepts scalars
    or arrays.
    """
    if p.sigma <= 0:
        raise DomainError("recurrence_bound requires sigma > 0")
    h = response_peak(p)
    gap = p.delta - h * h
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    out = (
        p.sigma
        - gap * x_arr
        - c * p.sigma / (2.0 * x_arr**2)
        + c * (p.delta + p.sigma1**2) / x_arr
        + (2.0 * p.alpha + p.sigma2**2 + c * p.mu**2 / (2.0 * p.sigma)) * y_arr**2
        - 2.0 * p.beta * y_arr**3
        + gap
        * (
            -p.sigma2**2 / (2.0 * (y_arr + 1.0) ** 2)
            - (p.alpha - p.sigma2**2 - x_arr) / (y_arr + 1.0)
            + p.beta * y_arr / (y_arr + 1.0)
        )
    )
    return _as_float_or_array(x, out) if np.isscalar(x) and np.isscalar(y) else out


@dataclass(frozen=True)
class RecurrenceEval:
    value: float
    generator_value: float
    generator_bound: float


def lyapunov_recurrence(p: ModelParams, c: float, s: State) -> RecurrenceEval:
    """Evaluate the recurrence potential U, its generator value, and the bound.

    Premises (each named on failure): the uniqueness margin
    2*zeta = (delta - h^2)*(alpha - sigma2^2/2) - sigma must be positive and
    c must satisfy 0 < c with c*(delta + sigma1^2) <= sigma*zeta.
    """
    _check_recurrence_premises(p, c)
    f = recurrence_test_function(p, c)
    return RecurrenceEval(
        value=float(f.value(s.x, s.y)),
        generator_value=float(generator_apply(p, f, s)),
        generator_bound=float(recurrence_bound(p, c, s.x, s.y)),
    )


def _generator_on_grid(p: ModelParams, f: TestFunction, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    dx, dy = _drift_xy(p, X, Y)
    fx, fy = f.gradient(X, Y)
    fxx, fyy = f.hessian_diagonal(X, Y)
    return fx * dx + fy * dy + 0.5 * (fxx * p.sigma1**2 * X**2 + fyy * p.sigma2**2 * Y**2)


@dataclass(frozen=True)
class RecurrenceDomain:
    """Compact box outside which the generator of U stays below -zeta."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    zeta: float
    c: float

    def contains(self, x, y) -> bool:
        return self.x_lo < x < self.x_hi and self.y_lo < y < self.y_hi


def recurrence_domain(
    p: ModelParams,
    c: Optional[float] = None,
    n_grid: int = 600,
    log_range: tuple = (-8.0, 6.0),
    margin_decades: float = 0.15,
) -> RecurrenceDomain:
    """Locate a recurrence box by log-grid search.

    Scans the generator of U over a log-spaced grid, takes the bounding box
    of all points where it exceeds -zeta, and pads the box by
    ``margin_decades`` in log10.  The generator tends to -inf toward every
    boundary of the quadrant, so the unsafe set is compact and the padded
    box certifies L U <= -zeta outside it (tests re-verify on an
    independent boundary shell).
    """
    if c is None:
        c = admissible_c(p)
    zeta = _check_recurrence_premises(p, c)
    f = recurrence_test_function(p, c)
    grid = np.logspace(log_range[0], log_range[1], n_grid)
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    lu = _generator_on_grid(p, f, X, Y)
    unsafe = lu > -zeta
    pad = 10.0**margin_decades
    if not unsafe.any():
        return RecurrenceDomain(1.0 / pad, pad, 1.0 / pad, pad, zeta=zeta, c=c)
    xs = X[unsafe]
    ys = Y[unsafe]
    return RecurrenceDomain(
        x_lo=xs.min() / pad,
        x_hi=xs.max() * pad,
        y_lo=ys.min() / pad,
        y_hi=ys.max() * pad,
        zeta=zeta,
        c=c,
    )
