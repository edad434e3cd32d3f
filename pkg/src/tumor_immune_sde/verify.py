"""Verification suites: machine-checkable assertions behind ``verify``.

Each suite runs the Monte-Carlo experiments needed for a family of
long-run claims and reduces them to pass/fail assertions with measured
values, bounds, and slacks.  Statistical assertions allow three cross-path
standard errors of slack; exact structural assertions (pathwise domination,
duality identities) allow none.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analytic import (
    Regime,
    classify_regime,
    logistic_moment_bound,
    rho_k,
    stationary_laws,
    StationaryLaw,
    LawKind,
)
from .empirical import Sample, ks_test
from .ensemble import (
    EnsembleSpec,
    decay_rate_of,
    moment_of,
    occupation_of,
    run_ensemble,
    time_average_of,
)
from .errors import DomainError
from .integrate import StepPolicy, _make_consts, _step_pair, brownian_increments
from .model import ModelParams, State, response_peak

__all__ = [
    "PremiseError",
    "Assertion",
    "SuiteResult",
    "SUITE_NAMES",
    "run_suite",
    "suite_extinction",
    "suite_permanence",
    "suite_moments",
    "suite_comparison",
    "suite_ks",
    "suite_order",
]


class PremiseError(Exception):
    """The requested suite does not apply to the configured regime."""


@dataclass(frozen=True)
class Assertion:
    name: str
    passed: bool
    measured: Optional[float]
    bound: Optional[float]
    comparison: str
    slack: Optional[float] = None
    detail: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "bound": self.bound,
            "comparison": self.comparison,
            "slack": self.slack,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    passed: bool
    assertions: tuple

    def to_json_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "assertions": [a.to_json_dict() for a in self.assertions],
        }


def _result(suite: str, assertions: list) -> SuiteResult:
    return SuiteResult(suite=suite, passed=all(a.passed for a in assertions), assertions=tuple(assertions))


def _upper(name, measured, bound, **detail) -> Assertion:
    return Assertion(
        name=name, passed=measured <= bound, measured=float(measured), bound=float(bound),
        comparison="<=", slack=float(bound - measured), detail=detail,
    )


def _lower(name, measured, bound, **detail) -> Assertion:
    return Assertion(
        name=name, passed=measured >= bound, measured=float(measured), bound=float(bound),
        comparison=">=", slack=float(measured - bound), detail=detail,
    )


def _require_regime(p: ModelParams, suite: str, regime: Regime):
    report = classify_regime(p)
    if report.regime is not regime:
        raise PremiseError(
            f"suite '{suite}' requires the {regime.value} regime; "
            f"these parameters classify as {report.regime.value}"
        )
    return report


def suite_extinction(
    p: ModelParams,
    s0: State,
    policy: StepPolicy,
    master_seed: int,
    n_paths: int = 100,
    horizon: float = 200.0,
    burn_in: Optional[float] = None,
) -> SuiteResult:
    """Tumor decay rate and effector boundary law in the extinction regime."""
    report = _require_regime(p, "extinction", Regime.EXTINCTION)
    spec = EnsembleSpec(
        n_paths=n_paths, horizon=horizon, policy=policy, master_seed=master_seed, burn_in=burn_in
    )
    result = run_ensemble(p, s0, spec)
    assertions = []

    slope = decay_rate_of(result, "y")
    assertions.append(
        _upper(
            "mean ln-y slope <= -lambda1 + 3*SE",
            slope.point,
            -report.lambda1 + 3.0 * slope.std_error,
            std_error=slope.std_error,
            lambda1=report.lambda1,
            n=slope.n,
        )
    )

    z_law = report.boundary_z_law
    inv_sample = Sample(1.0 / result.at_time("x", horizon), origin=f"1/x(T={horizon:g}) across paths")
    ks = ks_test(inv_sample, z_law.dual(), level=0.05)
    assertions.append(
        _upper(
            "K-S of 1/x(T) against the boundary Gamma law not rejected at 0.05",
            ks.statistic,
            ks.critical_value,
            n=ks.n,
            level=ks.level,
        )
    )
    return _result("extinction", assertions)


def suite_permanence(
    p: ModelParams,
    s0: State,
    policy: StepPolicy,
    master_seed: int,
    n_paths: int = 200,
    horizon: float = 500.0,
    burn_in: Optional[float] = 100.0,
    zeta_box: float = 1e-3,
) -> SuiteResult:
    """Ergodic time-average brackets and strong permanence occupation."""
    report = _require_regime(p, "permanence", Regime.PERMANENCE)
    spec = EnsembleSpec(
        n_paths=n_paths, horizon=horizon, policy=policy, master_seed=master_seed, burn_in=burn_in
    )
    result = run_ensemble(p, s0, spec)
    laws = stationary_laws(p)
    mbar1 = laws.psi.mean
    assertions = []

    avg_y = time_average_of(result, "y")
    assertions.append(
        _lower(
            "time average of y >= lambda3 - 3*SE",
            avg_y.point,
            report.lambda3 - 3.0 * avg_y.std_error,
            std_error=avg_y.std_error,
            lambda3=report.lambda3,
        )
    )
    assertions.append(
        _upper(
            "time average of y <= Mbar1 + 3*SE",
            avg_y.point,
            mbar1 + 3.0 * avg_y.std_error,
            std_error=avg_y.std_error,
            Mbar1=mbar1,
        )
    )

    avg_inv_x = time_average_of(result, "1/x")
    assertions.append(
        _upper(
            "time average of 1/x <= lambda2 + 3*SE",
            avg_inv_x.point,
            report.lambda2 + 3.0 * avg_inv_x.std_error,
            std_error=avg_inv_x.std_error,
            lambda2=report.lambda2,
        )
    )

    occ = occupation_of(result, zeta_box)
    assertions.append(
        _lower(
            f"occupation of [{zeta_box:g}, {1/zeta_box:g}]^2 at T >= 0.95",
            occ.point,
            0.95,
            std_error=occ.std_error,
            n=occ.n,
        )
    )
    return _result("permanence", assertions)


def suite_moments(
    p: ModelParams,
    s0: State,
    policy: StepPolicy,
    master_seed: int,
    n_paths: int = 200,
    horizon: float = 400.0,
    burn_in: Optional[float] = None,
    psi_paths: int = 600,
    psi_horizon: float = 100.0,
    psi_times: tuple = (1.0, 10.0, 100.0),
) -> SuiteResult:
    """Second-moment caps: asymptotic for y, finite-time envelope for psi."""
    spec = EnsembleSpec(
        n_paths=n_paths, horizon=horizon, policy=policy, master_seed=master_seed, burn_in=burn_in
    )
    result = run_ensemble(p, s0, spec)
    assertions = []

    m2 = moment_of(result, "y", 2.0, at=horizon)
    cap = rho_k(p, 2)
    assertions.append(
        _upper(
            f"E[y^2] at T={horizon:g} <= rho_2 + 3*SE",
            m2.point,
            cap + 3.0 * m2.std_error,
            std_error=m2.std_error,
            rho_2=cap,
        )
    )

    psi_spec = EnsembleSpec(
        n_paths=psi_paths, horizon=psi_horizon, policy=policy, master_seed=master_seed + 1
    )
    psi_result = run_ensemble(p, s0, psi_spec, which=("psi",))
    for t in psi_times:
        est = moment_of(psi_result, "psi", 2.0, at=t)
        envelope = logistic_moment_bound(p, 2, t, s0.y)
        assertions.append(
            _upper(
                f"E[psi^2] at t={t:g} <= finite-time envelope + 3*SE",
                est.point,
                envelope + 3.0 * est.std_error,
                std_error=est.std_error,
                envelope=envelope,
            )
        )
    return _result("moments", assertions)


def suite_comparison(
    p: ModelParams,
    s0: State,
    policy: StepPolicy,
    master_seed: int,
    n_paths: int = 50,
    horizon: float = 50.0,
) -> SuiteResult:
    """Pathwise domination by the comparison processes at every grid point."""
    spec = EnsembleSpec(
        n_paths=n_paths, horizon=horizon, policy=policy, master_seed=master_seed, record_stride=1
    )
    result = run_ensemble(p, s0, spec, which=("psi", "phi"))
    n_grid = result.times.size * result.n_paths
    violations_y = int(np.count_nonzero(result.y > result.psi))
    violations_x = int(np.count_nonzero(result.x > result.phi))
    assertions = [
        _upper(
            "pathwise y <= psi at every grid point (violation count = 0)",
            violations_y, 0, grid_points=n_grid, n_paths=result.n_paths,
        ),
        _upper(
            "pathwise x <= phi at every grid point (violation count = 0)",
            violations_x, 0, grid_points=n_grid, n_paths=result.n_paths,
        ),
    ]
    return _result("comparison", assertions)


def suite_ks(
    p: ModelParams,
    s0: State,
    policy: StepPolicy,
    master_seed: int,
    n_paths: int = 100,
    horizon: float = 200.0,
) -> SuiteResult:
    """Cross-path goodness of fit of x(T) to the boundary law, plus controls."""
    report = _require_regime(p, "ks", Regime.EXTINCTION)
    spec = EnsembleSpec(n_paths=n_paths, horizon=horizon, policy=policy, master_seed=master_seed)
    result = run_ensemble(p, s0, spec)
    x_final = result.at_time("x", horizon)
    z_law = report.boundary_z_law
    assertions = []

    direct = ks_test(Sample(x_final, "x(T) across paths"), z_law, level=0.05)
    inverse = ks_test(Sample(1.0 / x_final, "1/x(T) across paths"), z_law.dual(), level=0.05)
    assertions.append(
        _upper(
            "K-S of 1/x(T) against the boundary Gamma law not rejected at 0.05",
            inverse.statistic,
            inverse.critical_value,
            n=inverse.n,
        )
    )
    assertions.append(
        _upper(
            "duality: D_n identical for x vs inverse-Gamma and 1/x vs Gamma",
            abs(direct.statistic - inverse.statistic),
            1e-12,
        )
    )
    wrong_null = StationaryLaw(LawKind.GAMMA, shape=10.0, rate=z_law.rate)
    power = ks_test(Sample(1.0 / x_final, "1/x(T) across paths"), wrong_null, level=0.05)
    assertions.append(
        Assertion(
            name="mis-specified null (shape 10) rejected",
            passed=power.reject,
            measured=power.statistic,
            bound=power.critical_value,
            comparison=">",
            slack=power.statistic - power.critical_value,
        )
    )
    return _result("ks", assertions)


def _gbm_params(delta: float = 0.5, sigma1: float = 1.0) -> ModelParams:
    # x-equation reduces to dX = -delta X dt + sigma1 X dB1, exactly solvable
    return ModelParams(
        sigma=0.0, rho=0.0, eta=1.0, mu=0.0, delta=delta, alpha=1.0, beta=1.0,
        sigma1=sigma1, sigma2=0.0,
    )


def _integrate_x(p: ModelParams, increments, x0: float, y0: float, milstein: bool) -> np.ndarray:
    consts = _make_consts(p, increments.dt, milstein, response_peak(p) ** 2)
    x = np.full(increments.xi.shape[1], x0)
    y = np.full_like(x, y0)
    for i in range(increments.n_steps):
        x, y = _step_pair(p, consts, x, y, increments.xi[i], increments.eta[i])
    return x


def suite_order(
    master_seed: int,
    n_paths: int = 2000,
    k_min: int = 6,
    k_max: int = 12,
    horizon: float = 1.0,
) -> SuiteResult:
    """Strong-convergence orders on the exactly solvable geometric sub-case.

    With sigma = rho = mu = 0 the effector equation is geometric Brownian
    motion with exact solution x0*exp((-delta - sigma1^2/2) t + sigma1 B1);
    the same refined Brownian path drives every step size, and the strong
    error at T is fitted against dt on a log-log scale.
    """
    if not (1 <= k_min < k_max):
        raise DomainError("need 1 <= k_min < k_max")
    p = _gbm_params()
    x0 = 1.0
    n_fine = 2**k_max
    fine = brownian_increments(n_fine, horizon / n_fine, np.random.SeedSequence(master_seed), n_paths)
    b_final = math.sqrt(fine.dt) * fine.xi.sum(axis=0)
    exact = x0 * np.exp((-p.delta - 0.5 * p.sigma1**2) * horizon + p.sigma1 * b_final)

    dts, err_mil, err_em = [], [], []
    for k in range(k_min, k_max + 1):
        inc = fine.coarsen(2 ** (k_max - k))
        dts.append(inc.dt)
        err_mil.append(np.abs(_integrate_x(p, inc, x0, 1.0, True) - exact).mean())
        err_em.append(np.abs(_integrate_x(p, inc, x0, 1.0, False) - exact).mean())
    log_dt = np.log(np.asarray(dts))
    slope_mil = float(np.polyfit(log_dt, np.log(err_mil), 1)[0])
    slope_em = float(np.polyfit(log_dt, np.log(err_em), 1)[0])

    def in_band(name, slope, lo, hi):
        return Assertion(
            name=name, passed=lo <= slope <= hi, measured=slope, bound=None,
            comparison=f"in [{lo}, {hi}]", slack=min(slope - lo, hi - slope),
            detail={"errors_milstein": [float(e) for e in err_mil],
                    "errors_euler": [float(e) for e in err_em],
                    "dt": [float(d) for d in dts]} if name.startswith("Milstein") else {},
        )

    assertions = [
        in_band("Milstein strong order in [0.85, 1.15]", slope_mil, 0.85, 1.15),
        in_band("Euler-Maruyama strong order in [0.35, 0.65]", slope_em, 0.35, 0.65),
    ]
    return _result("order", assertions)


SUITE_NAMES = ("moments", "comparison", "extinction", "permanence", "ks", "order")


def run_suite(name: str, p: ModelParams, s0: State, policy: StepPolicy, master_seed: int, **overrides) -> SuiteResult:
    """Dispatch a named suite, forwarding any size overrides it accepts."""
    if name == "order":
        kwargs = {k: v for k, v in overrides.items() if k in ("n_paths",)}
        return suite_order(master_seed, **kwargs)
    table = {
        "extinction": suite_extinction,
        "permanence": suite_permanence,
        "moments": suite_moments,
        "comparison": suite_comparison,
        "ks": suite_ks,
    }
    try:
        fn = table[name]
    except KeyError:
        raise DomainError(f"unknown suite {name!r}; expected one of {SUITE_NAMES}") from None
    allowed = {"extinction": ("n_paths", "horizon", "burn_in"),
               "permanence": ("n_paths", "horizon", "burn_in"),
               "moments": ("n_paths", "horizon", "burn_in"),
               "comparison": ("n_paths", "horizon"),
               "ks": ("n_paths", "horizon")}[name]
    kwargs = {k: v for k, v in overrides.items() if k in allowed and v is not None}
    return fn(p, s0, policy, master_seed, **kwargs)
