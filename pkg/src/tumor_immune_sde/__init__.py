"""Simulation and verification laboratory for a stochastic tumor-immune system.

A two-dimensional SDE couples effector-cell and tumor-cell densities with
independent multiplicative noises.  The package integrates the system (and
its scalar comparison processes) with seeded, reproducible Milstein or
Euler-Maruyama schemes; evaluates the closed-form stationary laws, regime
thresholds, and Lyapunov bound constants; and statistically verifies the
extinction, stationarity, and permanence predictions at desk scale.

Main entry points: :func:`simulate` / :func:`simulate_coupled` for paths,
:func:`run_ensemble` plus the estimators in :mod:`tumor_immune_sde.ensemble`
for Monte-Carlo work, :func:`classify_regime` and :func:`stationary_laws`
for the analytic layer, and the ``tumor-immune`` command-line tool.
"""

from .analytic import (
    BoundConstants,
    Certificate,
    LawKind,
    PsiFate,
    RecurrenceDomain,
    RecurrenceEval,
    Regime,
    RegimeReport,
    StationaryLaw,
    StationaryLaws,
    admissible_c,
    classify_regime,
    ergodic_moment,
    logistic_moment_bound,
    lyapunov_constants,
    lyapunov_recurrence,
    recurrence_bound,
    recurrence_domain,
    rho_k,
    stationary_laws,
    uniqueness_margin,
)
from .config import RunConfig, config_to_dict, dump_config, load_config, parse_config
from .empirical import (
    DensityCurve,
    Ecdf,
    JointHistogram,
    KSResult,
    Sample,
    ecdf,
    empirical_density,
    joint_histogram,
    ks_critical_constant,
    ks_test,
    silverman_bandwidth,
)
from .ensemble import (
    EnsembleResult,
    EnsembleSpec,
    EstimateWithCI,
    box_indicator,
    decay_rate,
    decay_rate_of,
    estimate_moment,
    moment_of,
    occupation_of,
    permanence_occupation,
    run_ensemble,
    time_average,
    time_average_of,
)
from .errors import (
    ConfigError,
    DegenerateSampleError,
    DomainError,
    InsufficientSampleError,
    NonFiniteEstimateError,
    PositivityError,
    SimulationError,
)
from .integrate import (
    BrownianIncrements,
    PathRecord,
    StepPolicy,
    StepScheme,
    brownian_increments,
    em_step,
    milstein_step,
    simulate,
    simulate_coupled,
)
from .model import (
    DimensionalParams,
    ModelParams,
    State,
    TestFunction,
    check_derivatives,
    diffusion,
    drift,
    generator_apply,
    inverse_moment_test_function,
    moment_test_function,
    net_response,
    nondimensionalize,
    positivity_test_function,
    recurrence_test_function,
    response_peak,
)
from .presets import PRESET_NAMES, PRESETS, Preset, load_preset
from .verify import (
    Assertion,
    PremiseError,
    SUITE_NAMES,
    SuiteResult,
    run_suite,
    suite_comparison,
    suite_extinction,
    suite_ks,
    suite_moments,
    suite_order,
    suite_permanence,
)

__version__ = "0.1.0"
