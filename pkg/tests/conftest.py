import numpy as np
import pytest

from tumor_immune_sde import EnsembleSpec, StepPolicy, load_preset, run_ensemble

# One fixed seed for every stochastic check in the suite; chosen once, not
# tuned (K-S at level 0.05 has an inherent 5% false-rejection risk per seed).
ACCEPT_SEED = 20260810


@pytest.fixture(scope="session")
def policy():
    return StepPolicy()


@pytest.fixture(scope="session")
def preset_51():
    return load_preset("example-5.1")


@pytest.fixture(scope="session")
def preset_52():
    return load_preset("example-5.2")


@pytest.fixture(scope="session")
def extinction_ensemble(preset_51, policy):
    """100 strong-noise paths to T=200 (the extinction reference ensemble)."""
    spec = EnsembleSpec(
        n_paths=100, horizon=200.0, policy=policy, master_seed=ACCEPT_SEED
    )
    return run_ensemble(preset_51.params, preset_51.initial, spec)


@pytest.fixture(scope="session")
def permanence_ensemble(preset_52, policy):
    """200 weak-noise paths to T=500 with burn-in 100 (permanence reference)."""
    spec = EnsembleSpec(
        n_paths=200, horizon=500.0, policy=policy, master_seed=ACCEPT_SEED, burn_in=100.0
    )
    return run_ensemble(preset_52.params, preset_52.initial, spec)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
