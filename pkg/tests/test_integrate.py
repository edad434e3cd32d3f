"""Integrator tests: steps, determinism, positivity policy, coupling, orders."""

import math

import numpy as np
import pytest
from scipy import stats

from tumor_immune_sde import (
    DomainError,
    ModelParams,
    PathRecord,
    PositivityError,
    SimulationError,
    State,
    StepPolicy,
    StepScheme,
    brownian_increments,
    em_step,
    load_preset,
    milstein_step,
    simulate,
    simulate_coupled,
)
from tumor_immune_sde.verify import suite_order

from conftest import ACCEPT_SEED


class TestBrownianIncrements:
    def test_stream_statistics(self):
        n = 200_000
        inc = brownian_increments(n, 1e-3, seed=ACCEPT_SEED)
        tol_mean = 5.0 / math.sqrt(n)
        tol_var = 5.0 * math.sqrt(2.0 / n)
        for stream in (inc.xi, inc.eta):
            assert abs(stream.mean()) < tol_mean
            assert abs(stream.var() - 1.0) < tol_var
        # the two streams are independently seeded
        assert abs(np.corrcoef(inc.xi, inc.eta)[0, 1]) < 5.0 / math.sqrt(n)

    def test_coarsen_preserves_brownian_path(self):
        inc = brownian_increments(64, 0.25, seed=3)
        coarse = inc.coarsen(8)
        assert coarse.dt == pytest.approx(2.0)
        fine_b = math.sqrt(inc.dt) * inc.xi.reshape(8, 8).sum(axis=1)
        coarse_b = math.sqrt(coarse.dt) * coarse.xi
        np.testing.assert_allclose(coarse_b, fine_b, rtol=1e-12)

    def test_coarsen_requires_divisor(self):
        with pytest.raises(DomainError):
            brownian_increments(10, 0.1, seed=0).coarsen(3)


class TestSteps:
    def test_zero_noise_reduces_to_euler(self, preset_51):
        p = preset_51.params.replace(sigma1=0.0, sigma2=0.0)
        s = State(5.0, 50.0)
        dt = 1e-3
        dx = p.sigma + p.rho * 250.0 / 70.19 - p.mu * 250.0 - p.delta * 5.0
        dy = p.alpha * 50.0 - p.beta * 2500.0 - 250.0
        for step in (milstein_step, em_step):
            out = step(p, s, xi=1.3, eta=-0.4, dt=dt)
            assert out.x == pytest.approx(5.0 + dx * dt, rel=1e-12)
            assert out.y == pytest.approx(50.0 + dy * dt, rel=1e-12)

    def test_single_step_hand_oracle(self, preset_51):
        # xi = eta = 0: the Milstein correction contributes
        # -(sigma_i^2 * v / 2) * dt on top of the deterministic Euler move
        p = preset_51.params
        dt = 1e-3
        dx = 0.1181 + 1.131 * 250.0 / 70.19 - 0.00311 * 250.0 - 0.3743 * 5.0
        dy = 1.636 * 50.0 - 3.272e-3 * 2500.0 - 250.0
        expected_x = 5.0 + dx * dt - 0.5 * 0.2**2 * 5.0 * dt
        expected_y = 50.0 + dy * dt - 0.5 * 2.0**2 * 50.0 * dt
        out = milstein_step(p, State(5.0, 50.0), xi=0.0, eta=0.0, dt=dt)
        assert out.x == pytest.approx(expected_x, rel=1e-12)
        assert out.y == pytest.approx(expected_y, rel=1e-12)

    def test_unit_square_draws_cancel_correction(self, preset_51):
        # xi^2 = eta^2 = 1 makes the correction vanish identically, so
        # Milstein and Euler-Maruyama coincide
        p = preset_51.params
        for xi, eta in ((1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)):
            a = milstein_step(p, State(5.0, 50.0), xi, eta, 1e-3)
            b = em_step(p, State(5.0, 50.0), xi, eta, 1e-3)
            assert a.x == pytest.approx(b.x, rel=1e-15)
            assert a.y == pytest.approx(b.y, rel=1e-15)

    def test_positivity_violation_signal(self, preset_51):
        with pytest.raises(PositivityError):
            em_step(preset_51.params, State(5.0, 50.0), xi=0.0, eta=-40.0, dt=0.1)

    def test_bad_dt_rejected(self, preset_51):
        with pytest.raises(DomainError):
            milstein_step(preset_51.params, State(1.0, 1.0), 0.0, 0.0, 0.0)


class TestStrongOrder:
    def test_gbm_orders(self):
        result = suite_order(ACCEPT_SEED, n_paths=800)
        by_name = {a.name: a for a in result.assertions}
        mil = by_name["Milstein strong order in [0.85, 1.15]"]
        em = by_name["Euler-Maruyama strong order in [0.35, 0.65]"]
        assert mil.passed, f"Milstein slope {mil.measured}"
        assert em.passed, f"Euler-Maruyama slope {em.measured}"
        # Milstein error should also be uniformly smaller
        errs = mil.detail
        assert all(
            m < e for m, e in zip(errs["errors_milstein"], errs["errors_euler"])
        )


class TestSimulate:
    def test_determinism_bit_identical(self, preset_51, policy, tmp_path):
        a = simulate(preset_51.params, preset_51.initial, policy, horizon=2.0, seed=42)
        b = simulate(preset_51.params, preset_51.initial, policy, horizon=2.0, seed=42)
        assert np.array_equal(a.times, b.times)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
        fa, fb = tmp_path / "a.csv", tmp_path / "b.csv"
        a.to_csv(fa)
        b.to_csv(fb)
        assert fa.read_bytes() == fb.read_bytes()

    def test_different_seeds_differ(self, preset_51, policy):
        a = simulate(preset_51.params, preset_51.initial, policy, horizon=1.0, seed=1)
        b = simulate(preset_51.params, preset_51.initial, policy, horizon=1.0, seed=2)
        assert not np.array_equal(a.x, b.x)

    @pytest.mark.parametrize(
        "policy",
        [
            # Euler-Maruyama flips sign easily at coarse steps; Milstein's
            # quadratic correction needs an even coarser one
            StepPolicy(scheme=StepScheme.EULER_MARUYAMA, dt=0.05),
            StepPolicy(scheme=StepScheme.MILSTEIN, dt=0.25),
        ],
        ids=["euler", "milstein"],
    )
    def test_all_emitted_states_positive_under_stress(self, preset_51, policy):
        # coarse steps with strong tumor noise force frequent halvings;
        # every stored state must still be strictly positive
        total_halvings = 0
        for seed in range(5):
            rec = simulate(preset_51.params, preset_51.initial, policy, horizon=5.0, seed=seed)
            rec.validate()
            total_halvings += rec.halvings
        assert total_halvings > 0

    def test_halving_exhaustion_carries_time(self, preset_51):
        policy = StepPolicy(dt=0.5, max_halvings=0)
        with pytest.raises(SimulationError) as err:
            simulate(preset_51.params, preset_51.initial, policy, horizon=50.0, seed=3)
        assert 0.0 <= err.value.time <= 50.0

    def test_extinction_preset_decays(self, extinction_ensemble):
        # ln y(T)/T <= -lambda1/2 on at least 90% of seeds at T=200
        lambda1 = 0.364
        T = 200.0
        ln_slope = np.log(extinction_ensemble.y[-1]) / T
        assert np.mean(ln_slope <= -lambda1 / 2.0) >= 0.9

    def test_permanence_preset_stays_in_band(self, permanence_ensemble):
        res = permanence_ensemble
        assert res.x.min() > 0.0 and res.y.min() > 0.0
        assert res.x.max() < 50.0
        assert res.y.max() < 2000.0

    def test_horizon_must_be_positive(self, preset_51, policy):
        with pytest.raises(DomainError):
            simulate(preset_51.params, preset_51.initial, policy, horizon=0.0, seed=1)

    @pytest.mark.parametrize("preset_name", ["example-5.1", "example-5.2"])
    def test_halving_policy_preserves_law(self, preset_name):
        # ensembles at the base dt (policy active) and at a quarter of it
        # should be statistically indistinguishable at level 0.05
        from tumor_immune_sde import EnsembleSpec, run_ensemble

        pre = load_preset(preset_name)
        samples = []
        for dt in (1e-3, 2.5e-4):
            spec = EnsembleSpec(
                n_paths=100, horizon=20.0, policy=StepPolicy(dt=dt),
                master_seed=ACCEPT_SEED, record_stride=1000,
            )
            res = run_ensemble(pre.params, pre.initial, spec)
            samples.append(res.at_time("x", 20.0))
        assert stats.ks_2samp(samples[0], samples[1]).pvalue >= 0.05


class TestCoupled:
    def test_requires_processes(self, preset_51, policy):
        with pytest.raises(DomainError):
            simulate_coupled(preset_51.params, preset_51.initial, policy, 1.0, 1, which=())

    @pytest.mark.parametrize("preset_name", ["example-5.1", "example-5.2"])
    def test_pathwise_domination(self, preset_name, policy):
        pre = load_preset(preset_name)
        for seed in range(5):
            rec = simulate_coupled(
                pre.params, pre.initial, policy, horizon=10.0, seed=seed, which=("psi", "phi")
            )
            assert np.all(rec.y <= rec.psi)
            assert np.all(rec.x <= rec.phi)
            rec.validate()

    def test_boundary_process_dominates_when_response_is_negative(self, policy):
        # rho <= mu*eta: the net response is negative, so x is dominated by
        # the boundary process z under shared noise
        p = ModelParams(
            sigma=0.1181, rho=0.01, eta=20.19, mu=0.00311, delta=0.3743,
            alpha=1.636, beta=3.272e-3, sigma1=0.2, sigma2=0.25,
        )
        for seed in range(5):
            rec = simulate_coupled(
                p, State(5.0, 50.0), policy, horizon=10.0, seed=seed, which=("z",)
            )
            assert np.all(rec.z >= rec.x - 1e-12)

    def test_z_activation_time(self, preset_51, policy):
        rec = simulate_coupled(
            preset_51.params, preset_51.initial, policy, horizon=2.0, seed=9,
            which=("z",), t0_for_z=1.0,
        )
        i0 = int(np.searchsorted(rec.times, 1.0))
        assert np.all(np.isnan(rec.z[:i0]))
        assert rec.z[i0] == rec.x[i0]
        assert np.all(rec.z[i0:] > 0)

    def test_record_validation_rejects_violations(self):
        times = np.array([0.0, 1.0])
        good = np.array([1.0, 2.0])
        rec = PathRecord(times=times, x=good, y=good * 2, psi=good * 2 - 0.5)
        with pytest.raises(DomainError, match="psi"):
            rec.validate()


class TestCsvExport:
    def test_roundtrip_exact(self, preset_52, policy, tmp_path):
        rec = simulate_coupled(
            preset_52.params, preset_52.initial, policy, horizon=0.5, seed=11,
            which=("psi", "phi", "z"),
        )
        path = tmp_path / "path.csv"
        rec.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "t,x,y,psi,phi,z"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        np.testing.assert_array_equal(data[:, 0], rec.times)
        np.testing.assert_array_equal(data[:, 1], rec.x)
        np.testing.assert_array_equal(data[:, 3], rec.psi)
        np.testing.assert_array_equal(data[:, 5], rec.z)

    def test_plain_header(self, preset_51, policy, tmp_path):
        rec = simulate(preset_51.params, preset_51.initial, policy, horizon=0.1, seed=1)
        path = tmp_path / "p.csv"
        rec.to_csv(path)
        assert path.read_text().splitlines()[0] == "t,x,y"
