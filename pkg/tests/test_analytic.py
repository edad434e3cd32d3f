"""Analytic-layer tests: laws, thresholds, bound constants, recurrence."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from tumor_immune_sde import (
    DomainError,
    LawKind,
    ModelParams,
    PsiFate,
    Regime,
    State,
    StationaryLaw,
    admissible_c,
    classify_regime,
    ergodic_moment,
    generator_apply,
    load_preset,
    logistic_moment_bound,
    lyapunov_constants,
    lyapunov_recurrence,
    recurrence_bound,
    recurrence_domain,
    recurrence_test_function,
    rho_k,
    stationary_laws,
    uniqueness_margin,
)
from tumor_immune_sde.analytic import (
    _generator_on_grid,
    _sup_downward_cubic,
    _sup_downward_quadratic,
)


def quad_moment(law: StationaryLaw, power: float) -> float:
    val, err = quad(
        lambda x: x**power * law.pdf(x), 0.0, np.inf, limit=300, epsabs=0.0, epsrel=1e-9
    )
    assert err < 1e-7 * abs(val) + 1e-15
    return val


class TestStationaryLaw:
    def laws_under_test(self):
        p51 = load_preset("example-5.1").params
        p52 = load_preset("example-5.2").params
        out = [stationary_laws(p51).z]
        sl = stationary_laws(p52)
        out += [sl.phi, sl.psi, sl.z]
        out += [StationaryLaw(LawKind.GAMMA, 2.5, 0.7), StationaryLaw(LawKind.INVERSE_GAMMA, 3.2, 1.4)]
        return out

    def test_pdf_normalization(self):
        for law in self.laws_under_test():
            total, err = quad(law.pdf, 0.0, np.inf, limit=300)
            assert abs(total - 1.0) < 1e-8

    def test_moments_match_quadrature(self):
        for law in self.laws_under_test():
            for power in (0.5, 1.0, 2.0, -1.0):
                try:
                    closed = law.moment(power)
                except DomainError:
                    continue
                assert closed == pytest.approx(quad_moment(law, power), rel=1e-6)

    def test_nonexistent_moment_names_constraint(self):
        gamma = StationaryLaw(LawKind.GAMMA, 1.5, 1.0)
        with pytest.raises(DomainError, match="power > -shape"):
            gamma.moment(-2.0)
        ig = StationaryLaw(LawKind.INVERSE_GAMMA, 1.5, 1.0)
        with pytest.raises(DomainError, match="power < shape"):
            ig.moment(2.0)

    def test_gamma_inverse_gamma_duality(self):
        # E[X^-p] under Gamma(a,b) equals E[X^p] under inverse-Gamma(a,b)
        law = StationaryLaw(LawKind.GAMMA, 4.3, 2.1)
        dual = law.dual()
        assert dual.kind is LawKind.INVERSE_GAMMA
        for power in (0.5, 1.0, 2.0):
            assert law.moment(-power) == pytest.approx(dual.moment(power), rel=1e-12)

    def test_cdf_and_ppf_against_scipy(self):
        xs = np.geomspace(0.01, 30.0, 40)
        gamma = StationaryLaw(LawKind.GAMMA, 3.5, 1.2)
        np.testing.assert_allclose(
            gamma.cdf(xs), stats.gamma.cdf(xs, a=3.5, scale=1 / 1.2), rtol=1e-10
        )
        ig = StationaryLaw(LawKind.INVERSE_GAMMA, 3.5, 1.2)
        np.testing.assert_allclose(
            ig.cdf(xs), stats.invgamma.cdf(xs, a=3.5, scale=1.2), rtol=1e-10
        )
        qs = np.linspace(0.01, 0.99, 21)
        np.testing.assert_allclose(ig.cdf(ig.ppf(qs)), qs, rtol=1e-10)

    def test_preset_law_parameters(self):
        p51 = load_preset("example-5.1").params
        z = stationary_laws(p51).z
        assert z.kind is LawKind.INVERSE_GAMMA
        assert round(z.shape, 3) == 19.715
        assert round(z.rate, 3) == 5.905
        assert z.mean == pytest.approx(5.905 / 18.715, rel=1e-6)
        assert z.mean == pytest.approx(p51.sigma / p51.delta, rel=1e-12)

        p52 = load_preset("example-5.2").params
        laws = stationary_laws(p52)
        assert laws.psi.shape == pytest.approx(51.352, rel=1e-12)
        assert laws.psi.rate == pytest.approx(0.104704, rel=1e-12)
        assert laws.psi.mean == pytest.approx((p52.alpha - p52.sigma2**2 / 2) / p52.beta, rel=1e-12)
        assert laws.psi.mean == pytest.approx(490.449, rel=1e-5)
        assert laws.phi.mean == pytest.approx(p52.sigma / 0.09089, rel=1e-3)

    def test_absent_laws_carry_reasons(self):
        p51 = load_preset("example-5.1").params
        laws = stationary_laws(p51)
        assert laws.phi is None and "delta - h^2" in laws.reasons["phi"]
        assert laws.psi is None and "extinct" in laws.reasons["psi"]
        silent = p51.replace(sigma1=0.0)
        assert stationary_laws(silent).z is None

    def test_ergodic_moment_values(self):
        p52 = load_preset("example-5.2").params
        laws = stationary_laws(p52)
        h2 = 0.0908906576705919
        assert ergodic_moment(laws.phi, 1.0) == pytest.approx(p52.sigma / h2, rel=1e-6)
        assert ergodic_moment(laws.phi, 1.0) == pytest.approx(1.29936, rel=1e-5)
        assert ergodic_moment(laws.phi, 0.0) == pytest.approx(1.0, rel=1e-14)


class TestMomentEnvelope:
    def test_rho_2_example(self, preset_52):
        cap = rho_k(preset_52.params, 2)
        oracle = ((2 * 1.636 + 0.0625) / (2 * 3.272e-3)) ** 2
        assert cap == pytest.approx(oracle, rel=1e-12)
        assert cap == pytest.approx(2.596e5, rel=1e-3)

    def test_rho_k_monotone_in_alpha_and_sigma2(self, rng):
        base = dict(sigma=0.1, rho=0.5, eta=5.0, mu=0.01, delta=0.4, beta=0.01)
        for _ in range(25):
            alpha = rng.uniform(0.2, 3.0)
            s2 = rng.uniform(0.05, 1.5)
            k = rng.uniform(1.2, 4.0)
            p = ModelParams(**base, alpha=alpha, sigma2=s2)
            up_alpha = ModelParams(**base, alpha=alpha * 1.3, sigma2=s2)
            up_s2 = ModelParams(**base, alpha=alpha, sigma2=s2 * 1.3)
            assert rho_k(up_alpha, k) > rho_k(p, k)
            assert rho_k(up_s2, k) > rho_k(p, k)

    def test_rho_k_requires_k_above_one(self, preset_52):
        with pytest.raises(DomainError):
            rho_k(preset_52.params, 1.0)

    def test_envelope_endpoints_and_monotonicity(self, preset_52):
        p = preset_52.params
        y0 = 50.0
        assert logistic_moment_bound(p, 2, 0.0, y0) == pytest.approx(y0**2, rel=1e-12)
        far = logistic_moment_bound(p, 2, 1e4, y0)
        assert far == pytest.approx(rho_k(p, 2), rel=1e-9)
        ts = np.linspace(0.0, 50.0, 200)
        values = logistic_moment_bound(p, 2, ts, y0)
        # y0 below the carrying scale: nondecreasing toward the cap, strictly
        # so before the exponential term underflows
        assert np.all(np.diff(values) >= 0)
        early = logistic_moment_bound(p, 2, np.linspace(0.0, 10.0, 100), y0)
        assert np.all(np.diff(early) > 0)
        assert np.all(values <= rho_k(p, 2) * (1 + 1e-12))

    def test_envelope_rejects_bad_k(self, preset_52):
        with pytest.raises(DomainError):
            logistic_moment_bound(preset_52.params, 0.8, 1.0, 50.0)


class TestRegimeClassification:
    def test_extinction_example(self, preset_51):
        report = classify_regime(preset_51.params)
        assert report.regime is Regime.EXTINCTION
        assert 2 * preset_51.params.alpha - preset_51.params.sigma2**2 == pytest.approx(
            -0.728, abs=1e-12
        )
        assert report.lambda1 == pytest.approx(0.364, abs=1e-12)
        cert = report.certificates[0]
        assert cert.satisfied and cert.value == pytest.approx(-0.728, abs=1e-12)
        assert report.aux_psi_fate is PsiFate.EXTINCT
        assert report.aux_phi_law is None
        assert report.boundary_z_law is not None

    def test_permanence_example(self, preset_52):
        report = classify_regime(preset_52.params)
        assert report.regime is Regime.PERMANENCE
        assert report.delta_minus_h2 == pytest.approx(0.09089, abs=1e-4)
        margin = report.lambda3 * preset_52.params.beta
        assert margin == pytest.approx(0.30539, abs=1e-4)
        assert report.lambda3 == pytest.approx(93.333, abs=1e-2)
        assert report.lambda2 == pytest.approx(16.254, abs=1e-3)
        assert report.aux_psi_fate is PsiFate.STATIONARY_GAMMA
        assert {c.condition: c.satisfied for c in report.certificates}[
            "delta - h^2 > 0 (permanence premise)"
        ]

    def test_boundary_is_indeterminate(self, preset_52):
        p = preset_52.params.replace(sigma2=math.sqrt(2 * preset_52.params.alpha))
        assert classify_regime(p).regime is Regime.INDETERMINATE

    def test_extinction_needs_lambda1_positive(self, rng):
        # below the noise threshold no parameter combination reads Extinction
        for _ in range(40):
            alpha = rng.uniform(0.2, 3.0)
            p = ModelParams(
                sigma=rng.uniform(0.01, 1.0), rho=rng.uniform(0.0, 2.0),
                eta=rng.uniform(0.5, 30.0), mu=rng.uniform(0.0, 0.2),
                delta=rng.uniform(0.05, 1.0), alpha=alpha, beta=rng.uniform(1e-3, 0.5),
                sigma1=rng.uniform(0.0, 1.0),
                sigma2=rng.uniform(0.0, 0.999) * math.sqrt(2 * alpha),
            )
            assert classify_regime(p).regime is not Regime.EXTINCTION

    def test_report_serialization_is_json_clean(self, preset_51):
        import json

        payload = classify_regime(preset_51.params).to_json_dict()
        parsed = json.loads(json.dumps(payload))
        assert parsed["regime"] == "extinction"
        assert parsed["laws"]["phi"] is None


class TestSupremumConstants:
    def test_quadratic_sup_identity_random(self, rng):
        for _ in range(30):
            a, b, c = rng.uniform(0.05, 3.0), rng.uniform(-2.0, 3.0), rng.uniform(-1.0, 2.0)
            v = np.linspace(0.0, 50.0, 4_000_001)
            grid = np.max(-a * v * v + b * v + c)
            assert _sup_downward_quadratic(a, b, c) == pytest.approx(grid, abs=1e-8)

    def test_cubic_sup_against_grid_oracle(self, preset_52):
        bc = lyapunov_constants(preset_52.params, theta=0.5, c=0.05)
        p, kt, c = preset_52.params, bc.kappa / bc.theta, bc.c
        a3 = c * c * p.beta
        b3 = c * c * p.alpha - c * p.beta + 0.5 * (bc.theta - 1) * c * c * p.sigma2**2 + c * c * kt
        c3 = c * (p.alpha + p.sigma + 2 * kt)
        d3 = p.sigma + kt
        y = np.linspace(1e-9, 5000.0, 1_000_000)
        grid = np.max(-a3 * y**3 + b3 * y * y + c3 * y + d3)
        assert bc.L3 == pytest.approx(grid, rel=1e-6)
        assert _sup_downward_cubic(a3, b3, c3, d3) == bc.L3

    def test_all_constants_match_grid_oracles(self, preset_52):
        p = preset_52.params
        bc = lyapunov_constants(p, theta=0.5, c=0.05)
        kt = bc.kappa / bc.theta
        c, th = bc.c, bc.theta
        y = np.linspace(1e-9, 100.0, 2_000_001)
        l2_grid = np.max(
            -c * (p.beta + p.mu + c) * y * y
            + (c * p.alpha + c * p.rho - c * p.delta - p.mu - c + 2 * c * kt) * y
            + (p.rho - p.delta + max(p.sigma, p.alpha) + 2 * kt)
        )
        assert bc.L2 == pytest.approx(l2_grid, rel=1e-6)
        x = np.linspace(1e-9, 100.0, 2_000_001)
        l4_grid = max(1.0, np.max(-bc.L1 * x * x + bc.L2 * x + bc.L3))
        assert bc.L4 == pytest.approx(l4_grid, rel=1e-6)
        u = np.concatenate([np.linspace(1e-9, 10.0, 2_000_001), np.geomspace(10.0, 1e5, 100_000)])
        c2 = p.sigma - p.delta - 0.5 * (th + 1) * p.sigma1**2 - kt - 0.5 * p.mu
        c1 = p.delta + p.sigma1**2 + 2 * kt
        l6_grid = np.max(-p.sigma * u**3 + 0.8 * p.mu * u**2.5 - c2 * u * u + c1 * u + kt)
        assert bc.L6 == pytest.approx(l6_grid, rel=1e-6)

    def test_bound_assembly(self, preset_52):
        p = preset_52.params
        bc = lyapunov_constants(p, theta=0.5, c=0.05)
        assert bc.L1 == pytest.approx(p.delta + 0.25 * p.sigma1**2 - bc.kappa / bc.theta, rel=1e-12)
        assert bc.L1 > 0
        assert bc.moment_bound == pytest.approx(bc.L4 / bc.kappa, rel=1e-12)
        assert bc.L7 == pytest.approx(
            bc.L6 + p.mu / 5 * bc.rho_k[5] + p.mu / 2 * bc.rho_k[2], rel=1e-12
        )
        assert bc.Mbar_p[1] == pytest.approx(490.449, rel=1e-5)
        assert bc.zeta == pytest.approx(0.0138784, rel=1e-4)

    def test_premise_validation(self, preset_52):
        p = preset_52.params
        with pytest.raises(DomainError, match="theta"):
            lyapunov_constants(p, theta=1 + 2 * p.delta / p.sigma1**2, c=0.05)
        with pytest.raises(DomainError, match="c must exceed"):
            lyapunov_constants(p, theta=0.5, c=0.02)  # rho/eta - mu ~ 0.0273

    def test_kappa_premise_boundary(self):
        # with sigma1 = 0 the admissible ceiling is exactly theta*delta
        p = ModelParams(sigma=0.1, rho=0.0, eta=1.0, mu=0.0, delta=0.5, alpha=1.0, beta=0.1)
        theta = 0.01
        with pytest.raises(DomainError, match="kappa"):
            lyapunov_constants(p, theta=theta, c=0.1, kappa=theta * p.delta)
        bc = lyapunov_constants(p, theta=theta, c=0.1, kappa=0.5 * theta * p.delta)
        assert bc.L1 > 0


class TestRecurrence:
    def test_margin_and_admissible_c(self, preset_52):
        p = preset_52.params
        h2 = 0.0908906576705919
        oracle = 0.5 * (h2 * (p.alpha - 0.5 * p.sigma2**2) - p.sigma)
        zeta = uniqueness_margin(p)
        assert zeta == pytest.approx(oracle, rel=1e-9)
        assert zeta == pytest.approx(0.01387839, rel=1e-6)
        c_max = p.sigma * zeta / (p.delta + p.sigma1**2)
        assert c_max == pytest.approx(3.95616e-3, rel=1e-4)
        assert admissible_c(p, fraction=1.0) == pytest.approx(c_max, rel=1e-12)

    def test_margin_absent_in_extinction(self, preset_51):
        assert uniqueness_margin(preset_51.params) is None
        with pytest.raises(DomainError, match="positive"):
            admissible_c(preset_51.params)

    def test_premises_named(self, preset_51, preset_52):
        with pytest.raises(DomainError, match="alpha - sigma2"):
            lyapunov_recurrence(preset_51.params, 1e-3, State(1.0, 1.0))
        with pytest.raises(DomainError, match="sigma\\*zeta"):
            lyapunov_recurrence(preset_52.params, 1.0, State(1.0, 1.0))

    def test_radial_unboundedness(self, preset_52):
        f = recurrence_test_function(preset_52.params, c=3e-3)
        center = f.value(1.0, 1.0)
        for x, y in [(1e-8, 1.0), (1e8, 1.0), (1.0, 1e8)]:
            assert f.value(x, y) > 100 * center

    def test_generator_below_bound_everywhere(self, preset_52, rng):
        p = preset_52.params
        c = admissible_c(p)
        f = recurrence_test_function(p, c)
        xs = rng.uniform(0.01, 20.0, 300)
        ys = rng.uniform(0.01, 800.0, 300)
        lu = _generator_on_grid(p, f, xs, ys)
        bound = recurrence_bound(p, c, xs, ys)
        assert np.all(lu <= bound + 1e-9)

    def test_recurrence_eval_consistency(self, preset_52):
        p = preset_52.params
        c = admissible_c(p)
        s = State(1.0, 1.0)
        ev = lyapunov_recurrence(p, c, s)
        f = recurrence_test_function(p, c)
        assert ev.value == pytest.approx(f.value(1.0, 1.0), rel=1e-12)
        assert ev.generator_value == pytest.approx(generator_apply(p, f, s), rel=1e-12)
        assert ev.generator_value <= ev.generator_bound

    def test_domain_verified_on_fine_boundary_shell(self, preset_52):
        p = preset_52.params
        dom = recurrence_domain(p)
        f = recurrence_test_function(p, dom.c)
        edges = []
        ys = np.geomspace(dom.y_lo, dom.y_hi, 3000)
        xs = np.geomspace(dom.x_lo, dom.x_hi, 3000)
        edges.append((np.full_like(ys, dom.x_lo), ys))
        edges.append((np.full_like(ys, dom.x_hi), ys))
        edges.append((xs, np.full_like(xs, dom.y_lo)))
        edges.append((xs, np.full_like(xs, dom.y_hi)))
        for X, Y in edges:
            assert np.all(_generator_on_grid(p, f, X, Y) <= -dom.zeta)
        # far field beyond the box is also safe
        far_x = np.geomspace(dom.x_hi, dom.x_hi * 1e4, 500)
        assert np.all(_generator_on_grid(p, f, far_x, np.full_like(far_x, 1.0)) <= -dom.zeta)
        # the box is not vacuous: its interior contains unsafe points
        gx = np.geomspace(dom.x_lo * 1.5, dom.x_hi / 1.5, 200)
        gy = np.geomspace(dom.y_lo * 1.5, dom.y_hi / 1.5, 200)
        X, Y = np.meshgrid(gx, gy, indexing="ij")
        assert np.any(_generator_on_grid(p, f, X, Y) > -dom.zeta)
        assert dom.contains(1.0, 100.0)
