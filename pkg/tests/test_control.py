import math
import numpy as np
import pytest
from src.control import (
    ControlConfig,
    ControlError,
    closed_form_gramian,
    control_gramian,
    cost_law_sweep,
    heat_propagate,
    lebeau_robbiano_schedule,
    observability_check,
    observability_constant,
    run_lr_control,
    synthesize_hum_control,
)
from src.control.heat import gauss_nodes, solve_gramian
from src.control.lebeau_robbiano import linear_fit, stage_count
from src.spectral_estimator import regular_set_for
from src.thick_sets import IntervalSet

FULL_BOX = IntervalSet(((0.0, math.pi),))


@pytest.fixture(scope="module")
def regular_omega(harmonic_basis):
    return regular_set_for(harmonic_basis, 1.0, 0.0)


def _harmonic_state(basis, lam=3.0, seed=0):
    count = basis.indices_below(lam).size
    b = np.random.default_rng(seed).standard_normal(count)
    return basis.element(b / np.linalg.norm(b), lam)


class TestControlConfig:
    def test_zeta_must_stay_below_two(self):
        """Test the Lebeau-Robbiano exponent diagnostic"""
        with pytest.raises(ControlError, match="Lebeau-Robbiano exponent must satisfy ζ<2"):
            ControlConfig(T=1.0, cutoff=3.0, omega=FULL_BOX, zeta=2.0)
        with pytest.raises(ControlError, match="positive"):
            ControlConfig(T=1.0, cutoff=3.0, omega=FULL_BOX, zeta=0.0)


    def test_invalid_values(self):
        """Test horizon, quadrature and constant validation"""
        with pytest.raises(ControlError):
            ControlConfig(T=0.0, cutoff=3.0, omega=FULL_BOX)
        with pytest.raises(ControlError, match="8 nodes"):
            ControlConfig(T=1.0, cutoff=3.0, omega=FULL_BOX, m=4)
        with pytest.raises(ControlError):
            ControlConfig(T=1.0, cutoff=3.0, omega=FULL_BOX, alpha0=0.5)
        with pytest.raises(ControlError):
            ControlConfig(T=1.0, cutoff=3.0, omega=FULL_BOX, max_stages=0)


    def test_with_horizon(self):
        """Test replacing the horizon keeps the other fields"""
        cfg = ControlConfig(T=1.0, cutoff=3.0, omega=FULL_BOX, zeta=1.5)
        shorter = cfg.with_horizon(0.25)
        assert shorter.T == 0.25
        assert shorter.zeta == 1.5


class TestSemigroup:
    def test_composition_and_contraction(self, box_basis):
        """Test e^{-Hs}e^{-Ht} = e^{-H(s+t)} and ‖e^{-Ht}u‖ ≤ ‖u‖"""
        u = box_basis.element([1.0, -2.0, 0.5, 0.25])
        twice = heat_propagate(heat_propagate(u, 0.3), 0.2)
        once = heat_propagate(u, 0.5)
        np.testing.assert_allclose(twice.coefficients, once.coefficients, rtol=1e-14, atol=1e-300)
        assert once.norm() <= u.norm()
        with pytest.raises(ControlError):
            heat_propagate(u, -1.0)


    def test_observability_constant(self):
        """Test C_obs = κ₁α₀^{κ₂} exp(κ₃α₁^{2/(2-ζ)}T^{-ζ/(2-ζ)})"""
        cfg = ControlConfig(T=1.0, cutoff=3.0, omega=FULL_BOX, zeta=1.0)
        assert observability_constant(cfg) == pytest.approx(math.e)
        assert observability_constant(cfg, 0.5) == pytest.approx(math.e ** 2)
        scaled = ControlConfig(T=1.0, cutoff=3.0, omega=FULL_BOX, zeta=1.0, alpha0=2.0, kappa1=3.0, kappa2=2.0)
        assert observability_constant(scaled) == pytest.approx(12.0 * math.e)


class TestGramian:
    def test_gauss_nodes(self):
        """Test composite Gauss-Legendre nodes on [0, T]"""
        nodes, weights = gauss_nodes(2.0, 128)
        assert nodes.size == 128
        assert weights.sum() == pytest.approx(2.0)
        assert 0.0 < nodes.min() and nodes.max() < 2.0
        assert np.sum(weights * nodes ** 3) == pytest.approx(4.0)


    def test_quadrature_matches_closed_form(self, harmonic_basis, regular_omega):
        """Test the quadrature Gramian against Gⱼₖ(1 - e^{-(μⱼ+μₖ)T})/(μⱼ+μₖ)"""
        gramian = control_gramian(harmonic_basis, 3.0, regular_omega, 1.0)
        assert gramian.converged
        exact = closed_form_gramian(gramian.gram, gramian.frequencies, 1.0)
        np.testing.assert_allclose(gramian.matrix, exact, atol=1e-9 * np.abs(exact).max())
        eigenvalues = np.linalg.eigvalsh(gramian.matrix)
        assert eigenvalues.min() >= -1e-12 * eigenvalues.max()


    def test_singular_gramian_is_flagged(self):
        """Test that a rank-deficient Gramian falls back to least squares"""
        solve = solve_gramian(np.diag([1.0, 0.0]), np.array([1.0, 0.0]))
        assert solve.flagged
        np.testing.assert_allclose(solve.q, [1.0, 0.0])


class TestHumControl:
    def test_single_mode_full_interval(self, box_basis):
        """Test the HUM cost of one mode on the full interval against its closed form"""
        u0 = box_basis.element([1.0], lam=1.5)
        cfg = ControlConfig(T=1.0, cutoff=1.5, omega=FULL_BOX)
        result = synthesize_hum_control(u0, cfg)
        mu = float(box_basis.eigenvalues[0])
        expected_sq = math.exp(-2.0 * mu) * 2.0 * mu / (1.0 - math.exp(-2.0 * mu))
        assert result.cost ** 2 == pytest.approx(expected_sq, rel=1e-8)
        assert result.residual <= 1e-8
        assert result.exact_residual <= 1e-8
        assert not result.flagged


    def test_zero_state_needs_no_control(self, box_basis):
        """Test that u₀ = 0 gives h = 0, cost 0 and residual 0"""
        u0 = box_basis.element([0.0, 0.0], lam=2.5)
        result = synthesize_hum_control(u0, ControlConfig(T=1.0, cutoff=2.5, omega=IntervalSet(((0.5, 1.5),))))
        assert result.cost == 0.0
        assert result.residual == 0.0
        assert not np.any(result.control)


    def test_thick_set_reaches_zero(self, harmonic_basis, regular_omega):
        """Test null control on a regular window set"""
        u0 = _harmonic_state(harmonic_basis)
        cfg = ControlConfig(T=1.0, cutoff=3.0, omega=regular_omega)
        result = synthesize_hum_control(u0, cfg)
        assert result.residual <= 1e-8
        assert math.isfinite(result.cost) and result.cost > 0.0

        outside = ~regular_omega.contains(result.x)
        assert np.all(result.control[:, outside] == 0.0)

        gramian = control_gramian(harmonic_basis, 3.0, regular_omega, 1.0)
        assert observability_check(result, gramian, u0.coefficients)


    def test_power_thick_set_residual(self, harmonic_basis, power_thick_omega):
        """Test HUM with λ² ≤ 25 on a generated thick set reaches a residual below 1e-8"""
        u0 = _harmonic_state(harmonic_basis, lam=5.0)
        cfg = ControlConfig(T=1.0, cutoff=5.0, omega=power_thick_omega)
        result = synthesize_hum_control(u0, cfg)
        assert u0.coefficients.size == 13
        assert not result.flagged
        assert result.residual <= 1e-8
        assert result.exact_residual <= 1e-6
        assert math.isfinite(result.cost) and result.cost > 0.0


    def test_state_above_cutoff(self, harmonic_basis, regular_omega):
        """Test that the initial state must live below the control cutoff"""
        u0 = _harmonic_state(harmonic_basis, lam=4.0)
        with pytest.raises(ControlError, match="above the control cutoff"):
            synthesize_hum_control(u0, ControlConfig(T=1.0, cutoff=3.0, omega=regular_omega))


class TestSchedule:
    def test_dyadic_stages(self):
        """Test stage starts, lengths, windows and cutoffs"""
        cfg = ControlConfig(T=1.0, cutoff=5.0, omega=FULL_BOX, lambda_base=1.0)
        assert stage_count(1.0, 1.0, 5.0, 1e-10) == 7
        schedule = lebeau_robbiano_schedule(cfg)
        assert len(schedule.stages) == 8
        first, second, third, fourth = schedule.stages[:4]
        assert (first.start, first.length, first.control_window, first.cutoff) == (0.0, 0.5, 0.25, 1.0)
        assert (second.start, second.length, second.control_window, second.cutoff) == (0.5, 0.25, 0.125, 2.0)
        assert third.cutoff == 4.0
        assert fourth.cutoff == 5.0
        assert schedule.c_obs == pytest.approx(math.e)


    def test_truncated_and_single_stage(self):
        """Test max_stages truncation and the single-stage plan"""
        cfg = ControlConfig(T=1.0, cutoff=5.0, omega=FULL_BOX, lambda_base=1.0, max_stages=3)
        assert len(lebeau_robbiano_schedule(cfg).stages) == 3
        single = lebeau_robbiano_schedule(ControlConfig(T=2.0, cutoff=5.0, omega=FULL_BOX, max_stages=1),
                                          lambda_base=1.0)
        assert len(single.stages) == 1
        stage = single.stages[0]
        assert (stage.start, stage.length, stage.control_window, stage.cutoff) == (0.0, 2.0, 2.0, 5.0)


    def test_base_frequency_required(self):
        """Test that a stage base frequency is needed"""
        with pytest.raises(ControlError, match="base frequency"):
            lebeau_robbiano_schedule(ControlConfig(T=1.0, cutoff=5.0, omega=FULL_BOX))


class TestStagedControl:
    def test_single_stage_equals_hum(self, harmonic_basis, regular_omega):
        """Test that one stage covering every mode reproduces single-shot HUM"""
        u0 = _harmonic_state(harmonic_basis, seed=3)
        cfg = ControlConfig(T=1.0, cutoff=3.0, omega=regular_omega, max_stages=1)
        staged = run_lr_control(u0, cfg)
        hum = synthesize_hum_control(u0, cfg)
        assert staged.cost == pytest.approx(hum.cost, rel=1e-10)
        assert len(staged.stages) == 1


    def test_staged_residual(self, harmonic_basis, regular_omega):
        """Test the staged plan drives the truncated state to zero"""
        u0 = _harmonic_state(harmonic_basis, seed=4)
        result = run_lr_control(u0, ControlConfig(T=1.0, cutoff=3.0, omega=regular_omega))
        assert result.residual <= 1e-6
        assert result.exact_residual <= 1e-6
        assert not result.flagged
        assert result.skipped_stages == 0
        assert result.stages[0].dim == 1
        assert result.times.size == result.control.shape[0]


class TestCostLaw:
    def test_single_mode_cost_law(self, box_basis):
        """Test monotone closed-form costs and the T⁻¹ regressor for ζ = 1"""
        u0 = box_basis.element([1.0], lam=1.5)
        cfg = ControlConfig(T=1.0, cutoff=1.5, omega=FULL_BOX, zeta=1.0)
        horizons = [0.25, 0.5, 1.0, 2.0]
        report = cost_law_sweep(u0, cfg, horizons)
        np.testing.assert_allclose(report.regressor, 1.0 / np.array(horizons))
        assert report.monotone
        assert report.slope > 0.0
        mu = float(box_basis.eigenvalues[0])
        expected = np.sqrt(2.0 * mu / np.expm1(2.0 * mu * np.array(horizons)))
        np.testing.assert_allclose(report.costs, expected, rtol=1e-7)
        assert list(report.table()) == ["T", "cost", "C_obs"]


    def test_single_mode_r_squared(self, box_basis):
        """Test R² over T = 1, ½, ¼, ⅛ against the fit of the analytic single-mode curve"""
        u0 = box_basis.element([1.0], lam=1.5)
        horizons = np.array([1.0, 0.5, 0.25, 0.125])
        report = cost_law_sweep(u0, ControlConfig(T=1.0, cutoff=1.5, omega=FULL_BOX), horizons)
        mu = float(box_basis.eigenvalues[0])
        analytic = np.sqrt(2.0 * mu / np.expm1(2.0 * mu * np.sort(horizons)))
        _, _, expected = linear_fit(1.0 / np.sort(horizons), np.log(analytic))
        assert report.r_squared == pytest.approx(expected, rel=1e-6)
        # log cost is asymptotically -½ log 2T here, so the 1/T line fits only loosely
        assert report.r_squared == pytest.approx(0.856, abs=0.005)


    def test_power_thick_cost_is_monotone(self, harmonic_basis, power_thick_omega):
        """Test single-shot costs on a generated thick set fall as the horizon grows"""
        u0 = _harmonic_state(harmonic_basis, lam=2.9)
        cfg = ControlConfig(T=1.0, cutoff=2.9, omega=power_thick_omega)
        report = cost_law_sweep(u0, cfg, [1.0, 0.5, 0.25, 0.125])
        assert report.monotone
        assert not any(report.flags)
        assert report.slope > 0.0
        assert 0.0 < report.r_squared <= 1.0
        np.testing.assert_array_equal(report.horizons, [0.125, 0.25, 0.5, 1.0])


    def test_horizon_requirements(self, box_basis):
        """Test the horizon count and span checks"""
        u0 = box_basis.element([1.0], lam=1.5)
        cfg = ControlConfig(T=1.0, cutoff=1.5, omega=FULL_BOX)
        with pytest.raises(ControlError, match="at least 4"):
            cost_law_sweep(u0, cfg, [0.5, 1.0, 2.0])
        with pytest.raises(ControlError, match="factor 8"):
            cost_law_sweep(u0, cfg, [0.5, 1.0, 2.0, 3.0])


    def test_zero_state_cost(self, box_basis):
        """Test that a zero initial state cannot be fitted"""
        u0 = box_basis.element([0.0], lam=1.5)
        cfg = ControlConfig(T=1.0, cutoff=1.5, omega=FULL_BOX)
        with pytest.raises(ControlError, match="zero cost"):
            cost_law_sweep(u0, cfg, [0.25, 0.5, 1.0, 2.0])


    def test_linear_fit(self):
        """Test the least-squares line and R²"""
        x = np.array([1.0, 2.0, 3.0, 4.0])
        slope, intercept, r2 = linear_fit(x, 2.0 * x + 1.0)
        assert slope == pytest.approx(2.0)
        assert intercept == pytest.approx(1.0)
        assert r2 == pytest.approx(1.0)
