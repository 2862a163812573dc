import math
import numpy as np
import pytest
from src.eigensolver import Grid1D, build_hamiltonian, eigen_decompose, observed_order
from src.ghost_lift import (
    LiftError,
    LiftedField,
    energy_bounds,
    enlarged_piece,
    lift,
    rescale_to_unit,
    rescaled_potential_sup,
    residual_divergence,
    residual_nondivergence,
    solve_aux_ode,
)
from src.potentials import constant, monomial, oscillating_example
from src.thick_sets import build_partition


@pytest.fixture(scope="module")
def shifted_box_basis():
    """Eigenbasis of -d²/dx² + 1 on [0, π], λ² ∈ {2, 5}"""
    grid = Grid1D.dirichlet(0.0, math.pi, 399)
    return eigen_decompose(build_hamiltonian(constant(1.0), grid), 2.5)


class TestLift:
    def test_cosh_lift_of_sine_mode(self, box_basis):
        """Test Φ(x, y) = cosh(y)·φ₁(x) for the first sine mode"""
        element = box_basis.element([1.0], lam=1.5)
        lifted = lift(element, 1.0, 21)
        exact = np.outer(math.sqrt(2.0 / math.pi) * np.sin(lifted.x), np.cosh(lifted.y))
        np.testing.assert_allclose(lifted.values, exact, atol=1e-4)
        assert lifted.values.shape == (799, 21)
        assert lifted.hy == pytest.approx(0.1)


    def test_parity_is_exact(self, box_basis):
        """Test that cosh lifts are even and sinh lifts odd in y"""
        element = box_basis.element([1.0, -0.5, 0.25], lam=3.5)
        even = lift(element, 0.5, 11, kind="cosh")
        np.testing.assert_array_equal(even.values, even.values[:, ::-1])
        np.testing.assert_allclose(even.center_row, element.values(), rtol=1e-13, atol=1e-13)

        odd = lift(element, 0.5, 11, kind="sinh")
        np.testing.assert_array_equal(odd.values, -odd.values[:, ::-1])
        assert np.all(odd.center_row == 0.0)


    def test_overflow_guard(self, box_basis):
        """Test that λₖ·y_max above the guard is refused"""
        element = box_basis.element([0.0, 0.0, 0.0, 1.0], lam=4.5)
        with pytest.raises(LiftError, match="Overflow guard"):
            lift(element, 20.0, 21)
        assert lift(element, 20.0, 21, overflow_guard=100.0).values.shape == (799, 21)


    def test_invalid_arguments(self, box_basis):
        """Test lift argument validation"""
        element = box_basis.element([1.0], lam=1.5)
        with pytest.raises(LiftError, match="odd"):
            lift(element, 1.0, 20)
        with pytest.raises(LiftError):
            lift(element, 0.0, 21)
        with pytest.raises(LiftError, match="Unknown lift kind"):
            lift(element, 1.0, 21, kind="tanh")


class TestResiduals:
    def test_nondivergence_residual_is_second_order(self, box_basis):
        """Test that the 5-point residual shrinks like h_y²"""
        element = box_basis.element([1.0, 0.5], lam=2.5)
        coarse = residual_nondivergence(lift(element, 1.0, 21), constant(0.0))
        fine = residual_nondivergence(lift(element, 1.0, 41), constant(0.0))
        assert coarse.relative < 1e-2
        assert fine.relative < coarse.relative
        assert observed_order([coarse.relative, fine.relative])[0] == pytest.approx(2.0, abs=0.1)


    def test_zero_field_is_degenerate(self, box_basis):
        """Test that a zero field reports 0 with the degenerate flag"""
        element = box_basis.element([0.0], lam=1.5)
        report = residual_nondivergence(lift(element, 1.0, 21), constant(0.0))
        assert report.absolute < 1e-8
        assert report.degenerate


    def test_divergence_form_residual(self, shifted_box_basis):
        """Test the divergence-form residual with the auxiliary weight for V ≡ 1"""
        element = shifted_box_basis.element([1.0, 0.5], lam=2.5)
        lifted = lift(element, 0.5, 21)
        aux = solve_aux_ode(constant(1.0), 0.0, math.pi, 4001)
        report = residual_divergence(lifted, aux)
        assert report.relative < 1e-2
        assert not report.degenerate


    def test_divergence_needs_covering_interval(self, shifted_box_basis):
        """Test that the auxiliary interval must cover the field"""
        element = shifted_box_basis.element([1.0, 0.0], lam=2.5)
        aux = solve_aux_ode(constant(1.0), 0.0, 1.0)
        with pytest.raises(LiftError, match="does not cover"):
            residual_divergence(lift(element, 0.5, 21), aux)


class TestAuxOde:
    def test_constant_potential_midpoint(self):
        """Test φ_aux(½) = e/cosh(½) for V ≡ 1 on [0, 1]"""
        aux = solve_aux_ode(constant(1.0), 0.0, 1.0)
        assert aux.boundary_value == pytest.approx(math.e)
        assert float(aux(np.array(0.5))) == pytest.approx(math.e / math.cosh(0.5), rel=1e-6)
        assert aux.bounds_hold()


    def test_zero_potential_gives_ones(self):
        """Test that V ≡ 0 gives the constant solution 1"""
        aux = solve_aux_ode(constant(0.0), -1.0, 1.0)
        np.testing.assert_array_equal(aux(np.array([-1.0, 0.0, 1.0])), [1.0, 1.0, 1.0])
        assert aux.boundary_value == 1.0


    def test_evaluation_outside_interval(self):
        """Test that the auxiliary solution is only defined on [a, b]"""
        aux = solve_aux_ode(monomial(2.0), 0.0, 1.0)
        with pytest.raises(LiftError):
            aux(np.array([1.5]))
        with pytest.raises(LiftError, match="empty"):
            solve_aux_ode(monomial(2.0), 1.0, 1.0)


class TestEnergyAndRescaling:
    def test_energy_bounds_hold(self, box_basis):
        """Test the H¹ energy of a sinh lift against its two-sided bound"""
        element = box_basis.element([1.0, 0.5, -0.25], lam=3.5)
        lifted = lift(element, 0.5, 41, kind="sinh")
        bounds = energy_bounds(lifted, element)
        assert bounds.holds
        assert bounds.lower < bounds.energy < bounds.upper
        with pytest.raises(LiftError, match="sinh"):
            energy_bounds(lift(element, 0.5, 41), element)


    def test_rescaled_window(self, harmonic_basis):
        """Test restriction to D₃ around a piece"""
        assert enlarged_piece((1.0, 2.0)) == (-1.0, 4.0)
        element = harmonic_basis.element(np.ones(5), lam=3.0)
        lifted = lift(element, 2.5, 21)
        rescaled = rescale_to_unit(lifted, monomial(2.0), (1.0, 2.0))
        assert rescaled.scale == 1.0
        assert rescaled.y.size == 21
        assert rescaled.x[0] >= -1.0 - 1e-9 and rescaled.x[-1] <= 4.0 + 1e-9
        assert rescaled.v_sup == pytest.approx(16.0)
        assert rescaled.within_bound is None
        with pytest.raises(LiftError, match="exits the field"):
            rescale_to_unit(lifted, monomial(2.0), (6.0, 7.0))


    def test_rescaled_potential_within_growth_bound(self):
        """Test a⁻² sup V over the enlarged piece against the growth bound"""
        v_sup, bound = rescaled_potential_sup(oscillating_example(1.0, 2.0), build_partition(1.0, 1.0, 5), 2)
        assert bound is not None
        assert 0.0 < v_sup <= bound


class TestDivergenceIdentities:
    def test_unit_weight_matches_laplacian_residual(self, box_basis):
        """Test that φ_aux ≡ 1 reproduces the V ≡ 0 residual exactly"""
        element = box_basis.element([1.0, 0.5], lam=2.5)
        lifted = lift(element, 1.0, 21)
        aux = solve_aux_ode(constant(0.0), 0.0, math.pi)
        plain = residual_nondivergence(lifted, constant(0.0))
        weighted = residual_divergence(lifted, aux)
        assert weighted.relative == plain.relative
        np.testing.assert_array_equal(weighted.residual, plain.residual)


    def test_field_equal_to_weight_has_zero_residual(self):
        """Test that Φ = φ_aux gives Φ/φ_aux ≡ 1 and a vanishing residual"""
        aux = solve_aux_ode(monomial(2.0), 0.0, 1.0, 101)
        y = np.linspace(-0.5, 0.5, 11)
        field = LiftedField(x=aux.x, y=y, values=np.outer(aux.values, np.ones_like(y)), kind="cosh")
        report = residual_divergence(field, aux)
        assert report.absolute < 1e-8
        assert report.degenerate
