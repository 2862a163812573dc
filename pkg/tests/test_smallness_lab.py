import math
import numpy as np
import pytest
from src.potentials import monomial
from src.smallness_lab import (
    SmallnessError,
    SmallnessGeometry,
    SmallnessSample,
    check_inequality,
    collect_samples,
    piece_constants,
    ellipticity_proxy,
    fit_alpha,
    propagation_reference,
    samples_table,
    theoretical_band,
)
from src.thick_sets import IntervalSet, build_partition


@pytest.fixture(scope="module")
def omega_line():
    return IntervalSet(((0.2, 0.4),))


def _sample(inner, omega, outer):
    return SmallnessSample(inner, omega, outer, 0.2, math.e, 1.0, 0)


class TestGeometry:
    def test_regions(self):
        """Test D₁ and D₂ placement in physical coordinates"""
        g = SmallnessGeometry(origin=1.0, scale=2.0)
        assert g.inner_x == (1.0, 1.5)
        assert g.outer_x == (0.5, 2.0)
        assert g.inner_half_height == 0.25
        assert g.outer_half_height == 0.75


    def test_invalid_scale(self):
        """Test that the scale must be positive"""
        with pytest.raises(SmallnessError):
            SmallnessGeometry(scale=0.0)


    def test_ellipticity_proxy(self):
        """Test Λ = exp(√ sup V) over [-1, 2] for V = x²"""
        assert ellipticity_proxy(monomial(2.0), SmallnessGeometry()) == pytest.approx(math.e ** 2)


class TestCollectSamples:
    def test_sup_ordering(self, harmonic_basis, omega_line):
        """Test sup_ω ≤ sup_D₂ and sup_D₁ ≤ sup_D₂ for every sample"""
        samples = collect_samples(harmonic_basis, [2.0, 3.0], omega_line, SmallnessGeometry(), 20, seed=5)
        assert len(samples) == 40
        for s in samples:
            assert 0.0 < s.sup_omega <= s.sup_outer
            assert 0.0 < s.sup_inner <= s.sup_outer
            assert s.omega_measure == pytest.approx(0.2)
        assert {s.lam for s in samples} == {2.0, 3.0}


    def test_seeded(self, harmonic_basis, omega_line):
        """Test that the same seed reproduces the samples"""
        a = collect_samples(harmonic_basis, [3.0], omega_line, SmallnessGeometry(), 5, seed=9)
        b = collect_samples(harmonic_basis, [3.0], omega_line, SmallnessGeometry(), 5, seed=9)
        assert a == b


    def test_sample_index(self, harmonic_basis, omega_line):
        """Test that each sample records its index among the draws for its λ"""
        samples = collect_samples(harmonic_basis, [2.0, 3.0], omega_line, SmallnessGeometry(), 4, seed=5)
        assert [s.sample for s in samples] == [0, 1, 2, 3, 0, 1, 2, 3]
        assert [s.lam for s in samples] == [2.0] * 4 + [3.0] * 4


    def test_invalid_omega(self, harmonic_basis):
        """Test that ω must be a subset of [0, 1] with measure below ½"""
        with pytest.raises(SmallnessError, match="1/2"):
            collect_samples(harmonic_basis, [3.0], IntervalSet(((0.0, 0.6),)), SmallnessGeometry(), 5, 0)
        with pytest.raises(SmallnessError, match="subset"):
            collect_samples(harmonic_basis, [3.0], IntervalSet(((0.9, 1.2),)), SmallnessGeometry(), 5, 0)


    def test_region_outside_field(self, harmonic_basis, omega_line):
        """Test that D₂ must lie inside the computed field"""
        with pytest.raises(SmallnessError, match="exits the computed field"):
            collect_samples(harmonic_basis, [3.0], omega_line, SmallnessGeometry(origin=7.0), 5, 0)


    def test_empty_lambda_list(self, harmonic_basis, omega_line):
        """Test that a cutoff list is required"""
        with pytest.raises(SmallnessError, match="nonempty"):
            collect_samples(harmonic_basis, [], omega_line, SmallnessGeometry(), 5, 0)


class TestFitAlpha:
    def test_fit_has_no_violations(self, harmonic_basis, omega_line):
        """Test that the fitted (α, C) holds for every sample"""
        samples = collect_samples(harmonic_basis, [2.0, 3.0], omega_line, SmallnessGeometry(), 20, seed=5)
        report = fit_alpha(samples)
        assert not report.infeasible
        assert not report.degenerate
        assert 0.0 < report.alpha < 1.0
        assert report.constant >= 1.0
        assert report.violations == 0
        assert np.all(check_inequality(samples, report.alpha, report.constant) >= -1e-12)


    def test_budget_picks_largest_alpha(self):
        """Test that the largest α with C(α) within budget is returned"""
        samples = [_sample(1.0, 0.5, 2.0) for _ in range(30)]
        # log C(α) = max((2α - 1) log 2, 0) stays below log 10, so α is the top of the grid
        report = fit_alpha(samples, c_budget=10.0)
        assert report.alpha == pytest.approx(0.999)
        assert report.constant == pytest.approx(2.0 ** 0.998)


    def test_too_few_samples(self):
        """Test the minimum sample count"""
        with pytest.raises(SmallnessError, match="at least 30"):
            fit_alpha([_sample(1.0, 0.5, 2.0)] * 29)


    def test_degenerate_samples(self):
        """Test equal sups give the degenerate report"""
        report = fit_alpha([_sample(1.0, 1.0, 1.0)] * 30)
        assert report.degenerate
        assert report.alpha == 0.5
        assert report.constant == 1.0


    def test_vanishing_omega_sup_is_infeasible(self):
        """Test that sup_ω = 0 with sup_inner > 0 has no finite constant"""
        samples = [_sample(1.0, 0.5, 2.0)] * 29 + [_sample(1.0, 0.0, 2.0)]
        report = fit_alpha(samples)
        assert report.infeasible
        assert math.isnan(report.alpha)
        assert report.constant == math.inf


class TestReferenceCurves:
    def test_theoretical_band(self):
        """Test α and C bands for Λ = 2 and |ω| = 0.1"""
        band = theoretical_band(2.0, 0.1, 0.5, 1.0)
        log_term = math.log(0.1) ** 2
        assert band.alpha_low == pytest.approx(math.exp(-4.0) / log_term)
        assert band.alpha_high == pytest.approx(math.exp(-2.0) / log_term)
        assert band.c_low == pytest.approx(math.exp(2.0))
        assert band.c_high == pytest.approx(math.exp(4.0))
        assert band.contains_alpha(band.alpha_high)
        assert not band.contains_alpha(0.9)


    def test_band_validation(self):
        """Test band argument validation"""
        with pytest.raises(SmallnessError):
            theoretical_band(2.0, 0.1, 1.0, 0.5)
        with pytest.raises(SmallnessError):
            theoretical_band(1.0, 0.1, 0.5, 1.0)
        with pytest.raises(SmallnessError):
            theoretical_band(2.0, 0.5, 0.5, 1.0)


    def test_propagation_reference(self):
        """Test exp(d·exp(d·C₀^{1/2})) and its L² form"""
        ref = propagation_reference(0.0, 1.0, 0.25, 0.5)
        assert ref.sup_constant == pytest.approx(math.e)
        assert ref.l2_constant == pytest.approx(2.0 * math.e * 8.0 ** 0.25)
        assert propagation_reference(1e4, 1.0, 0.25, 0.5).sup_constant == math.inf


    def test_piece_constants(self):
        """Test aₙ = |Iₙ|⁻¹ and the exponent lower bound"""
        constants = piece_constants(build_partition(1.0, 1.0, 5), 2, 0.5,
                                    potential=monomial(2.0), lam=3.0)
        assert constants.scale == pytest.approx(2.0)
        assert constants.alpha_lower == pytest.approx(1.0 / math.log(0.5) ** 2)
        assert constants.scale_bound_shape == pytest.approx(math.sqrt(10.0))
        with pytest.raises(SmallnessError):
            piece_constants(build_partition(1.0, 1.0, 5), 2, 1.5)


    def test_samples_table_columns(self):
        """Test the samples.csv columns"""
        table = samples_table([_sample(1.0, 0.5, 2.0)] * 3)
        assert list(table) == ["sup_inner", "sup_omega", "sup_outer", "omega_measure",
                               "ellipticity", "lambda", "sample"]
        assert all(len(column) == 3 for column in table.values())
