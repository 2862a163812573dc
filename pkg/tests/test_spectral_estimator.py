import json
import math
from pathlib import Path
import numpy as np
import pytest
from src.spectral_estimator import (
    SpectralEstimatorError,
    aux_regular_check,
    best_constant,
    brute_force_constant,
    free_exponent,
    gram_matrix,
    interlacing_holds,
    regular_set_for,
    scaling_sweep,
)
from src.config import Config
from src.eigensolver import Grid1D, build_hamiltonian, eigen_decompose
from src.potentials import monomial
from src.runner import ExperimentRunner
from src.thick_sets import IntervalSet


@pytest.fixture(scope="module")
def wide_harmonic_basis():
    """Eigenbasis of -d²/dx² + x² on [-8, 8] with λ ≤ 6"""
    return eigen_decompose(build_hamiltonian(monomial(2.0), Grid1D(-8.0, 8.0, 1601)), 6.0)


class TestGramMatrix:
    def test_full_set_gives_identity(self, box_basis):
        """Test that Ω covering the truncation interval gives G = I and K = 1"""
        G = gram_matrix(box_basis, 4.5, IntervalSet(((0.0, math.pi),)))
        assert G.dim == 4
        np.testing.assert_allclose(G.matrix, np.eye(4), atol=1e-8)
        best = best_constant(G)
        assert best.constant == pytest.approx(1.0, abs=1e-8)
        assert not best.flagged


    def test_symmetric_and_bounded(self, harmonic_basis):
        """Test 0 ≤ G ≤ I in the Loewner order"""
        G = gram_matrix(harmonic_basis, 4.0, IntervalSet(((-1.0, 0.5), (2.0, 3.0))))
        np.testing.assert_array_equal(G.matrix, G.matrix.T)
        eigenvalues = np.linalg.eigvalsh(G.matrix)
        assert eigenvalues.min() > 0.0
        assert eigenvalues.max() < 1.0 + 1e-8


    def test_disjoint_set_is_singular(self, box_basis):
        """Test that a set missing the truncation interval gives K = inf"""
        G = gram_matrix(box_basis, 2.5, IntervalSet(((10.0, 11.0),)))
        assert G.singular
        best = best_constant(G)
        assert best.flagged
        assert best.constant == math.inf


    def test_empty_gram(self):
        """Test that an empty Gram matrix is refused"""
        with pytest.raises(SpectralEstimatorError, match="empty"):
            best_constant(np.empty((0, 0)))


class TestBruteForceOracle:
    @pytest.mark.parametrize("lam", [2.5, 3.5])
    def test_matches_eigenvalue_constant(self, box_basis, lam):
        """Test K from λ_min(G) against the sphere sweep"""
        G = gram_matrix(box_basis, lam, IntervalSet(((0.0, 1.0),)))
        assert G.dim in (2, 3)
        assert best_constant(G).constant == pytest.approx(brute_force_constant(G.matrix), rel=1e-6)


    def test_scalar_case(self):
        """Test the one-mode oracle"""
        assert brute_force_constant(np.array([[0.25]])) == pytest.approx(2.0)


    def test_dimension_limit(self):
        """Test that the oracle refuses dimension 4"""
        with pytest.raises(SpectralEstimatorError, match="dimension"):
            brute_force_constant(np.eye(4))


class TestMonotonicity:
    def test_interlacing(self, box_basis):
        """Test λ_min(G_λ) is non-increasing in λ"""
        assert interlacing_holds(box_basis, [1.5, 2.5, 3.5, 4.5], IntervalSet(((0.0, 1.0),)))


    def test_smaller_set_gives_larger_constant(self, harmonic_basis):
        """Test Ω' ⊆ Ω implies K(Ω') ≥ K(Ω)"""
        big = IntervalSet(((-2.0, 0.0), (1.0, 3.0)))
        small = IntervalSet(((-1.5, -0.5), (1.0, 2.0)))
        k_big = best_constant(gram_matrix(harmonic_basis, 4.0, big)).constant
        k_small = best_constant(gram_matrix(harmonic_basis, 4.0, small)).constant
        assert k_small >= k_big


class TestScalingSweep:
    def test_sweep_table_and_fit(self, harmonic_basis):
        """Test a sweep on a regular window set"""
        omega = regular_set_for(harmonic_basis, 1.0, 0.0)
        fit = scaling_sweep(harmonic_basis, [1.2, 2.0, 3.2, 4.0, 5.1], omega, zeta=1.0)
        table = fit.table()
        assert list(table) == ["lambda", "dim", "lambda_min", "K"]
        assert table["dim"] == [1, 2, 5, 8, 13]
        assert all(k >= 1.0 for k in table["K"])
        assert fit.dropped == ()
        assert "lambda^zeta" in fit.summary()["model"]


    def test_sweep_validation(self, harmonic_basis):
        """Test the λ list requirements"""
        omega = IntervalSet(((0.0, 1.0),))
        with pytest.raises(SpectralEstimatorError, match="at least 5"):
            scaling_sweep(harmonic_basis, [1.0, 2.0, 3.0, 4.0], omega, 1.0)
        with pytest.raises(SpectralEstimatorError, match="factor 4"):
            scaling_sweep(harmonic_basis, [3.0, 3.5, 4.0, 4.5, 5.0], omega, 1.0)
        with pytest.raises(SpectralEstimatorError, match="ζ must be positive"):
            scaling_sweep(harmonic_basis, [1.2, 2.0, 3.0, 4.0, 5.0], omega, 0.0)
        with pytest.raises(SpectralEstimatorError, match="below"):
            scaling_sweep(harmonic_basis, [1.2, 2.0, 3.0, 4.0, 6.0], omega, 1.0)


    def test_power_thick_growth_exponent(self, wide_harmonic_basis, power_thick_omega):
        """Test ζ̂ ≤ 1.3 for V = x² on a thick set with γ = 0.3, τ = 0, s = 1 over λ² = 4, 9, 16, 25, 36"""
        fit = scaling_sweep(wide_harmonic_basis, [2.0, 3.0, 4.0, 5.0, 6.0], power_thick_omega, zeta=1.0)
        assert fit.dropped == ()
        assert np.all(np.diff(fit.constants) >= 0.0)
        assert math.isfinite(fit.zeta_hat)
        assert fit.zeta_hat <= 1.3


    def test_all_infinite_constants(self, harmonic_basis):
        """Test that a sweep with no finite constants is refused"""
        with pytest.raises(SpectralEstimatorError, match="finite constants"):
            scaling_sweep(harmonic_basis, [1.2, 2.0, 3.0, 4.0, 5.0], IntervalSet(((100.0, 101.0),)), 1.0)


    def test_free_exponent(self):
        """Test ζ̂ recovers the exponent of log K = 2λ^{3/2}"""
        lambdas = np.array([1.5, 2.0, 3.0, 4.0, 5.0])
        assert free_exponent(lambdas, np.exp(2.0 * lambdas ** 1.5)) == pytest.approx(1.5)
        assert math.isnan(free_exponent(lambdas, np.ones(5)))


    def test_aux_regular_reference(self, harmonic_basis):
        """Test the regular-window sweep with its reference curve"""
        omega = regular_set_for(harmonic_basis, 1.0, 0.0)
        report = aux_regular_check(harmonic_basis, [1.2, 2.0, 3.0, 4.0, 5.0], omega, 2.0, 2.0)
        assert report.reference_exponent == 1.0
        assert report.fit.with_log
        np.testing.assert_allclose(report.reference_curve[0], math.exp(1.2 * (1.0 + math.log(2.2))))
        with pytest.raises(SpectralEstimatorError):
            aux_regular_check(harmonic_basis, [1.2, 2.0, 3.0, 4.0, 5.0], omega, 2.0, 1.0)


BANDS = Path(__file__).parent / "fixtures" / "scaling_bands.json"


class TestCalibratedBands:
    @pytest.mark.skipif(not BANDS.exists(), reason="run scripts/calibrate_bands.py to pin the bands")
    def test_sweep_matches_pinned_band(self, output_root):
        """Test ζ̂ of each committed sweep against its pinned value within 10%"""
        runner = ExperimentRunner(Config())
        for name, entry in json.loads(BANDS.read_text()).items():
            outcome = runner.run(Path(__file__).resolve().parents[1] / entry["config"])
            fit = json.loads((outcome.directory / "fit.json").read_text())
            assert fit["zeta_hat"] == pytest.approx(entry["zeta_hat"], rel=0.1), name
