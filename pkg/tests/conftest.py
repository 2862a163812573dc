import json
import os
import sys
import pytest
from unittest.mock import patch

# Get the absolute path of the project root directory
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))

# Add the project root directory to the Python path
sys.path.insert(0, project_root)

# Configure pytest-asyncio
pytest_plugins = ('pytest_asyncio',)

from src.eigensolver import Grid1D, build_hamiltonian, eigen_decompose
from src.potentials import constant, monomial
from src.thick_sets import ThicknessProfile, build_profile_partition, generate_thick


@pytest.fixture
def output_root(tmp_path):
    """Point the output-root override at a temporary directory"""
    root = tmp_path / "results"
    with patch.dict('os.environ', {'THICKLAB_OUTPUT_ROOT': str(root)}):
        yield root


@pytest.fixture
def write_config(tmp_path):
    """Write an experiment config dict to a JSON file and return its path"""
    def _write(data, name="experiment.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path
    return _write


@pytest.fixture(scope="session")
def harmonic_basis():
    """Eigenbasis of -d²/dx² + x² on [-8, 8] with λ² ≤ 30"""
    grid = Grid1D(-8.0, 8.0, 1601)
    return eigen_decompose(build_hamiltonian(monomial(2.0), grid), float(30.0 ** 0.5))


@pytest.fixture(scope="session")
def box_basis():
    """Eigenbasis of -d²/dx² on [0, π] with Dirichlet ends, λ ≤ 4.5"""
    import math
    grid = Grid1D.dirichlet(0.0, math.pi, 799)
    return eigen_decompose(build_hamiltonian(constant(0.0), grid), 4.5)


@pytest.fixture(scope="session")
def power_thick_omega():
    """Generated thick set for ρ(x) = ⟨x⟩⁻¹ with γ = 0.3, τ = 0 and 40 pieces"""
    profile = ThicknessProfile(kind="power", gamma=0.3, L=1.0, tau=0.0, s=1.0)
    return generate_thick(profile, build_profile_partition(profile, 40), seed=0)
