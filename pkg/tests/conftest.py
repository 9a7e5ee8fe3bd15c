import numpy as np
import pytest

from tbgp.potential import make_wall_potential
from tbgp.wannier import wannier_function


@pytest.fixture(scope="session")
def wall_V():
    return make_wall_potential(0.5, np.pi)


@pytest.fixture(scope="session")
def basis05(wall_V):
    return wannier_function(wall_V, 1)


@pytest.fixture(scope="session")
def sweep_report():
    """The full default validation sweep; shared by the acceptance criteria.

    This is the expensive fixture (minutes): four epsilon values, each
    co-evolving the lattice and field systems over t in [0, T0/mu].
    """
    from tbgp.validate import ExperimentConfig, run_validation

    report = run_validation(ExperimentConfig())
    assert not report.failures, f"sweep members failed: {report.failures}"
    return report
