import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hybridosc import ModelParams, SectorKind, SymMat2, builtin_scenarios

settings.register_profile(
    "ci",
    derandomize=True,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def equal_mass_params():
    return ModelParams(m_q=2.0, m_x=2.0, k=1.0, hbar=1.0, sector=SectorKind.HYBRID)


@pytest.fixture(scope="session")
def fig4_state():
    return builtin_scenarios()["fig4"].initial_state()


@pytest.fixture(scope="session")
def fig4_trajectory():
    return builtin_scenarios()["fig4"].run()


@pytest.fixture(scope="session")
def quantum_trajectory():
    return builtin_scenarios()["fig2-quantum"].run()


def random_spd(rng: np.random.Generator) -> SymMat2:
    """Random well-conditioned SPD 2x2 for property tests."""
    lo, hi = sorted(rng.uniform(0.1, 10.0, size=2))
    th = rng.uniform(-np.pi, np.pi)
    c, s = np.cos(th), np.sin(th)
    R = np.array([[c, -s], [s, c]])
    return SymMat2.from_array(R @ np.diag([lo, hi]) @ R.T)
