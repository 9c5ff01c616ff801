import pytest

from itpencil import MediumProfile, PencilKind, solve_spectrum


@pytest.fixture(scope="session")
def h1_solution():
    """Helmholtz q=1 clamped solve on the reference grid, shared across tests."""
    profile = MediumProfile.constant(PencilKind.HELMHOLTZ, 1.0)
    return solve_spectrum(profile, 0.0, 1.0, 96, (0, 1))
