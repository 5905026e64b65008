import pytest

try:
    from hypothesis import settings

    settings.register_profile("suite", deadline=None)
    settings.load_profile("suite")
except ImportError:  # pragma: no cover - hypothesis is a test dependency
    pass

from lrdblocks.hermite import hermite_coefficients, spec_from_coefficients


@pytest.fixture(scope="session")
def z_spec():
    """Identity transform: J_1 = 1, ranks (1, inf, inf)."""
    return hermite_coefficients(lambda z: z)


@pytest.fixture(scope="session")
def zh_spec():
    """z + 0.5 z^2: J = (0.5, 1, 1), ranks (1, 2, 1)."""
    return spec_from_coefficients([0.5, 1.0, 1.0])


@pytest.fixture(scope="session")
def h2_spec():
    """Pure second Hermite polynomial z^2 - 1: ranks (2, inf, inf)."""
    return spec_from_coefficients([0.0, 0.0, 2.0])
