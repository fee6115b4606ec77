import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hydrostokes.domain import Domain
from hydrostokes.field import PhysicalField

settings.register_profile(
    "default", deadline=None, max_examples=20,
    suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow],
)
settings.load_profile("default")


def full(domain: Domain, values) -> np.ndarray:
    """Broadcast a mesh expression to the full grid shape."""
    return np.broadcast_to(values, domain.shape).astype(float)


def field_of(domain: Domain, *components) -> PhysicalField:
    return PhysicalField(np.stack([full(domain, c) for c in components]), domain)


@pytest.fixture
def small_domain():
    return Domain(Nx=16, Ny=16, Nz=17)


@pytest.fixture
def report_line(capsys):
    """Print one line to the terminal even when output is captured."""

    def emit(text: str) -> None:
        with capsys.disabled():
            print(text)

    return emit
