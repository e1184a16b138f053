import numpy as np
import pytest
from hypothesis import settings, strategies as st

from vsic import eigen
from vsic.hamiltonian import CenterParams, StrainTensor

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

finite = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False, allow_infinity=False)
small = st.floats(min_value=-0.5, max_value=0.5, allow_nan=False, allow_infinity=False)


@st.composite
def center_params(draw, nonzero_delta=False):
    da = draw(finite)
    if nonzero_delta and abs(da) < 1.0:
        da = 1.0 if da >= 0 else -1.0
    return CenterParams(da, draw(finite), draw(finite), draw(finite), draw(finite))


@st.composite
def strains(draw):
    return StrainTensor(*(draw(small) for _ in range(6)))


def random_params(rng, scale=10.0):
    return CenterParams(*(rng.uniform(-scale, scale, 5)))


def random_strain(rng, scale=0.5):
    return StrainTensor(*(rng.uniform(-scale, scale, 6)))


def random_hermitian(rng, n=12, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


@pytest.fixture(params=eigen.available_backends())
def backend(request):
    return request.param


# acceptance criteria report: one line per criterion, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
