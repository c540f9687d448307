"""
Shared fixtures for the CubicLab test suite
"""

import numpy as np
import pytest

from cubiclab_api.cubic_form import CubicForm
from cubiclab_api.form_catalog import cartan_cubic, normalize_munzner, random_form, u5_determinant
from cubiclab_api.idempotent_engine import newton_search
from cubiclab_api.peirce_lab import eiconal_scaled

CARTAN_DIMENSIONS = (1, 2, 4, 8)


@pytest.fixture(scope="session")
def cube_form():
    """u(x) = x^3 on R; its only nonzero idempotent is 1/6"""
    return CubicForm.from_monomials(1, [((0, 0, 0), 1.0)], label="x^3")


@pytest.fixture(scope="session")
def zero_form():
    return CubicForm.from_monomials(3, [], label="zero")


@pytest.fixture(scope="session")
def random5():
    return random_form(5, 1)


@pytest.fixture(scope="session")
def cartan_forms():
    return {d: cartan_cubic(d) for d in CARTAN_DIMENSIONS}


@pytest.fixture(scope="session")
def eiconal_cartan(cartan_forms):
    return {d: eiconal_scaled(u) for d, u in cartan_forms.items()}


@pytest.fixture(scope="session")
def eiconal_idempotents(eiconal_cartan):
    """First Newton idempotent of each eiconal-scaled Cartan algebra"""
    found = {}
    for d, v in eiconal_cartan.items():
        records = newton_search(v, n_starts=32, seed=11)
        assert records, f"no idempotent found for cartan:{d}"
        found[d] = records[0]
    return found


@pytest.fixture(scope="session")
def u5_normalized():
    u, _ = normalize_munzner(u5_determinant("symmetric"))
    return u


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
