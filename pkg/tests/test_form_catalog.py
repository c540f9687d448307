"""
Tests for the named forms, the Munzner normalizer and the form files
"""

import json
import math

import numpy as np
import pytest

from cubiclab_api.errors import FormFileError, NotEiconalError, SelectorError
from cubiclab_api.form_catalog import (
    det3_form,
    imaginary_quaternion_embedding,
    list_catalog,
    load_form_file,
    normalize_munzner,
    random_form,
    resolve_selector,
    save_form_file,
    spin_factor_form,
    triality_form,
    u5_determinant,
)
from cubiclab_api.peirce_lab import munzner_residuals

CARTAN_DIMENSIONS = (1, 2, 4, 8)


@pytest.mark.parametrize("d", CARTAN_DIMENSIONS)
def test_cartan_dimension_and_harmonicity(cartan_forms, d):
    u = cartan_forms[d]
    assert u.dim == 3 * d + 2
    assert np.max(np.abs(u.basis_traces())) <= 1e-12


@pytest.mark.parametrize("d", CARTAN_DIMENSIONS)
def test_cartan_munzner_identity(cartan_forms, d):
    summary = munzner_residuals(cartan_forms[d], n_samples=1000, seed=0)
    assert summary.residuals["munzner"] <= 1e-9


@pytest.mark.parametrize("d", CARTAN_DIMENSIONS)
def test_normalize_cartan_is_identity(cartan_forms, d):
    u, kappa = normalize_munzner(cartan_forms[d])
    assert kappa == pytest.approx(9.0, rel=1e-9)
    np.testing.assert_allclose(u.coeffs, cartan_forms[d].coeffs, rtol=1e-9)


@pytest.mark.parametrize("variant", ["symmetric", "printed"])
def test_u5_value_at_a_point(variant):
    u = u5_determinant(variant)
    assert u.dim == 5
    assert u.evaluate([math.sqrt(3.0), 0, 0, 0, 0]) == pytest.approx(-2.0, abs=1e-12)


def test_u5_symmetric_normalizes():
    u = u5_determinant("symmetric")
    normalized, kappa = normalize_munzner(u)
    assert kappa == pytest.approx(4.0 / 3.0, rel=1e-9)
    x = np.array([1.0, 0, 0, 0, 0])
    assert normalized.evaluate(x) == pytest.approx(u.evaluate(x) * 3.0 * math.sqrt(3.0) / 2.0, rel=1e-9)
    assert munzner_residuals(normalized).residuals["munzner"] <= 1e-9


def test_u5_printed_is_not_eiconal():
    with pytest.raises(NotEiconalError):
        normalize_munzner(u5_determinant("printed"))


def test_random_form_is_not_eiconal(random5):
    with pytest.raises(NotEiconalError):
        normalize_munzner(random5)


def test_det3():
    u = det3_form()
    assert u.evaluate(np.eye(3).ravel()) == pytest.approx(1.0)
    np.testing.assert_array_equal(u.basis_traces(), np.zeros(9))
    rng = np.random.default_rng(0)
    X = rng.standard_normal((3, 3))
    assert u.evaluate(X.ravel()) == pytest.approx(np.linalg.det(X), rel=1e-12, abs=1e-12)


def test_triality_values():
    u12 = triality_form(4)
    ones = np.concatenate([[1.0, 0, 0, 0]] * 3)
    assert u12.evaluate(ones) == pytest.approx(1.0)
    assert triality_form(8).dim == 24
    assert triality_form(2).dim == 6


def test_triality_restricts_to_det():
    u12, u9 = triality_form(4), det3_form()
    rng = np.random.default_rng(5)
    for x9 in rng.standard_normal((100, 9)):
        expected = u9.evaluate(x9)
        assert u12.evaluate(imaginary_quaternion_embedding(x9)) == pytest.approx(expected, abs=1e-12 * max(1.0, abs(expected)))


def test_spin_factor_idempotent():
    u = spin_factor_form(4)
    c = np.array([0.5, 0.5, 0.0, 0.0])
    np.testing.assert_allclose(u.square(c), c, atol=1e-15)
    values = np.linalg.eigvalsh(u.mult_operator(c))
    np.testing.assert_allclose(values, [0.0, 0.5, 0.5, 1.0], atol=1e-14)


def test_random_form_determinism():
    a, b, c = random_form(6, 42), random_form(6, 42), random_form(6, 43)
    np.testing.assert_array_equal(a.tensor, b.tensor)
    assert not np.array_equal(a.tensor, c.tensor)
    assert np.all(np.isfinite(a.coeffs))
    assert len(a.coeffs) == 56


def test_form_file_round_trip(tmp_path, random5):
    path = tmp_path / "form.json"
    save_form_file(random5, path)
    loaded = load_form_file(path)
    assert loaded.dim == random5.dim
    assert loaded.to_monomials() == random5.to_monomials()
    assert resolve_selector(f"file:{path}").to_monomials() == random5.to_monomials()


def test_form_file_errors(tmp_path):
    with pytest.raises(FormFileError):
        load_form_file(tmp_path / "missing.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(FormFileError):
        load_form_file(broken)

    unsorted = tmp_path / "unsorted.json"
    unsorted.write_text(json.dumps({"dim": 3, "terms": [{"monomial": [2, 0, 1], "coeff": 1.0}]}))
    with pytest.raises(FormFileError):
        load_form_file(unsorted)

    out_of_range = tmp_path / "range.json"
    out_of_range.write_text(json.dumps({"dim": 2, "terms": [{"monomial": [0, 1, 2], "coeff": 1.0}]}))
    with pytest.raises(FormFileError):
        load_form_file(out_of_range)

    missing_key = tmp_path / "key.json"
    missing_key.write_text(json.dumps({"terms": []}))
    with pytest.raises(FormFileError):
        load_form_file(missing_key)


@pytest.mark.parametrize(
    "selector, dim",
    [
        ("u5", 5),
        ("u5-printed", 5),
        ("u9", 9),
        ("cartan:1", 5),
        ("cartan:8", 26),
        ("triality:4", 12),
        ("spin:3", 3),
        ("random:5:7", 5),
    ],
)
def test_resolve_selector(selector, dim):
    assert resolve_selector(selector).dim == dim


@pytest.mark.parametrize("selector", ["cartan:3", "bogus", "random:5", "cartan:x", "triality:1", "spin:1", "file:"])
def test_bad_selectors(selector):
    with pytest.raises(SelectorError):
        resolve_selector(selector)


def test_catalog_listing():
    selectors = [entry.selector for entry in list_catalog()]
    assert "u5" in selectors
    assert "cartan:8" in selectors
    assert all("selector" in entry.to_dict() for entry in list_catalog())
