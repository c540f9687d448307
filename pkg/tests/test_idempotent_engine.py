"""
Tests for the idempotent finders and the genericity report
"""

import numpy as np
import pytest

from cubiclab_api.cubic_form import CubicForm
from cubiclab_api.errors import ConvergenceError, ZeroInputError
from cubiclab_api.form_catalog import spin_factor_form
from cubiclab_api.idempotent_engine import (
    Origin,
    classify,
    deduplicate,
    genericity_report,
    newton_refine,
    newton_search,
    variational_search,
)

CARTAN_DIMENSIONS = (1, 2, 4, 8)


def test_cube_has_single_idempotent(cube_form):
    records = newton_search(cube_form, n_starts=16, seed=0)
    assert len(records) == 1
    np.testing.assert_allclose(records[0].c, [1.0 / 6.0], atol=1e-12)
    assert records[0].primitive
    assert records[0].origin is Origin.NEWTON


def test_zero_form_has_no_idempotents(zero_form):
    records = newton_search(zero_form, n_starts=8, seed=0)
    assert list(records) == []
    assert records.n_dropped == 0


@pytest.mark.parametrize("d", CARTAN_DIMENSIONS)
def test_eiconal_idempotents_have_unit_norm(eiconal_cartan, d):
    records = newton_search(eiconal_cartan[d], n_starts=32, seed=3)
    assert len(records) > 0
    for record in records:
        assert record.residual <= 1e-12
        assert record.norm == pytest.approx(1.0, abs=1e-10)
        assert record.extremal


def test_records_are_deduplicated(eiconal_cartan):
    records = newton_search(eiconal_cartan[1], n_starts=64, seed=5)
    for i, a in enumerate(records):
        for b in records[i + 1:]:
            assert np.linalg.norm(a.c - b.c) > 1e-11


def test_search_is_deterministic(eiconal_cartan):
    v = eiconal_cartan[2]
    first = newton_search(v, n_starts=16, seed=9)
    second = newton_search(v, n_starts=16, seed=9)
    threaded = newton_search(v, n_starts=16, seed=9, workers=3)
    assert len(first) == len(second) == len(threaded)
    for a, b, c in zip(first, second, threaded):
        np.testing.assert_array_equal(a.c, b.c)
        np.testing.assert_array_equal(a.c, c.c)
    assert first.n_dropped == threaded.n_dropped


def test_search_rejects_bad_arguments(cube_form):
    with pytest.raises(ValueError):
        newton_search(cube_form, n_starts=0)
    with pytest.raises(ValueError):
        newton_search(cube_form, tol=0.0)


def test_newton_refine_converges_quadratically(cube_form):
    x, residual, iterations = newton_refine(cube_form, np.array([0.2]), 1e-14, 50)
    assert residual <= 1e-14
    assert iterations < 10
    np.testing.assert_allclose(x, [1.0 / 6.0])


def test_variational_cube(cube_form):
    for start in ([1.0], [-1.0]):
        record = variational_search(cube_form, start)
        assert record.origin is Origin.VARIATIONAL
        np.testing.assert_allclose(record.c, [1.0 / 6.0], atol=1e-12)


@pytest.mark.parametrize("d", [1, 2])
def test_variational_eiconal(eiconal_cartan, d):
    v = eiconal_cartan[d]
    x0 = np.random.default_rng(d).standard_normal(v.dim)
    tol = 1e-10
    record = variational_search(v, x0, tol=tol)
    assert not record.square_zero_witness
    assert record.residual <= tol
    assert record.norm == pytest.approx(1.0, abs=1e-6)
    assert record.extremal


def test_variational_unreachable_tolerance_raises(eiconal_cartan):
    x0 = np.random.default_rng(3).standard_normal(eiconal_cartan[2].dim)
    with pytest.raises(ConvergenceError):
        variational_search(eiconal_cartan[2], x0, tol=1e-300)


def test_variational_square_zero_witness():
    # u = x0^2 x1: e_1 squares to zero
    u = CubicForm.from_monomials(2, [((0, 0, 1), 1.0)])
    record = variational_search(u, [0.0, 1.0])
    assert record.square_zero_witness


def test_variational_ascent_is_monotone(random5):
    objectives = []
    variational_search(random5, np.ones(5), progress_callback=lambda i, x, f: objectives.append(f))
    assert len(objectives) > 1
    assert np.all(np.diff(objectives) >= -1e-12)


def test_variational_rejects_zero_start(random5):
    with pytest.raises(ZeroInputError):
        variational_search(random5, np.zeros(5))


def test_classify_spin_idempotent():
    u = spin_factor_form(4)
    c = np.array([0.5, 0.5, 0.0, 0.0])
    record = classify(u, c, 0.0, Origin.NEWTON)
    assert record.primitive
    assert record.extremal
    np.testing.assert_allclose(record.spectrum, [0.0, 0.5, 0.5, 1.0], atol=1e-14)


def test_deduplicate_keeps_best_residual():
    u = CubicForm.from_monomials(1, [((0, 0, 0), 1.0)])
    a = classify(u, np.array([1.0 / 6.0]), 1e-15, Origin.NEWTON)
    b = classify(u, np.array([1.0 / 6.0 + 1e-14]), 1e-13, Origin.NEWTON)
    kept = deduplicate([b, a], radius=1e-11)
    assert len(kept) == 1
    assert kept[0] is a


def test_genericity_of_eiconal_cartan(eiconal_cartan, eiconal_idempotents):
    report = genericity_report(eiconal_cartan[1], [eiconal_idempotents[1]])
    assert not report.generic_evidence
    assert report.consistent
    assert report.entries[0].half_multiplicity == 2


def test_genericity_of_random_form(random5):
    record = variational_search(random5, np.ones(5))
    report = genericity_report(random5, [record])
    assert report.generic_evidence
    assert report.consistent


def test_genericity_needs_records(random5):
    assert not genericity_report(random5, []).generic_evidence
