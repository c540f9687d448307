"""
Tests for the ray function w, its idempotent spectra and the gap, F5 and Hsiang diagnostics
"""

import math

import numpy as np
import pytest

from cubiclab_api.errors import DegenerateProbeError, NotIdempotentError, PoleError, ZeroInputError
from cubiclab_api.form_catalog import det3_form, random_form
from cubiclab_api.hessian_w import (
    RayFunction,
    charpoly_check,
    f5_residual,
    f5_scale_search,
    gap_ratio,
    gap_scan,
    hsiang_fit,
    idempotent_spectrum,
    w_eval_grad,
    w_hessian,
    w_laplacian,
)

CARTAN_DIMENSIONS = (1, 2, 4, 8)


def central_gradient(f, x, h=1e-6):
    grad = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (f(x + e) - f(x - e)) / (2 * h)
    return grad


@pytest.mark.parametrize("alpha", [0.5, 2.0, 3.0])
def test_alpha_range(random5, alpha):
    with pytest.raises(ValueError):
        RayFunction(random5, alpha)


def test_scale_must_be_nonzero(random5):
    with pytest.raises(ValueError):
        RayFunction(random5, 1.0, 0.0)


def test_origin_is_rejected(random5):
    r = RayFunction(random5)
    with pytest.raises(ZeroInputError):
        r.value(np.zeros(5))
    with pytest.raises(ZeroInputError):
        r.hessian_batch(np.zeros((2, 5)))


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_homogeneity(random5, rng, alpha):
    r = RayFunction(random5, alpha)
    x = rng.standard_normal(5)
    assert r.value(2.0 * x) == pytest.approx(2.0 ** (3.0 - alpha) * r.value(x), rel=1e-12)


def test_odd_and_ray_invariant(random5, rng):
    r = RayFunction(random5)
    x = rng.standard_normal(5)
    assert r.value(-x) == pytest.approx(-r.value(x), rel=1e-12)
    # the Hessian is homogeneous of degree zero at alpha = 1
    np.testing.assert_allclose(r.hessian(3.0 * x), r.hessian(x), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_gradient_finite_differences(random5, rng, alpha):
    r = RayFunction(random5, alpha)
    for x in rng.standard_normal((5, 5)):
        value, grad = w_eval_grad(r, x)
        assert value == pytest.approx(r.value(x))
        np.testing.assert_allclose(grad, central_gradient(r.value, x), atol=1e-6)


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_hessian_finite_differences(random5, rng, alpha):
    r = RayFunction(random5, alpha, 0.5)
    for x in rng.standard_normal((3, 5)):
        numeric = np.array([central_gradient(lambda y: r.gradient(y)[i], x) for i in range(5)])
        np.testing.assert_allclose(w_hessian(r, x), numeric, atol=1e-6)


def test_batch_hessian_matches_single(random5, rng):
    r = RayFunction(random5, 1.2)
    X = rng.standard_normal((6, 5))
    np.testing.assert_allclose(r.hessian_batch(X), [r.hessian(x) for x in X], atol=1e-12)


@pytest.mark.parametrize("alpha", [1.0, 1.7])
def test_laplacian_is_hessian_trace(random5, rng, alpha):
    r = RayFunction(random5, alpha)
    x = rng.standard_normal(5)
    assert w_laplacian(r, x) == pytest.approx(np.trace(r.hessian(x)), rel=1e-10, abs=1e-10)


def test_laplacian_of_harmonic_form(cartan_forms, rng):
    u = cartan_forms[2]
    r = RayFunction(u)
    x = rng.standard_normal(u.dim)
    p = 6.0 * u.evaluate(x)
    expected = -(u.dim + 3) * p / np.linalg.norm(x) ** 3
    assert r.laplacian(x) == pytest.approx(expected, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("d", CARTAN_DIMENSIONS)
def test_idempotent_spectrum(eiconal_cartan, eiconal_idempotents, d):
    r = RayFunction(eiconal_cartan[d])
    spectrum = idempotent_spectrum(r, eiconal_idempotents[d].c)
    assert spectrum.max_deviation <= 1e-9
    expected = np.sort([2.0] * (2 * d + 1) + [-7.0] * (d + 1))
    np.testing.assert_allclose(spectrum.closed_form, expected, atol=1e-9)


def test_hessian_fixes_idempotent(eiconal_cartan, eiconal_idempotents):
    r = RayFunction(eiconal_cartan[1])
    c = eiconal_idempotents[1].c
    np.testing.assert_allclose(r.hessian(c) @ c, 2.0 * c / np.linalg.norm(c), atol=1e-10)


def test_idempotent_spectrum_needs_unit_alpha(cube_form):
    with pytest.raises(ValueError):
        idempotent_spectrum(RayFunction(cube_form, 1.5), [1.0 / 6.0])
    with pytest.raises(NotIdempotentError):
        idempotent_spectrum(RayFunction(cube_form), [1.0])


@pytest.mark.parametrize("d", [1, 2, 4])
def test_charpoly_identity(eiconal_cartan, eiconal_idempotents, d):
    result = charpoly_check(RayFunction(eiconal_cartan[d]), eiconal_idempotents[d].c)
    assert result["residual"] <= 1e-8
    assert result["inverse_residual"] <= 1e-8
    assert result["two_over_c_multiplicity"] == 2 * d + 1


def test_printed_charpoly_variant_disagrees(eiconal_cartan, eiconal_idempotents):
    result = charpoly_check(RayFunction(eiconal_cartan[1]), eiconal_idempotents[1].c, variant="printed")
    assert result["residual"] > 1e-3


def test_charpoly_of_cube(cube_form):
    result = charpoly_check(RayFunction(cube_form), [1.0 / 6.0], generic=True)
    assert result["residual"] <= 1e-12
    assert result["two_over_c_multiplicity"] == 1
    assert result["two_over_c_simple"]


def test_charpoly_pole(cube_form):
    # |c| = 1/6 puts the pole at t = 30
    with pytest.raises(PoleError):
        charpoly_check(RayFunction(cube_form), [1.0 / 6.0], grid=[1.0, 30.0])


@pytest.mark.parametrize(
    "spectrum, ratio",
    [
        ([3.0, 2.0, 1.0], 3.0),
        ([1.0, 0.5, 0.5, -1.0, -1.0], 2.0),
        ([4.0, 1.0, 1.0, 1.0, -2.0], 4.0),
        ([1.0, 0.0, 0.0], math.inf),
    ],
)
def test_gap_ratio(spectrum, ratio):
    assert gap_ratio(spectrum) == ratio


def test_gap_ratio_needs_three_values():
    with pytest.raises(ValueError):
        gap_ratio([1.0, 2.0])


def test_gap_scan_at_cartan_idempotents(cartan_forms):
    report = gap_scan(cartan_forms[1], n_dirs=200, seed=0, delta=0.1)
    assert report.idempotent_ratios
    for ratio in report.idempotent_ratios:
        assert ratio == pytest.approx(2.0, abs=1e-8)
    assert report.condition_fails
    assert report.to_dict()["n_dirs"] == 200
    assert report.idempotent_bound_holds()
    assert report.to_dict()["zero_tol"] == 1e-12


def test_gap_bound_needs_an_extremal_idempotent(cartan_forms):
    report = gap_scan(cartan_forms[1], n_dirs=10, seed=0, idempotents=[])
    assert report.idempotent_ratios == []
    assert not report.idempotent_bound_holds()


def test_gap_scan_arguments(cartan_forms):
    with pytest.raises(ValueError):
        gap_scan(cartan_forms[1], n_dirs=0)
    with pytest.raises(ValueError):
        gap_scan(cartan_forms[1], delta=1.5)


def test_f5_derived_scale(u5_normalized):
    report = f5_scale_search(RayFunction(u5_normalized), n_points=50, seed=0)
    assert report.found
    assert abs(report.s_star) == pytest.approx(1.0 / 6.0, rel=1e-6)
    assert report.residual <= 1e-6


def test_f5_wrong_scale_fails(u5_normalized):
    r = RayFunction(u5_normalized)
    x = np.array([1.0, 0.3, -0.2, 0.5, 0.1])
    assert f5_residual(r, x, 1.0 / 6.0) <= 1e-9
    assert f5_residual(r, x, 1.0 / 3.0) > 1e-3


def test_f5_printed_coefficients_have_no_scale(u5_normalized):
    report = f5_scale_search(RayFunction(u5_normalized), n_points=50, seed=0, coefficients="printed")
    assert not report.found
    assert report.to_dict()["s_star"] is None


def test_f5_needs_dimension_five(random5, cartan_forms):
    with pytest.raises(ValueError):
        f5_residual(RayFunction(cartan_forms[2]), np.ones(8))
    with pytest.raises(ValueError):
        f5_scale_search(RayFunction(random5, 1.5))


def test_hsiang_det3():
    fit = hsiang_fit(det3_form(), n_samples=200, seed=0)
    assert fit.passed(1e-9)


def test_hsiang_cartan(cartan_forms):
    fit = hsiang_fit(cartan_forms[1], n_samples=200, seed=0)
    assert fit.passed(1e-9)
    assert fit.c1 == pytest.approx(126.0, rel=1e-9)


def test_hsiang_random_fails():
    assert not hsiang_fit(random_form(5, 1), n_samples=200, seed=0).passed(1e-6)


def test_hsiang_zero_form(zero_form):
    with pytest.raises(DegenerateProbeError):
        hsiang_fit(zero_form)
