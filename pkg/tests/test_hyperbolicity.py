"""
Tests for M-hyperbolicity and the sampled Hessian-set estimate
"""

import math

import numpy as np
import pytest

from cubiclab_api.form_catalog import random_form
from cubiclab_api.hessian_w import RayFunction
from cubiclab_api.hyperbolicity import (
    HyperbolicityKind,
    RefineSettings,
    best_alignment,
    hyperbolic_set_estimate,
    m_hyperbolicity,
)
from cubiclab_api.idempotent_engine import newton_search


@pytest.mark.parametrize(
    "diagonal, M",
    [
        ([-2.0, 1.0], 2.0),
        ([-1.0, 4.0], 4.0),
        ([-3.0, 0.0, 3.0], 1.0),
        ([-1.0, 0.5, 0.5, 2.0], 2.0),
    ],
)
def test_finite_hyperbolicity(diagonal, M):
    verdict = m_hyperbolicity(np.diag(diagonal))
    assert verdict.kind is HyperbolicityKind.FINITE
    assert verdict.M == pytest.approx(M)


def test_definite_matrix_is_not_hyperbolic():
    verdict = m_hyperbolicity(np.eye(3))
    assert verdict.kind is HyperbolicityKind.INFINITE
    assert math.isinf(verdict.M)


def test_zero_matrix():
    verdict = m_hyperbolicity(np.zeros((4, 4)))
    assert verdict.kind is HyperbolicityKind.ZERO
    assert verdict.M == 1.0
    assert verdict.to_dict()["kind"] == "zero_class"


@pytest.fixture(scope="module")
def u5_estimate(u5_normalized):
    anchors = [record.c for record in newton_search(u5_normalized, n_starts=32, seed=0)]
    return hyperbolic_set_estimate(RayFunction(u5_normalized), n_pairs=2000, seed=0, anchors=anchors)


def test_u5_hessian_set_is_hyperbolic(u5_estimate):
    assert u5_estimate.n_anchors > 0
    assert u5_estimate.violations == 0
    assert u5_estimate.hyperbolic_evidence
    # (c, -c) at an idempotent realizes the ratio 42/12
    assert u5_estimate.M_sup >= 3.5 - 1e-8


def test_samples_cover_every_pair(u5_estimate):
    samples = u5_estimate.samples()
    assert list(samples) == ["pair_index", "lambda_min", "lambda_max", "M"]
    assert len(samples["M"]) == u5_estimate.n_pairs == 2000 + u5_estimate.n_anchors
    assert np.all(samples["lambda_min"] <= samples["lambda_max"])


def test_orbit_sampling_is_deterministic(u5_normalized):
    r = RayFunction(u5_normalized)
    first = hyperbolic_set_estimate(r, n_pairs=300, seed=4, orbit=True, refine=False)
    second = hyperbolic_set_estimate(r, n_pairs=300, seed=4, orbit=True, refine=False)
    np.testing.assert_array_equal(first.M, second.M)
    assert first.worst["U"] is not None


def test_worker_count_does_not_change_samples(u5_normalized):
    r = RayFunction(u5_normalized)
    serial = hyperbolic_set_estimate(r, n_pairs=2000, seed=2, chunk_size=500, refine=False)
    threaded = hyperbolic_set_estimate(r, n_pairs=2000, seed=2, chunk_size=500, workers=3, refine=False)
    np.testing.assert_array_equal(serial.M, threaded.M)
    np.testing.assert_array_equal(serial.lambda_min, threaded.lambda_min)
    assert serial.M_sup == threaded.M_sup


def test_zero_form_pairs_are_zero_class(zero_form):
    report = hyperbolic_set_estimate(RayFunction(zero_form), n_pairs=100, seed=0)
    assert report.zero_pairs == 100
    assert report.violations == 0
    assert report.M_sup == 1.0


def test_random_form_has_definite_differences():
    report = hyperbolic_set_estimate(RayFunction(random_form(5, 1)), n_pairs=20000, seed=0, refine=False)
    assert report.violations > 0
    assert not report.hyperbolic_evidence
    assert math.isinf(report.M_sup)


def test_pair_count_must_be_positive(u5_normalized):
    with pytest.raises(ValueError):
        hyperbolic_set_estimate(RayFunction(u5_normalized), n_pairs=0)


def test_alignment_picks_the_most_lopsided_ordering():
    a = np.array([[-1.0, 0.0, 1.0]])
    M, index = best_alignment(a, a.copy(), 1e-10, np.array([1.0]))
    # (-1, 0, 1) - (0, 1, -1) = (-1, -1, 2)
    assert M[0] == pytest.approx(2.0)
    assert index[0] in (3, 4)


def test_alignment_detects_definite_differences():
    # (-1, 2) - (-2, 1) = (1, 1) is positive definite
    M, _ = best_alignment(np.array([[-1.0, 2.0]]), np.array([[-2.0, 1.0]]), 1e-10, np.array([1.0]))
    assert math.isinf(M[0])


def test_orbit_refinement_moves_the_rotation(u5_normalized):
    report = hyperbolic_set_estimate(RayFunction(u5_normalized), n_pairs=2000, seed=0, orbit=True)
    assert report.aligned
    assert report.violations == 0
    assert report.M_sup >= report.sampled_M_max
    U = np.array(report.worst["U"])
    np.testing.assert_allclose(U @ U.T, np.eye(5), atol=1e-10)
    assert report.worst["M"] == report.M_sup
    assert report.to_dict()["refine"]["starts"] == RefineSettings().starts


def test_refinement_never_lowers_the_sampled_maximum(u5_normalized):
    r = RayFunction(u5_normalized)
    plain = hyperbolic_set_estimate(r, n_pairs=1000, seed=3, refine=False)
    refined = hyperbolic_set_estimate(r, n_pairs=1000, seed=3, refine_settings=RefineSettings(starts=4, sweeps=50))
    assert refined.sampled_M_max == plain.M_sup
    assert refined.M_sup >= plain.M_sup
    assert plain.to_dict()["refine"] is None


@pytest.mark.slow
@pytest.mark.parametrize("orbit", [False, True])
def test_u5_estimate_is_stable_when_pairs_double(u5_normalized, orbit):
    r = RayFunction(u5_normalized)
    anchors = [record.c for record in newton_search(u5_normalized, n_starts=32, seed=0)]
    base = hyperbolic_set_estimate(r, n_pairs=100000, seed=20190418, orbit=orbit, anchors=anchors)
    doubled = hyperbolic_set_estimate(r, n_pairs=200000, seed=20190418, orbit=orbit, anchors=anchors)
    for report in (base, doubled):
        assert report.violations == 0
        assert report.M_sup >= 3.5 - 1e-8
    assert abs(doubled.M_sup - base.M_sup) <= 0.1 * base.M_sup


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_random_forms_violate_at_full_sample_size(seed):
    report = hyperbolic_set_estimate(RayFunction(random_form(5, seed)), n_pairs=100000, seed=20190418)
    assert report.violations > 0
