import math

import numpy as np
import pytest

import dreamhop as dh


def test_ground_truths_are_spins():
    xi = dh.ground_truths(50, 5, seed=3)
    assert xi.shape == (5, 50)
    assert xi.dtype == np.int8
    assert set(np.unique(xi)) <= {-1, 1}
    assert np.array_equal(xi, dh.ground_truths(50, 5, seed=3))


def test_coupling_matches_numpy_formula():
    xi = dh.ground_truths(40, 8, seed=1).astype(float)
    t = 2.5
    c = xi @ xi.T / 40
    expected = (1 + t) * xi.T @ np.linalg.solve(np.eye(8) + t * c, xi) / 40
    assert np.allclose(dh.coupling("storing", xi.astype(np.int8), t=t), expected, atol=1e-12)


def test_projector_and_eigen_map():
    xi = dh.ground_truths(30, 6, seed=2)
    j = dh.coupling("storing", xi, t=dh.PROJECTOR_TIME)
    lam = dh.eigenvalues(j)
    assert np.sum(np.abs(lam - 1) < 1e-9) == 6
    assert np.sum(np.abs(lam) < 1e-9) == 24
    assert dh.eigen_map(1.0, 7.0) == 1.0
    assert dh.eigen_map_inverse(dh.eigen_map(0.3, 4.0), 4.0) == pytest.approx(0.3)


def test_supervised_coupling_needs_examples():
    xi = dh.ground_truths(30, 3, seed=4)
    with pytest.raises(ValueError):
        dh.coupling("supervised", xi)
    ex = dh.examples(xi, 5, 1.0, seed=4)
    assert np.allclose(dh.coupling("supervised", xi, ex, per_class=5, t=1.0), dh.coupling("storing", xi, t=1.0))


def test_law_normalization_and_moments():
    law = dh.law("storing", 0.2, 0.0)
    assert law.integrate_bulk(lambda x: 1.0) == pytest.approx(1.0, abs=1e-9)
    assert law.integrate_full(lambda x: x * x) == pytest.approx(0.2 * 1.2, abs=1e-9)
    lo, hi = law.support
    assert law.density(0.5 * (lo + hi)) > 0
    mu1, mu2 = dh.moments(dh.Scenario.STABILITY, 0.2, 0.0)
    assert mu1 == pytest.approx(1.2, abs=1e-9)
    assert mu2 == pytest.approx(0.04 + 0.6 + 1, abs=1e-9)
    assert dh.m1_theory(dh.Scenario.STABILITY, 0.2, 0.0) == pytest.approx(math.erf(1.2 / math.sqrt(2 * (1.64 - 1.44))))


def test_se_theory_closed_form():
    assert dh.se_theory("unsupervised", 0.3, 0.5, 0.0) == pytest.approx(0.75**2 * 0.3, abs=1e-10)
    with pytest.raises(ValueError):
        dh.se_theory("storing", 0.3, 0.5, 0.0)


def test_predict_curve_rows():
    rows = dh.predict_curve(dh.Scenario.STORING, 0.1, 1.0, [0.2, 0.6, 1.0])
    assert [r.x for r in rows] == [0.2, 0.6, 1.0]
    assert rows[0].m1 <= rows[1].m1 <= rows[2].m1


def test_simulation_and_errors():
    rows = dh.simulate_retrieval(n=200, alpha=0.05, times=[0.0, 1.0], datasets=3, probes=2, seed=9)
    assert len(rows) == 2
    assert all(r["m1_mean"] > 0.98 for r in rows)
    with pytest.raises(ValueError):
        dh.simulate_retrieval(alpha=0.0)


def test_git_blob_sha1():
    assert dh.git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
