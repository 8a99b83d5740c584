"""Principal normals, clustering, joint diagonalization and the comparison
metric, checked against the catalog's closed-form ground truth."""

import math

import numpy as np
import pytest

from flatbundle import catalog
from flatbundle.errors import HypothesisViolation
from flatbundle.fundamental import fundamental_batch
from flatbundle.principal import (comparison_metric, joint_diagonalize,
                                  principal_batch, principal_decomposition,
                                  third_fundamental_form)


def test_pseudosphere_principal_data(pseudosphere):
    chart = pseudosphere.chart
    pts = np.array([[0.6, 0.5], [1.3, 2.0], [2.4, 5.0]])
    fb = fundamental_batch(chart, pts)
    pb = principal_batch(fb, C=1.0)
    assert float(np.max(pb.offdiag)) < 1e-12
    for k, (u, _) in enumerate(pts):
        want = np.sort([math.sinh(u) ** 2, 1.0 / math.sinh(u) ** 2])
        np.testing.assert_allclose(np.sort(pb.eta_sq[k]), want, rtol=1e-10)
        np.testing.assert_allclose(pb.lambdas[k],
                                   1.0 / np.sqrt(pb.eta_sq[k] + 1.0))
        # X_i are g-orthonormal
        X = pb.X_chart[k]
        np.testing.assert_allclose(X @ fb.g[k] @ X.T, np.eye(2), atol=1e-12)
    dec = principal_decomposition(fundamental_batch(chart, pts[1]), C=1.0)
    assert dec.s == 2
    assert sorted(dec.multiplicities.tolist()) == [1, 1]


def test_sphere_umbilic_cluster(sphere_control):
    fb = fundamental_batch(sphere_control.chart, np.array([0.4, -0.2]))
    dec = principal_decomposition(fb)
    assert dec.s == 1
    assert dec.multiplicities.tolist() == [2]
    # single principal normal of norm sqrt(c) = 1
    assert float(np.linalg.norm(dec.etas_cont[0])) == pytest.approx(1.0,
                                                                    rel=1e-12)


def test_product_torus_principal_normals():
    r1, r2 = 1.0, 0.5
    entry = catalog.get("product_torus_r4", r1=r1, r2=r2)
    fb = fundamental_batch(entry.chart, np.array([1.0, 2.5]))
    dec = principal_decomposition(fb)
    assert dec.s == 2
    norms = np.sort(np.linalg.norm(dec.etas, axis=-1))
    np.testing.assert_allclose(norms, np.sort([1.0 / r1, 1.0 / r2]),
                               rtol=1e-12)
    # factor normals are orthogonal: <eta_1, eta_2> = c - c~ = 0
    assert abs(float(dec.etas[0] @ dec.etas[1])) < 1e-13


def test_clifford_curvatures_and_g0(clifford):
    """Clifford torus at t = pi/4: principal curvatures tan t, -cot t and
    the comparison metric is exactly the identity."""
    chart = clifford.chart
    pts = np.array([[0.3, 1.0], [4.0, 2.0]])
    fb = fundamental_batch(chart, pts)
    pb = principal_batch(fb, C=1.0)
    # <eta_1, eta_2> = c - c~ = -1 and eta_sq = 1 for both at t = pi/4
    np.testing.assert_allclose(pb.eta_sq, 1.0, atol=1e-13)
    ip = np.sum(pb.eta[..., 0, :] * pb.eta[..., 1, :], axis=-1)
    np.testing.assert_allclose(ip, -1.0, atol=1e-13)
    cm = comparison_metric(fb, C=1.0)
    assert cm.positive_definite
    np.testing.assert_allclose(cm.g0,
                               np.broadcast_to(np.eye(2), cm.g0.shape),
                               atol=1e-14)


def test_third_fundamental_form_orthogonal_coords(pseudosphere):
    """In principal coordinates III = diag(k1^2 E, k2^2 G)."""
    u = 1.1
    fb = fundamental_batch(pseudosphere.chart, np.array([u, 2.0]))
    III = third_fundamental_form(fb)
    E, G = math.tanh(u) ** 2, 1.0 / math.cosh(u) ** 2
    k_u, k_v = 1.0 / math.sinh(u), math.sinh(u)   # magnitudes per direction
    np.testing.assert_allclose(III, np.diag([k_u ** 2 * E, k_v ** 2 * G]),
                               atol=1e-12)


def test_comparison_metric_guards():
    fb = fundamental_batch(catalog.get("product_torus_r4").chart,
                           np.array([1.0, 1.0]))
    with pytest.raises(HypothesisViolation):
        comparison_metric(fb)                     # C = 0
    cm = comparison_metric(fb, exploratory=True)  # g0 = III only
    assert cm.C == 0.0
    fb_v = fundamental_batch(catalog.get("veronese_r5").chart,
                             np.array([0.5, 0.3]))
    with pytest.raises(HypothesisViolation):
        comparison_metric(fb_v)                   # C unknown


def test_lambda_guard_fires_when_gap_negative(sphere_control):
    """C = c~ - c = -1 on the unit sphere: |eta|^2 + C = 0, no lambdas."""
    fb = fundamental_batch(sphere_control.chart, np.array([0.4, -0.2]))
    with pytest.raises(HypothesisViolation):
        principal_decomposition(fb, C=-1.0)


def test_joint_diagonalize_commuting_family(rng):
    """Oracle: matrices built with a shared eigenbasis are re-diagonalized."""
    n = 4
    A = rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(A)
    mats = [Q @ np.diag(rng.standard_normal(n)) @ Q.T for _ in range(3)]
    V = joint_diagonalize(mats)
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
    for m in mats:
        D = V.T @ m @ V
        off = D - np.diag(np.diag(D))
        assert np.max(np.abs(off)) < 1e-9


def test_plane_zero_alpha():
    entry = catalog.get("plane_r3")
    fb = fundamental_batch(entry.chart, np.array([0.5, -0.5]))
    assert float(fb.sff_sq) == 0.0
    dec = principal_decomposition(fb)
    assert dec.s == 1
    np.testing.assert_allclose(dec.etas, 0.0, atol=1e-15)
