"""Fundamental forms and engines against symbolic (sympy) oracles."""

import math

import numpy as np
import pytest
import sympy as sp

from flatbundle import dual as dm
from flatbundle.charts import (AmbientModel, ImmersionChart, euclidean,
                               hyperbolic, sphere)
from flatbundle.errors import (DegenerateMetricError, DomainError,
                               ModelConsistencyError)
from flatbundle.fundamental import fundamental_batch, normal_bundle_is_flat


# ---------------------------------------------------------------------------
# symbolic oracles for surfaces in R^3

def _surface_oracle(fx, fy, fz, u, v):
    """First fundamental form and Gauss curvature of a parametric surface,
    derived symbolically and lambdified."""
    F = sp.Matrix([fx, fy, fz])
    Fu, Fv = F.diff(u), F.diff(v)
    E, Ff, G = Fu.dot(Fu), Fu.dot(Fv), Fv.dot(Fv)
    nvec = Fu.cross(Fv)
    nvec = nvec / sp.sqrt(nvec.dot(nvec))
    L = F.diff(u, 2).dot(nvec)
    M = F.diff(u, v).dot(nvec)
    N = F.diff(v, 2).dot(nvec)
    K = sp.simplify((L * N - M * M) / (E * G - Ff * Ff))
    g_fn = sp.lambdify((u, v), sp.Matrix([[E, Ff], [Ff, G]]), "numpy")
    K_fn = sp.lambdify((u, v), K, "numpy")
    shape = sp.Matrix([[E, Ff], [Ff, G]]).inv() * sp.Matrix([[L, M], [M, N]])
    k_fn = sp.lambdify((u, v), shape, "numpy")
    return g_fn, K_fn, k_fn


def test_pseudosphere_metric_and_curvatures(pseudosphere):
    u, v = sp.symbols("u v", positive=True)
    g_fn, K_fn, shape_fn = _surface_oracle(
        sp.sech(u) * sp.cos(v), sp.sech(u) * sp.sin(v), u - sp.tanh(u), u, v)
    chart = pseudosphere.chart
    pts = np.array([[0.7, 1.1], [1.4, 4.0], [2.5, 0.2]])
    fb = fundamental_batch(chart, pts)
    for k, (uu, vv) in enumerate(pts):
        np.testing.assert_allclose(fb.g[k], np.array(g_fn(uu, vv), float),
                                   atol=1e-12)
        # closed form g = diag(tanh^2 u, sech^2 u)
        np.testing.assert_allclose(
            fb.g[k], np.diag([math.tanh(uu) ** 2, 1 / math.cosh(uu) ** 2]),
            atol=1e-12)
        assert float(K_fn(uu, vv)) == pytest.approx(-1.0, abs=1e-10)
        # principal curvatures are the shape operator eigenvalues;
        # magnitudes {1/sinh u, sinh u}, product -1
        kappa = np.sort(np.abs(np.linalg.eigvals(
            np.array(shape_fn(uu, vv), float))))
        np.testing.assert_allclose(
            kappa, np.sort([1.0 / math.sinh(uu), math.sinh(uu)]), rtol=1e-10)


def test_dini_curvature_matches_asserted():
    """K from the symbolic Gauss formula equals -1/(a^2+b^2) everywhere."""
    a_, b_ = 1.3, 0.4
    u, v = sp.symbols("u v", positive=True)
    _, K_fn, _ = _surface_oracle(
        a_ * sp.cos(u) * sp.sin(v), a_ * sp.sin(u) * sp.sin(v),
        a_ * (sp.cos(v) + sp.log(sp.tan(v / 2))) + b_ * u, u, v)
    from flatbundle import catalog
    entry = catalog.get("dini", a=a_, b=b_)
    assert entry.c == pytest.approx(-1.0 / (a_ * a_ + b_ * b_))
    for uu, vv in [(0.5, 0.6), (3.0, 0.9), (5.5, 0.4)]:
        assert float(K_fn(uu, vv)) == pytest.approx(entry.c, rel=1e-9)


def test_dini_metric_against_sympy(dini):
    u, v = sp.symbols("u v", positive=True)
    g_fn, _, _ = _surface_oracle(
        sp.cos(u) * sp.sin(v), sp.sin(u) * sp.sin(v),
        sp.cos(v) + sp.log(sp.tan(v / 2)) + sp.Rational(1, 2) * u, u, v)
    pts = np.array([[1.0, 0.5], [4.0, 1.0]])
    fb = fundamental_batch(dini.chart, pts)
    for k, (uu, vv) in enumerate(pts):
        np.testing.assert_allclose(fb.g[k], np.array(g_fn(uu, vv), float),
                                   atol=1e-12)


def test_second_fundamental_form_sphere():
    """Round sphere of radius R: alpha(X, X) has norm 1/R for unit X."""
    R = 2.0
    from flatbundle import catalog
    entry = catalog.get("sphere_negative_control", c=1.0 / R ** 2)
    fb = fundamental_batch(entry.chart, np.array([0.3, 0.4]))
    # sff_sq = sum over a g-orthonormal basis of |alpha(e_i, e_j)|^2 = 2/R^2
    assert float(fb.sff_sq) == pytest.approx(2.0 / R ** 2, rel=1e-12)
    flat, res = normal_bundle_is_flat(entry.chart, np.array([0.3, 0.4]))
    assert flat and res < 1e-12


# ---------------------------------------------------------------------------
# engines

def test_ad_fd_jets_agree(pseudosphere):
    chart = pseudosphere.chart
    pts = np.array([[1.0, 1.0], [1.8, 3.0]])
    ja = chart.jet(pts, engine="ad")
    jf = chart.jet(pts, engine="fd")
    np.testing.assert_allclose(ja.value, jf.value, atol=1e-12)
    np.testing.assert_allclose(ja.first, jf.first, atol=1e-7)
    np.testing.assert_allclose(ja.second, jf.second, atol=1e-6)


def test_fd_second_derivatives_symmetric(dini):
    j = dini.chart.jet(np.array([2.0, 0.7]), engine="fd")
    np.testing.assert_allclose(j.second, np.swapaxes(j.second, -3, -2),
                               atol=1e-14)


def test_fd_usable_domain_shrinks(pseudosphere):
    chart = pseudosphere.chart
    full = chart.usable_domain("ad")
    shrunk = chart.usable_domain("fd")
    assert full == tuple(chart.domain)
    (lo_f, hi_f), (lo_s, hi_s) = full[0], shrunk[0]
    assert lo_s > lo_f and hi_s < hi_f
    assert shrunk[1] == full[1]          # periodic axis unchanged


def test_fd_stencil_domain_guard(pseudosphere):
    chart = pseudosphere.chart
    lo = chart.domain[0][0]
    with pytest.raises(DomainError):
        chart.jet(np.array([lo + 1e-6, 1.0]), engine="fd")


# ---------------------------------------------------------------------------
# ambient models

def test_ambient_constraint_enforced():
    bad = ImmersionChart("bad_sphere",
                         lambda u: (dm.cos(u[0]), dm.sin(u[0]), 0.1 + 0 * u[1]),
                         2, sphere(1.0, 2), None,
                         ((0.0, 6.0), (0.0, 1.0)))
    with pytest.raises(ModelConsistencyError):
        bad.evaluate(np.array([1.0, 0.5]))


def test_hyperboloid_sheet_constraint(clifford):
    """Band-model H^2 chart sits on <x,x> = -1 in the Lorentzian container."""
    from flatbundle import catalog
    entry = catalog.get("hyperbolic_plane")
    amb = entry.chart.ambient
    assert amb.signature.tolist() == [1.0, 1.0, -1.0]
    pts = np.array([[0.5, 0.3], [-2.0, -1.0], [3.0, 1.2]])
    x = entry.chart.evaluate(pts)
    np.testing.assert_allclose(amb.inner(x, x), -1.0, atol=1e-12)
    # conformal metric sec^2(y) I
    fb = fundamental_batch(entry.chart, pts)
    for k, (_, y) in enumerate(pts):
        np.testing.assert_allclose(fb.g[k], np.eye(2) / math.cos(y) ** 2,
                                   atol=1e-10)
    # Clifford chart satisfies the unit-sphere constraint too
    xc = clifford.chart.evaluate(np.array([1.0, 2.0]))
    assert float(np.sum(xc * xc)) == pytest.approx(1.0, abs=1e-14)


def test_ambient_kind_sign_validation():
    with pytest.raises(ValueError):
        AmbientModel("sphere", -1.0, 3)
    with pytest.raises(ValueError):
        AmbientModel("hyperbolic", 1.0, 3)
    with pytest.raises(ValueError):
        AmbientModel("cylinder", 0.0, 3)
    assert euclidean(3).flat
    assert not hyperbolic(-2.0, 3).flat


def test_domain_membership(pseudosphere):
    chart = pseudosphere.chart
    with pytest.raises(DomainError):
        chart.evaluate(np.array([5.0, 1.0]))
    # the periodic axis never rejects
    assert chart.contains(np.array([1.0, 97.3]))


def test_degenerate_metric_rejected():
    folded = ImmersionChart("folded",
                            lambda u: (u[0], u[0], 0.0 * u[1]),
                            2, euclidean(3), None,
                            ((-1.0, 1.0), (-1.0, 1.0)))
    with pytest.raises(DegenerateMetricError):
        fundamental_batch(folded, np.array([0.1, 0.2]))


def test_veronese_normal_bundle_not_flat():
    from flatbundle import catalog
    entry = catalog.get("veronese_r5")
    flat, res = normal_bundle_is_flat(entry.chart, np.array([0.7, 0.4]))
    assert not flat
    assert res > 0.05
