"""Principal normals, principal frames, the third fundamental form and the
comparison metric g0 = C g + III."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HypothesisViolation, NumericalError

DEFAULT_SEED = 12345
CLUSTER_REL_TOL = 1e-6


def _diag_weights(p, seed=DEFAULT_SEED):
    """Fixed generic weight vector for the simultaneous diagonalization."""
    if p == 0:
        return np.zeros(0)
    w = np.random.default_rng(seed).standard_normal(p)
    return w / np.linalg.norm(w)


def joint_diagonalize(mats, tol=1e-12, max_sweeps=100):
    """Jacobi-style joint diagonalization of commuting symmetric matrices.

    Returns an orthogonal V such that V.T @ M @ V is (near) diagonal for
    every M in ``mats``.
    """
    mats = [m.copy() for m in mats]
    n = mats[0].shape[0]
    V = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                h = np.array([[m[i, i] - m[j, j], 2.0 * m[i, j]]
                              for m in mats])
                G = h.T @ h
                vals, vecs = np.linalg.eigh(G)
                x, y = vecs[:, -1]
                if x < 0:
                    x, y = -x, -y
                c = np.sqrt((x + 1.0) / 2.0)
                s = y / np.sqrt(2.0 * (x + 1.0))
                if abs(s) > tol:
                    rotated = True
                    for m in mats:
                        mi, mj = m[:, i].copy(), m[:, j].copy()
                        m[:, i], m[:, j] = c * mi + s * mj, -s * mi + c * mj
                        mi, mj = m[i, :].copy(), m[j, :].copy()
                        m[i, :], m[j, :] = c * mi + s * mj, -s * mi + c * mj
                    vi, vj = V[:, i].copy(), V[:, j].copy()
                    V[:, i], V[:, j] = c * vi + s * vj, -s * vi + c * vj
        if not rotated:
            return V
    raise NumericalError("joint diagonalization did not converge")


@dataclass
class PrincipalBatch:
    """Per-direction principal data over a batch (one entry per tangent
    direction; clustering into distinct principal normals is done on top).

    X_chart  : (..., n, n)  chart components of the g-orthonormal directions
    X_cont   : (..., n, N)  the same directions as container vectors
    eta      : (..., n, p)  alpha(X_k, X_k) in the normal frame
    eta_cont : (..., n, N)  container-valued principal normals
    eta_sq   : (..., n)
    lambdas  : (..., n) or None when C is unknown
    offdiag  : (...,) residual max |alpha(X_k, X_l)|, k != l (relative)
    """

    fb: object
    C: object
    X_chart: np.ndarray
    X_cont: np.ndarray
    eta: np.ndarray
    eta_cont: np.ndarray
    eta_sq: np.ndarray
    lambdas: object
    offdiag: np.ndarray
    weight_seed: int


def _canonical_sign(X):
    """Flip each direction so its largest-magnitude component is positive."""
    idx = np.argmax(np.abs(X), axis=-1)
    lead = np.take_along_axis(X, idx[..., None], axis=-1)[..., 0]
    s = np.where(lead < 0, -1.0, 1.0)
    return X * s[..., None]


def principal_batch(fb, C=None, seed=DEFAULT_SEED, order="norm"):
    """Diagonalize the commuting shape operators of a FundamentalBatch.

    order = "norm" : sort directions by |eta| descending with a canonical
                     sign gauge (stable pointwise labeling)
    order = "raw"  : ascending eigenvalue order of the weighted operator,
                     no sign gauge; field sweeps impose their own coherent
                     gauge on top
    """
    g, ginv, alpha = fb.g, fb.ginv, fb.alpha
    n, p = fb.n, fb.p
    batch = fb.sff_sq.shape
    L = np.linalg.cholesky(g)

    if p > 0:
        B = np.einsum("...ija->...aij", alpha)
        # symmetric representatives in a g-orthonormal gauge
        Atil = np.linalg.solve(L[..., None, :, :], B)
        Atil = np.swapaxes(np.linalg.solve(
            L[..., None, :, :], np.swapaxes(Atil, -1, -2)), -1, -2)
        Atil = 0.5 * (Atil + np.swapaxes(Atil, -1, -2))
        w = _diag_weights(p, seed)
        Aw = np.einsum("a,...aij->...ij", w, Atil)
    else:
        Atil = np.zeros(batch + (0, n, n))
        Aw = np.zeros(batch + (n, n))

    _, vecs = np.linalg.eigh(Aw)

    # refine points where the generic combination failed to diagonalize all
    if p > 1:
        D = np.einsum("...ki,...akl,...lj->...aij", vecs, Atil, vecs)
        off = D - D * np.eye(n)
        scale = np.maximum(1.0, np.sqrt(fb.sff_sq))
        bad = np.max(np.abs(off), axis=(-3, -2, -1)) > 1e-9 * scale
        if np.any(bad):
            flat_idx = np.argwhere(bad)
            for idx in flat_idx:
                t = tuple(idx)
                V = joint_diagonalize([Atil[t][a] for a in range(p)])
                vecs[t] = V

    # back to chart components; rows of X_chart are directions
    Xc = np.linalg.solve(np.swapaxes(L, -1, -2), vecs)
    X_chart = np.swapaxes(Xc, -1, -2)
    eta = np.einsum("...ki,...kj,...ija->...ka", X_chart, X_chart, alpha)
    eta_sq = np.sum(eta * eta, axis=-1)

    if order == "norm":
        key = np.argsort(-eta_sq, axis=-1, kind="stable")
        X_chart = np.take_along_axis(X_chart, key[..., None], axis=-2)
        eta = np.take_along_axis(eta, key[..., None], axis=-2)
        eta_sq = np.take_along_axis(eta_sq, key, axis=-1)
        X_chart = _canonical_sign(X_chart)

    X_cont = np.einsum("...km,...mN->...kN", X_chart, fb.tangent)
    eta_cont = np.einsum("...ka,...aN->...kN", eta, fb.frame)

    cross = np.einsum("...ki,...lj,...ija->...kla", X_chart, X_chart, alpha)
    mask = 1.0 - np.eye(n)
    offdiag = np.max(np.abs(cross) * mask[..., None], axis=(-3, -2, -1)) \
        if p > 0 else np.zeros(batch)
    offdiag = offdiag / np.maximum(1.0, np.sqrt(fb.sff_sq))

    lambdas = None
    if C is not None:
        under = eta_sq + C
        if np.any(under <= 0):
            raise HypothesisViolation(
                "|eta|^2 + C <= 0 at some point: lambda_i undefined")
        lambdas = 1.0 / np.sqrt(under)
    return PrincipalBatch(fb, C, X_chart, X_cont, eta, eta_cont, eta_sq,
                          lambdas, offdiag, seed)


@dataclass
class PrincipalDecomposition:
    """Clustered principal data at a single point."""

    etas: np.ndarray           # (s, p) distinct principal normals, frame comps
    etas_cont: np.ndarray      # (s, N)
    directions: np.ndarray     # (n, n) chart components, grouped by cluster
    labels: np.ndarray         # (n,) cluster index per direction
    multiplicities: np.ndarray
    lambdas: object            # (s,) or None
    s: int
    C: object
    offdiag_residual: float


def principal_decomposition(fb, C=None, seed=DEFAULT_SEED,
                            cluster_tol=CLUSTER_REL_TOL):
    """Spec operation: principal normals with clustering at one point."""
    pb = principal_batch(fb, C=None, seed=seed)
    eta = np.asarray(pb.eta, dtype=float).reshape(fb.n, fb.p)
    eta_cont = np.asarray(pb.eta_cont, dtype=float).reshape(fb.n, -1)
    X = np.asarray(pb.X_chart, dtype=float).reshape(fb.n, fb.n)
    n = fb.n
    thresh = cluster_tol * max(1.0, float(np.sqrt(fb.sff_sq)))

    labels = -np.ones(n, dtype=int)
    reps = []
    for k in range(n):
        for ci, r in enumerate(reps):
            if np.linalg.norm(eta[k] - r) <= thresh:
                labels[k] = ci
                break
        else:
            labels[k] = len(reps)
            reps.append(eta[k])
    s = len(reps)
    mult = np.bincount(labels, minlength=s)
    etas = np.stack([eta[labels == ci].mean(axis=0) for ci in range(s)]) \
        if fb.p > 0 else np.zeros((s, 0))
    etas_cont = np.stack([eta_cont[labels == ci].mean(axis=0)
                          for ci in range(s)])
    lambdas = None
    if C is not None:
        under = np.sum(etas * etas, axis=-1) + C
        if np.any(under <= 0):
            raise HypothesisViolation(
                "|eta_i|^2 + C <= 0: cannot form lambda_i")
        lambdas = 1.0 / np.sqrt(under)
    return PrincipalDecomposition(etas, etas_cont, X, labels, mult, lambdas,
                                  s, C, float(pb.offdiag))


def third_fundamental_form(fb):
    """III(d_i, d_j) = trace over a g-orthonormal slot of <alpha_i., alpha_j.>."""
    return np.einsum("...kl,...ika,...jla->...ij", fb.ginv, fb.alpha, fb.alpha)


@dataclass
class ComparisonMetric:
    g0: np.ndarray
    C: float
    positive_definite: bool


def comparison_metric(fb, III=None, C=None, exploratory=False):
    """g0 = C g + III; requires C > 0 unless exploratory mode is requested."""
    if C is None:
        C = fb.chart.C
    if C is None or (C <= 0 and not exploratory):
        raise HypothesisViolation(
            f"comparison metric needs C > 0 (got {C}); pass exploratory=True "
            "to override")
    if III is None:
        III = third_fundamental_form(fb)
    g0 = C * fb.g + III
    try:
        np.linalg.cholesky(g0)
        pd = True
    except np.linalg.LinAlgError:
        pd = False
    return ComparisonMetric(g0, C, pd)
