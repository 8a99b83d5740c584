"""Sampled fields on rectangular parameter grids.

Derived per-point quantities (principal normals, directions, lambdas, the
comparison metric) only exist after a pointwise eigen-decomposition, so
their derivatives are always taken by order-4 finite differences on the
grid, regardless of the chart engine.  This module also fixes the discrete
gauge: directions are ordered by the continuous eigenvalue order of the
weighted shape operator and signed coherently along a spanning raster path
from the grid origin; points where the alignment is ambiguous are masked
and counted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fundamental import fundamental_batch
from .principal import principal_batch

ALIGN_AMBIGUOUS = 1e-3   # two alignment candidates closer than this: flag
ALIGN_MIN = 0.7          # below this diagonal overlap the gauge is incoherent


@dataclass
class Grid:
    axes: tuple          # per-axis 1d coordinate arrays
    spacing: np.ndarray
    periodic: tuple

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def ndim(self):
        return len(self.axes)

    @property
    def points(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def cell_volume(self):
        return float(np.prod(self.spacing))


def make_grid(chart, resolution, engine=None, box=None):
    """Uniform grid over the chart's usable domain (or a given sub-box).

    Periodic axes sample [lo, hi) without the duplicate endpoint.
    """
    if np.isscalar(resolution):
        resolution = (int(resolution),) * chart.n
    box = tuple(box) if box is not None else chart.usable_domain(engine)
    axes, spacing = [], []
    for k, ((lo, hi), r) in enumerate(zip(box, resolution)):
        if chart.periodic[k]:
            h = (hi - lo) / r
            axes.append(lo + h * np.arange(r))
        else:
            h = (hi - lo) / (r - 1)
            axes.append(np.linspace(lo, hi, r))
        spacing.append(h)
    return Grid(tuple(axes), np.array(spacing), tuple(chart.periodic))


def grid_deriv(A, axis, h, periodic):
    """Order-4 central difference along a grid axis of a sampled field.

    Non-periodic axes get NaN in the two-cell stencil margin, which poisons
    any residual computed there; callers reduce over finite entries only.
    """
    def r(k):
        return np.roll(A, -k, axis=axis)

    d = (-r(2) + 8.0 * r(1) - 8.0 * r(-1) + r(-2)) / (12.0 * h)
    if not periodic:
        sl = [slice(None)] * A.ndim
        for bad in (slice(0, 2), slice(-2, None)):
            sl[axis] = bad
            d[tuple(sl)] = np.nan
            sl[axis] = slice(None)
    return d


@dataclass
class PrincipalField:
    """Coherently gauged principal data sampled on a grid."""

    chart: object
    grid: Grid
    fb: object               # FundamentalBatch over the grid
    pb: object               # PrincipalBatch (eigen order, coherent signs)
    coherent: np.ndarray     # bool mask of gauge-trustworthy points
    n_incoherent: int
    engine: str

    @property
    def n(self):
        return self.chart.n

    def dfield(self, A, axis):
        """Grid derivative of a sampled array whose leading dims are the grid."""
        return grid_deriv(A, axis, self.grid.spacing[axis],
                          self.grid.periodic[axis])

    def directional(self, A, X_comp):
        """Derivative of field A along a tangent direction given by chart
        components X_comp of shape grid+(n,).  A has grid leading dims."""
        out = None
        for m in range(self.n):
            dm_ = self.dfield(A, m)
            coef = X_comp[..., m]
            coef = coef.reshape(coef.shape + (1,) * (A.ndim - self.grid.ndim))
            term = coef * dm_
            out = term if out is None else out + term
        return out


def _alignment_matrices(X_cont, signature, axis):
    """Q[..., k, l] = <X_k(u), X_l(u_next)> along a grid axis."""
    nxt = np.roll(X_cont, -1, axis=axis)
    return np.einsum("...kN,...lN->...kl", X_cont * signature, nxt)


def _signed_permutation(Q):
    """Greedy signed-permutation approximation of alignment matrices Q.

    Returns (P, ambiguous): X_aligned(next) = P @ X_raw(next) matches the
    current point's labels; ambiguous flags points where the best and
    second-best candidate for some direction are too close to call.
    """
    n = Q.shape[-1]
    absQ = np.abs(Q)
    # rowwise ambiguity: best and runner-up candidate too close to call
    if n > 1:
        top2 = -np.sort(-absQ, axis=-1)[..., :2]
        ambiguous = np.any(top2[..., 0] - top2[..., 1] < ALIGN_AMBIGUOUS,
                           axis=-1)
    else:
        ambiguous = np.zeros(Q.shape[:-2], dtype=bool)
    P = np.zeros_like(Q)
    flat = absQ.reshape(Q.shape[:-2] + (n * n,)).copy()
    Qflat = Q.reshape(flat.shape)
    for _ in range(n):
        idx = np.argmax(flat, axis=-1)
        k, l = idx // n, idx % n
        sgn = np.sign(np.take_along_axis(Qflat, idx[..., None], axis=-1)[..., 0])
        np.put_along_axis(P.reshape(flat.shape), idx[..., None],
                          np.where(sgn == 0, 1.0, sgn)[..., None], axis=-1)
        rows = k[..., None] * n + np.arange(n)
        cols = np.arange(n) * n + l[..., None]
        np.put_along_axis(flat, rows, -np.inf, axis=-1)
        np.put_along_axis(flat, cols, -np.inf, axis=-1)
    return P, ambiguous


def principal_field(chart, grid, C=None, engine=None, seed=None):
    """Sample fundamental + principal data on the grid with a coherent gauge."""
    from .principal import DEFAULT_SEED
    engine = engine or chart.engine
    seed = DEFAULT_SEED if seed is None else seed
    U = grid.points
    fb = fundamental_batch(chart, U, engine=engine, interior_check=False)
    pb = principal_batch(fb, C=C, seed=seed, order="raw")

    sig = chart.ambient.signature
    n = chart.n
    shape = grid.shape
    ndim = grid.ndim

    # gauge transform M per point, accumulated edge by edge along the raster
    # spanning path from the grid origin (axis 0 first with later axes at 0,
    # then axis 1 at fixed axis-0 index, and so on)
    M = np.broadcast_to(np.eye(n), shape + (n, n)).copy()
    for ax in range(ndim):
        Q = _alignment_matrices(pb.X_cont, sig, ax)
        P, _ = _signed_permutation(Q)
        pin = (0,) * (ndim - ax - 1)
        for i in range(1, shape[ax]):
            pre = (slice(None),) * ax
            cur = pre + (i,) + pin
            prv = pre + (i - 1,) + pin
            M[cur] = M[prv] @ P[prv]

    pb.X_chart = np.einsum("...kl,...lm->...km", M, pb.X_chart)
    pb.X_cont = np.einsum("...kl,...lN->...kN", M, pb.X_cont)
    perm = np.abs(M)                       # permutation part for label data
    pb.eta = np.einsum("...kl,...la->...ka", perm, pb.eta)
    pb.eta_cont = np.einsum("...kl,...lN->...kN", perm, pb.eta_cont)
    pb.eta_sq = np.einsum("...kl,...l->...k", perm, pb.eta_sq)
    if pb.lambdas is not None:
        pb.lambdas = np.einsum("...kl,...l->...k", perm, pb.lambdas)

    # relabel globally so the origin follows the canonical norm-descending
    # order (stable goldens); a global permutation keeps coherence intact
    origin = (0,) * ndim
    key = np.argsort(-pb.eta_sq[origin], kind="stable")
    lead = np.take_along_axis(
        pb.X_chart[origin][key],
        np.argmax(np.abs(pb.X_chart[origin][key]), axis=-1)[..., None],
        axis=-1)[..., 0]
    flip = np.where(lead < 0, -1.0, 1.0)
    pb.X_chart = pb.X_chart[..., key, :] * flip[:, None]
    pb.X_cont = pb.X_cont[..., key, :] * flip[:, None]
    pb.eta = pb.eta[..., key, :]
    pb.eta_cont = pb.eta_cont[..., key, :]
    pb.eta_sq = pb.eta_sq[..., key]
    if pb.lambdas is not None:
        pb.lambdas = pb.lambdas[..., key]

    # verify the gauge: neighbors must overlap strongly and positively on
    # the diagonal; points adjacent to a seam or an ambiguous alignment are
    # masked and counted
    coherent = np.ones(shape, dtype=bool)
    for ax in range(ndim):
        Q = _alignment_matrices(pb.X_cont, sig, ax)
        _, ambiguous = _signed_permutation(Q)
        diag = np.einsum("...kk->...k", Q)
        bad = np.any(diag < ALIGN_MIN, axis=-1) | ambiguous
        if not grid.periodic[ax]:
            sl = [slice(None)] * ndim
            sl[ax] = slice(-1, None)
            bad[tuple(sl)] = False
        coherent &= ~bad
        coherent &= ~np.roll(bad, 1, axis=ax)

    return PrincipalField(chart, grid, fb, pb, coherent,
                          int(np.sum(~coherent)), engine)
