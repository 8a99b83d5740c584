"""Flows of the scaled principal directions Y_i = lambda_i X_i and the
coordinate map they generate.

The vector fields only exist after a pointwise eigen-decomposition, so each
integration step re-decomposes and aligns the frame to the trajectory's
running gauge (signed permutation of maximal container overlap).  All
trajectory work is batched: one RK4 step advances every live trajectory at
once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CoherenceError, DomainExitError, HypothesisViolation
from .fields import Grid, _signed_permutation, grid_deriv, principal_field
from .fundamental import fundamental_batch
from .principal import (DEFAULT_SEED, comparison_metric, principal_batch,
                        principal_decomposition)
from .verifiers import _report

DEFAULT_STEP = 0.02
MAX_BOX_SHRINKS = 8
BOX_SHRINK = 0.8


def _canonical_gauge(pb):
    """Norm-descending order with positive leading chart component."""
    key = np.argsort(-pb.eta_sq, axis=-1, kind="stable")
    _apply_perm_key(pb, key)
    lead = np.take_along_axis(
        pb.X_chart, np.argmax(np.abs(pb.X_chart), axis=-1)[..., None],
        axis=-1)[..., 0]
    flip = np.where(lead < 0, -1.0, 1.0)
    _apply_signs(pb, flip)


def _apply_perm_key(pb, key):
    pb.X_chart = np.take_along_axis(pb.X_chart, key[..., None], axis=-2)
    pb.X_cont = np.take_along_axis(pb.X_cont, key[..., None], axis=-2)
    pb.eta = np.take_along_axis(pb.eta, key[..., None], axis=-2)
    pb.eta_cont = np.take_along_axis(pb.eta_cont, key[..., None], axis=-2)
    pb.eta_sq = np.take_along_axis(pb.eta_sq, key, axis=-1)
    if pb.lambdas is not None:
        pb.lambdas = np.take_along_axis(pb.lambdas, key, axis=-1)


def _apply_signs(pb, s):
    pb.X_chart = pb.X_chart * s[..., None]
    pb.X_cont = pb.X_cont * s[..., None]


def aligned_principal(chart, U, C=None, refs=None, engine=None,
                      seed=DEFAULT_SEED):
    """Principal decomposition at U, gauge-aligned to reference frames.

    refs : (..., n, N) container direction frames to match (label and sign
           by maximal overlap), or None for the canonical pointwise gauge.
    """
    if C is None:
        C = chart.C
    fb = fundamental_batch(chart, U, engine=engine, interior_check=False)
    pb = principal_batch(fb, C=C, seed=seed, order="raw")
    if refs is None:
        _canonical_gauge(pb)
        return pb, fb
    sig = chart.ambient.signature
    Q = np.einsum("...kN,...lN->...kl", refs * sig, pb.X_cont)
    P, _ = _signed_permutation(Q)
    pb.X_chart = np.einsum("...kl,...lm->...km", P, pb.X_chart)
    pb.X_cont = np.einsum("...kl,...lN->...kN", P, pb.X_cont)
    perm = np.abs(P)
    pb.eta = np.einsum("...kl,...la->...ka", perm, pb.eta)
    pb.eta_cont = np.einsum("...kl,...lN->...kN", perm, pb.eta_cont)
    pb.eta_sq = np.einsum("...kl,...l->...k", perm, pb.eta_sq)
    if pb.lambdas is not None:
        pb.lambdas = np.einsum("...kl,...l->...k", perm, pb.lambdas)
    return pb, fb


def _velocity(pb, i):
    """Chart components of Y_i = lambda_i X_i; i is a scalar or (...,) array."""
    if pb.lambdas is None:
        raise HypothesisViolation("flow fields need a known curvature gap C")
    Y = pb.lambdas[..., None] * pb.X_chart      # (..., n, n)
    if np.isscalar(i):
        return Y[..., i, :]
    return np.take_along_axis(Y, i[..., None, None], axis=-2)[..., 0, :]


def flow_points(chart, U0, i, t, C=None, refs=None, step=DEFAULT_STEP,
                engine=None, seed=DEFAULT_SEED):
    """Advance each point of U0 (M, n) by its own parameter time t along
    the i-th scaled principal direction field.

    Every trajectory carries its own frame gauge: RK4 stage decompositions
    are aligned to the frame at the step's start point, and the gauge is
    refreshed after each accepted step.  Leaving the chart's usable domain
    raises :class:`DomainExitError` with the elapsed time and last point.

    Returns (U1, refs1).
    """
    U = np.array(U0, dtype=float)
    M = U.shape[0]
    remaining = np.broadcast_to(np.asarray(t, dtype=float), (M,)).copy()
    elapsed = np.zeros(M)
    i = i if np.isscalar(i) else np.asarray(i)

    def decompose(V, ref):
        if not np.all(chart.contains(V, engine, interior=True)):
            bad = ~chart.contains(V, engine, interior=True)
            k = int(np.argmax(bad))
            raise DomainExitError(
                f"flow left the usable domain of {chart.name}",
                exit_time=float(elapsed[k]), last_point=U[k].copy())
        return aligned_principal(chart, V, C=C, refs=ref, engine=engine,
                                 seed=seed)

    pb, _ = decompose(U, refs)
    refs = pb.X_cont
    while np.any(remaining != 0.0):
        dt = np.clip(remaining, -step, step)[:, None]
        k1 = _velocity(pb, i)
        p2, _ = decompose(U + 0.5 * dt * k1, refs)
        k2 = _velocity(p2, i)
        p3, _ = decompose(U + 0.5 * dt * k2, refs)
        k3 = _velocity(p3, i)
        p4, _ = decompose(U + dt * k3, refs)
        k4 = _velocity(p4, i)
        U = U + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        elapsed += dt[:, 0]
        remaining -= dt[:, 0]
        pb, _ = decompose(U, refs)
        refs = pb.X_cont
    return U, refs


def integrate_flow(chart, x0, i, t, C=None, step=DEFAULT_STEP, engine=None,
                   seed=DEFAULT_SEED):
    """Single-trajectory convenience wrapper; returns the endpoint."""
    U1, _ = flow_points(chart, np.asarray(x0, dtype=float)[None, :], i, t,
                        C=C, step=step, engine=engine, seed=seed)
    return U1[0]


@dataclass
class FlowMap:
    """Candidate principal coordinates: F(t) = flow of axis n-1 after ...
    after flow of axis 0 from the base point."""

    chart: object
    x0: np.ndarray
    t_axes: tuple               # per-axis 1d parameter-time arrays
    points: np.ndarray          # (res_1, ..., res_n, n) chart coordinates
    C: float
    step: float
    seed: int
    warnings: list = field(default_factory=list)

    @property
    def n(self):
        return self.chart.n

    @property
    def t_spacing(self):
        return np.array([ax[1] - ax[0] for ax in self.t_axes])


def _march_axis(chart, A, refs, ax, t_vals, C, step, engine, seed):
    """From each point in A (M, n), record the axis-``ax`` flow at every
    parameter time in t_vals.  Returns points (T, M, n), refs (T, M, n, N)."""
    M = A.shape[0]
    T = len(t_vals)
    out = np.empty((T, M, A.shape[1]))
    outref = np.empty((T, M) + refs.shape[1:])
    order = np.argsort(t_vals)
    neg = [k for k in order if t_vals[k] < 0][::-1]
    pos = [k for k in order if t_vals[k] >= 0]
    for chain in (pos, neg):
        U, R, t_prev = A, refs, 0.0
        for k in chain:
            dt = t_vals[k] - t_prev
            if dt != 0.0:
                U, R = flow_points(chart, U, ax, dt, C=C, refs=R, step=step,
                                   engine=engine, seed=seed)
            out[k], outref[k] = U, R
            t_prev = t_vals[k]
    return out, outref


def build_flow_map(chart, x0, t_box, resolution, C=None, step=DEFAULT_STEP,
                   engine=None, seed=DEFAULT_SEED):
    """Sample F(t_1, ..., t_n) on a parameter-time grid.

    ``t_box`` gives per-axis (lo, hi) time ranges and ``resolution`` the
    number of samples per axis.  If a flow exits the chart's usable domain
    the whole box is shrunk toward zero and the construction retried; the
    shrink is recorded as a warning.
    """
    if C is None:
        C = chart.C
    x0 = np.asarray(x0, dtype=float)
    n = chart.n
    if np.isscalar(resolution):
        resolution = (int(resolution),) * n
    t_box = [tuple(b) for b in t_box]
    warnings = []
    for attempt in range(MAX_BOX_SHRINKS + 1):
        t_axes = tuple(np.linspace(lo, hi, r)
                       for (lo, hi), r in zip(t_box, resolution))
        try:
            A = x0[None, :]
            pb, _ = aligned_principal(chart, A, C=C, engine=engine, seed=seed)
            refs = pb.X_cont
            dims = ()
            for ax in range(n):
                M = A.shape[0]
                out, outref = _march_axis(chart, A, refs, ax, t_axes[ax],
                                          C, step, engine, seed)
                dims = dims + (len(t_axes[ax]),)
                A = np.moveaxis(out.reshape((len(t_axes[ax]),) + dims[:-1]
                                            + (n,)), 0, ax).reshape(-1, n)
                refs = np.moveaxis(
                    outref.reshape((len(t_axes[ax]),) + dims[:-1]
                                   + outref.shape[2:]), 0, ax
                ).reshape((-1,) + outref.shape[2:])
            points = A.reshape(dims + (n,))
            return FlowMap(chart, x0, t_axes, points, C, step, seed, warnings)
        except DomainExitError as exc:
            warnings.append(
                f"axis box {t_box} exits the domain at t={exc.exit_time:.3g}; "
                f"shrinking by {BOX_SHRINK}")
            t_box = [(lo * BOX_SHRINK, hi * BOX_SHRINK) for lo, hi in t_box]
    raise DomainExitError(
        f"flow map box for {chart.name} still exits the domain after "
        f"{MAX_BOX_SHRINKS} shrinks", exit_time=None, last_point=None)


def check_flow_identities(chart, x0, t_range, n_pairs=100, C=None,
                          step=DEFAULT_STEP, engine=None, seed=DEFAULT_SEED,
                          rng_seed=None):
    """One-parameter group law and pairwise commutation of the flows.

    For ``n_pairs`` random draws (t, s) in ``t_range`` and random axis
    pairs (i, j), compares in chart coordinates:

    * additivity: flow_i(t) then flow_i(s)  vs  flow_i(t + s)
    * commutation: flow_i(t) then flow_j(s)  vs  flow_j(s) then flow_i(t)

    Returns a ResidualReport over both families.
    """
    if C is None:
        C = chart.C
    x0 = np.asarray(x0, dtype=float)
    n = chart.n
    rng = np.random.default_rng(seed if rng_seed is None else rng_seed)
    t = rng.uniform(t_range[0], t_range[1], n_pairs)
    s = rng.uniform(t_range[0], t_range[1], n_pairs)
    i = rng.integers(0, n, n_pairs)
    j = (i + rng.integers(1, n, n_pairs)) % n if n > 1 else i

    U0 = np.broadcast_to(x0, (n_pairs, n)).copy()
    kw = dict(C=C, step=step, engine=engine, seed=seed)

    Ut, Rt = flow_points(chart, U0, i, t, **kw)
    Uts, _ = flow_points(chart, Ut, i, s, refs=Rt, **kw)
    Usum, _ = flow_points(chart, U0, i, t + s, **kw)
    add = np.max(np.abs(Uts - Usum), axis=-1)

    Uij, _ = flow_points(chart, Ut, j, s, refs=Rt, **kw)
    Us, Rs = flow_points(chart, U0, j, s, **kw)
    Uji, _ = flow_points(chart, Us, i, t, refs=Rs, **kw)
    comm = np.max(np.abs(Uij - Uji), axis=-1)

    from .engines import DEFAULT_TOL
    eng = engine or chart.engine
    tol = 1e-6 if eng == "ad" else DEFAULT_TOL[eng]
    return _report("flow_group_law", np.concatenate([add, comm]), tol, eng,
                   notes=f"{n_pairs} random (t, s) pairs in {t_range}")


def commutator_residual(chart, u0, C=None, h=None, engine=None,
                        seed=DEFAULT_SEED):
    """Max g-norm of [Y_i, Y_j] at u0 from a local finite-difference stencil,
    relative to max(1, |alpha|)."""
    if C is None:
        C = chart.C
    u0 = np.asarray(u0, dtype=float)
    n = chart.n
    if h is None:
        h = 1e-2 * min(hi - lo for lo, hi in chart.domain)
    axes = tuple(u0[k] + h * np.arange(-2, 3) for k in range(n))
    grid = Grid(axes, np.full(n, h), (False,) * n)
    pf = principal_field(chart, grid, C=C, engine=engine, seed=seed)
    if not np.all(pf.coherent):
        raise CoherenceError(
            f"principal gauge incoherent on the local stencil at {u0}")
    Y = pf.pb.lambdas[..., None] * pf.pb.X_chart          # grid + (n, n)
    dY = np.stack([pf.dfield(Y, m) for m in range(n)], axis=-3)
    center = (2,) * n
    Yc, dYc = Y[center], dY[center]                        # (n,n), (n,n,n)
    g = pf.fb.g[center]
    scale = max(1.0, float(np.sqrt(pf.fb.sff_sq[center])))
    worst = 0.0
    for a in range(n):
        for b in range(a + 1, n):
            br = np.einsum("m,mk->k", Yc[a], dYc[:, b, :]) \
                - np.einsum("m,mk->k", Yc[b], dYc[:, a, :])
            worst = max(worst, float(np.sqrt(br @ g @ br)) / scale)
    return worst


def verify_principal_frame_property(flow_map, engine=None, seed=DEFAULT_SEED):
    """Check that the flow map is a principal-coordinate chart.

    The parameter-time Jacobian columns J_ax (grid finite differences of
    the mapped points) must satisfy, at every interior grid node:

    * orthonormality: sqrt(|eta|^2 + C)-scaled columns are g-orthonormal
    * alignment: each column is parallel to a principal direction
    * pullback: the columns are orthonormal for the comparison metric g0

    Requires n distinct principal normals at the base point; raises
    :class:`HypothesisViolation` otherwise.  Returns a dict of
    ResidualReports keyed by check name.
    """
    chart = flow_map.chart
    C = flow_map.C
    eng = engine or chart.engine
    n = chart.n

    fb0 = fundamental_batch(chart, flow_map.x0, engine=eng,
                            interior_check=False)
    dec = principal_decomposition(fb0, C=C, seed=seed)
    if dec.s < n:
        raise HypothesisViolation(
            f"only {dec.s} distinct principal normals at the base point "
            f"(need {n}): flow map is not a coordinate candidate")

    U = flow_map.points
    ht = flow_map.t_spacing
    J = np.stack([grid_deriv(U, ax, ht[ax], periodic=False)
                  for ax in range(n)], axis=-2)            # grid + (ax, k)

    pb, fb = aligned_principal(chart, U, C=C, engine=eng, seed=seed)
    g = fb.g
    JgJ = np.einsum("...ak,...kl,...bl->...ab", J, g, J)
    norms = np.sqrt(np.einsum("...aa->...a", JgJ))

    # match Jacobian columns to principal directions by maximal overlap
    O = np.einsum("...ak,...kl,...bl->...ab", J, g, pb.X_chart)
    match = np.argmax(np.abs(O), axis=-1)                   # grid + (ax,)
    align = 1.0 - np.abs(np.take_along_axis(O, match[..., None], axis=-1)
                         [..., 0]) / norms
    align = np.max(align, axis=-1)

    eta_sq = np.take_along_axis(pb.eta_sq, match, axis=-1)
    scale = np.sqrt(eta_sq + C)
    Mmat = scale[..., :, None] * scale[..., None, :] * JgJ
    ortho = np.max(np.abs(Mmat - np.eye(n)), axis=(-2, -1))

    g0 = comparison_metric(fb, C=C).g0
    P = np.einsum("...ak,...kl,...bl->...ab", J, g0, J)
    pull = np.max(np.abs(P - np.eye(n)), axis=(-2, -1))

    from .engines import DEFAULT_TOL
    base = DEFAULT_TOL[eng]
    hmax = float(np.max(ht))
    fd_floor = 100.0 * hmax ** 4
    tol_frame = max(1e-3, fd_floor)
    notes = f"grid {U.shape[:-1]}, t-spacing max {hmax:.3g}"
    return {
        "frame_orthonormality": _report(
            "frame_orthonormality", ortho, tol_frame, eng, notes=notes),
        "frame_alignment": _report(
            "frame_alignment", align, tol_frame, eng, notes=notes),
        "pullback_identity": _report(
            "pullback_identity", pull, max(1e-3, fd_floor), eng, notes=notes),
    }
