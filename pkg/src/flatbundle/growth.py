"""Lengths, distances, geodesic balls, volumes, the metric-comparison
inequality chain, and exponential-growth fitting.

Discrete geodesics are shortest paths on the parameter grid with a
32-direction stencil (axis, diagonal, knight and (3,1)/(3,2) moves); the
worst-case directional overshoot of that stencil is computed exactly and
every strict inequality is asserted with this error budget subtracted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, sparse
from scipy.sparse.csgraph import dijkstra

from .errors import DomainError, HypothesisViolation
from .fields import make_grid
from .fundamental import fundamental_batch
from .principal import DEFAULT_SEED, comparison_metric

DEFAULT_RESOLUTION = 257
_OFFSET_RANGE = 3
_OFFSET_MAX_SQ = 13          # admits (3,2) but not (3,3)


# ---------------------------------------------------------------------------
# stencil geometry

def stencil_offsets(ndim):
    """Primitive integer steps (one per undirected direction) with
    components in [-3, 3] and squared length at most 13."""
    grids = np.meshgrid(*[np.arange(-_OFFSET_RANGE, _OFFSET_RANGE + 1)] * ndim,
                        indexing="ij")
    offs = np.stack(grids, axis=-1).reshape(-1, ndim)
    keep = []
    for o in offs:
        if not o.any() or o @ o > _OFFSET_MAX_SQ:
            continue
        if np.gcd.reduce(np.abs(o)[np.abs(o) > 0]) != 1:
            continue
        nz = o[np.nonzero(o)[0][0]]
        if nz < 0:           # one representative per antipodal pair
            continue
        keep.append(o)
    return np.array(keep)


def stencil_overshoot(offsets):
    """Worst relative excess of the best stencil direction over a straight
    segment: max over unit directions of sec(angle to nearest offset) - 1."""
    dirs = offsets / np.linalg.norm(offsets, axis=1, keepdims=True)
    ndim = offsets.shape[1]
    if ndim == 2:
        ang = np.sort(np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), np.pi))
        ang = np.concatenate([ang, [ang[0] + np.pi]])
        half_gap = 0.5 * np.max(np.diff(ang))
        return 1.0 / math.cos(half_gap) - 1.0
    rng = np.random.default_rng(0)
    v = rng.standard_normal((8192, ndim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    best = np.max(np.abs(v @ dirs.T), axis=1)
    return float(np.max(1.0 / best) - 1.0)


# ---------------------------------------------------------------------------
# distance fields

@dataclass
class DistanceField:
    """Shortest-path distances from one anchor node over a metric grid."""

    grid: object
    anchor_index: tuple
    d: np.ndarray                  # grid-shaped distances
    predecessors: np.ndarray       # flat node index of the previous hop
    metric_label: str
    overshoot: float               # documented stencil error (relative)

    @property
    def anchor_flat(self):
        return int(np.ravel_multi_index(self.anchor_index, self.grid.shape))

    def path_max(self, values):
        """Running max of a node field along every shortest path.

        Returns, per node y, max of ``values`` over the discrete geodesic
        from the anchor to y (the paper's path quantity \\hat S)."""
        flat_d = self.d.ravel()
        flat_v = np.asarray(values, dtype=float).ravel().copy()
        order = np.argsort(flat_d)
        pred = self.predecessors
        for node in order:
            p = pred[node]
            if p >= 0:
                flat_v[node] = max(flat_v[node], flat_v[p])
        return flat_v.reshape(self.d.shape)


def nearest_node(grid, x0):
    """Grid index tuple of the node closest to chart point x0."""
    x0 = np.asarray(x0, dtype=float)
    return tuple(int(np.argmin(np.abs(ax - x0[k])))
                 for k, ax in enumerate(grid.axes))


def _edge_lists(grid):
    """Per-offset (src, dst, midpoint) arrays over the whole grid."""
    shape = grid.shape
    ndim = grid.ndim
    U = grid.points
    idx = np.indices(shape)
    offsets = stencil_offsets(ndim)
    out = []
    for o in offsets:
        valid = np.ones(shape, dtype=bool)
        dst = []
        for k in range(ndim):
            t = idx[k] + o[k]
            if grid.periodic[k]:
                t = t % shape[k]
            else:
                valid &= (t >= 0) & (t < shape[k])
                t = np.clip(t, 0, shape[k] - 1)
            dst.append(t)
        src_flat = np.ravel_multi_index(tuple(idx), shape)[valid]
        dst_flat = np.ravel_multi_index(tuple(dst), shape)[valid]
        disp = o * grid.spacing
        mid = U[valid] + 0.5 * disp
        out.append((src_flat, dst_flat, mid, disp))
    return out


def distance_fields(grid, metric_fns, anchor_index, overshoot=None):
    """Dijkstra distance fields for several metrics sharing one grid graph.

    metric_fns : dict label -> callable(points (..., n)) -> (..., n, n)
    """
    edges = _edge_lists(grid)
    if overshoot is None:
        overshoot = stencil_overshoot(stencil_offsets(grid.ndim))
    n_nodes = int(np.prod(grid.shape))
    src = np.concatenate([e[0] for e in edges])
    dst = np.concatenate([e[1] for e in edges])
    mids = [e[2] for e in edges]
    fields = {}
    for label, fn in metric_fns.items():
        ws = []
        for (s, t, mid, disp), g in zip(edges, (fn(m) for m in mids)):
            ws.append(np.sqrt(np.einsum("i,...ij,j->...", disp, g, disp)))
        w = np.concatenate(ws)
        graph = sparse.coo_matrix((w, (src, dst)), shape=(n_nodes, n_nodes))
        a = int(np.ravel_multi_index(anchor_index, grid.shape))
        d, pred = dijkstra(graph.tocsr(), directed=False, indices=a,
                           return_predecessors=True)
        fields[label] = DistanceField(grid, tuple(anchor_index),
                                      d.reshape(grid.shape), pred, label,
                                      overshoot)
    return fields


def distance_field(grid, metric_fn, anchor_index, label="g"):
    return distance_fields(grid, {label: metric_fn}, anchor_index)[label]


def induced_metric_fn(chart, engine=None):
    def fn(U):
        return fundamental_batch(chart, U, engine=engine,
                                 interior_check=False).g
    return fn


def comparison_metric_fn(chart, C=None, engine=None, exploratory=False):
    def fn(U):
        fb = fundamental_batch(chart, U, engine=engine, interior_check=False)
        return comparison_metric(fb, C=C, exploratory=exploratory).g0
    return fn


# ---------------------------------------------------------------------------
# curve lengths

def curve_length(chart, polyline, metric="g", C=None, engine=None,
                 samples_per_segment=64, exploratory=False):
    """Composite midpoint length of a chart polyline, plus the path max of
    the squared second-fundamental-form norm (the paper's \\hat S).

    metric is "g" (induced) or "g0" (comparison).
    """
    P = np.asarray(polyline, dtype=float)
    if P.ndim != 2 or P.shape[0] < 2:
        raise ValueError("polyline needs at least two chart points")
    if not np.all(chart.contains(P, engine)):
        bad = np.argwhere(~chart.contains(P, engine))[0, 0]
        raise DomainError(
            f"polyline vertex {bad} leaves the domain of {chart.name}")
    t = (np.arange(samples_per_segment) + 0.5) / samples_per_segment
    A, B = P[:-1], P[1:]
    mids = A[:, None, :] + t[None, :, None] * (B - A)[:, None, :]
    fb = fundamental_batch(chart, mids, engine=engine, interior_check=False)
    if metric == "g":
        gm = fb.g
    elif metric == "g0":
        gm = comparison_metric(fb, C=C, exploratory=exploratory).g0
    else:
        raise ValueError(f"unknown metric {metric!r}")
    seg = (B - A) / samples_per_segment
    ds = np.sqrt(np.einsum("si,smij,sj->sm", seg, gm, seg))
    s_hat = float(np.max(fb.sff_sq))
    return float(np.sum(ds)), s_hat


# ---------------------------------------------------------------------------
# balls

def ball_max_sff(df, sff_sq, r):
    """S(r): max squared second-fundamental-form norm over the ball d <= r."""
    if r < 0:
        raise ValueError("ball radius must be non-negative")
    mask = df.d <= r
    if not np.any(mask):
        raise ValueError(f"no grid node within distance {r} of the anchor")
    return float(np.max(np.asarray(sff_sq)[mask]))


def ball_volume(df, sqrt_det_g, r):
    """Riemann sum of the volume density over the ball d <= r.

    Returns (volume, truncated): truncated means the ball touches the grid
    boundary, so the value is a lower bound of the true ball volume.
    """
    if r < 0:
        raise ValueError("ball radius must be non-negative")
    mask = df.d <= r
    vol = float(np.sum(np.asarray(sqrt_det_g)[mask]) * df.grid.cell_volume())
    truncated = False
    for k in range(df.grid.ndim):
        if df.grid.periodic[k]:
            continue
        sl = [slice(None)] * df.grid.ndim
        for edge in (0, -1):
            sl[k] = edge
            truncated |= bool(np.any(mask[tuple(sl)]))
    return vol, truncated


def unit_ball_volume(n):
    """Volume of the Euclidean unit n-ball, pi^(n/2) / Gamma(n/2 + 1)."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def reference_ball_volume(c, n, r):
    """Geodesic ball volume in the simply connected space form of
    curvature c (numerical quadrature of the area of distance spheres)."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    if r == 0:
        return 0.0
    area = n * unit_ball_volume(n)        # unit (n-1)-sphere area
    if c == 0:
        return unit_ball_volume(n) * r ** n
    a = math.sqrt(abs(c))
    if c > 0 and r > math.pi / a:
        raise ValueError("radius exceeds the diameter of the sphere")
    sn = math.sinh if c < 0 else math.sin
    val, _ = integrate.quad(lambda t: (sn(a * t) / a) ** (n - 1), 0.0, r)
    return area * val


# ---------------------------------------------------------------------------
# exponential fit

def fit_exponential(rows, window=None):
    """Least squares of log(value) against r; returns (k, l, r_squared).

    rows : sequence of (r, value) with r strictly increasing.
    window : optional (r_lo, r_hi) restriction.
    """
    rows = [(float(r), float(v)) for r, v in rows]
    rs = np.array([r for r, _ in rows])
    if np.any(np.diff(rs) <= 0):
        raise ValueError("radii must be strictly increasing")
    if window is not None:
        keep = (rs >= window[0]) & (rs <= window[1])
        rows = [rv for rv, k in zip(rows, keep) if k]
    if len(rows) < 4:
        raise ValueError("need at least 4 rows in the fit window")
    r = np.array([x for x, _ in rows])
    v = np.array([y for _, y in rows])
    if np.any(v <= 0):
        raise ValueError("fit values must be positive in the window")
    ell, logk = np.polyfit(r, np.log(v), 1)
    resid = np.log(v) - (ell * r + logk)
    ss_tot = float(np.sum((np.log(v) - np.mean(np.log(v))) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return float(np.exp(logk)), float(ell), r2


# ---------------------------------------------------------------------------
# inequality chain

@dataclass
class ChainVerdict:
    """Outcome of one link of the metric-comparison inequality chain."""

    name: str
    verdict: str          # "pass" | "fail" | "indeterminate" | "skip"
    margin: float         # worst relative slack of the strict inequality
    error_budget: float   # documented discretization error (relative)
    notes: str = ""

    def summary_line(self):
        return (f"{self.name} {self.verdict.upper()} margin={self.margin:.3e} "
                f"budget={self.error_budget:.3e} {self.notes}").rstrip()


def _strict_verdict(name, lhs, rhs, budget, notes=""):
    """Relative verdict for strict inequalities lhs < rhs (elementwise)."""
    lhs, rhs = np.asarray(lhs, float), np.asarray(rhs, float)
    ok = np.isfinite(lhs) & np.isfinite(rhs) & (rhs > 0)
    rel = (rhs[ok] - lhs[ok]) / rhs[ok]
    margin = float(np.min(rel)) if rel.size else math.inf
    if margin > budget:
        verdict = "pass"
    elif margin < -budget:
        verdict = "fail"
    else:
        verdict = "indeterminate"
    return ChainVerdict(name, verdict, margin, budget, notes)


def check_length_inequality(chart, C=None, engine=None, n_curves=20,
                            rng_seed=DEFAULT_SEED, samples_per_segment=64):
    """Strict length comparison on random polylines: the comparison-metric
    length must stay below sqrt(path max |alpha|^2 + C) times the induced
    length."""
    if C is None:
        C = chart.C
    if C is None or C <= 0:
        raise HypothesisViolation("length comparison needs C > 0")
    rng = np.random.default_rng(rng_seed)
    box = np.array(chart.usable_domain(engine))
    lhs, rhs = [], []
    quad_err = 0.0
    for _ in range(n_curves):
        P = box[:, 0] + rng.random((4, chart.n)) * (box[:, 1] - box[:, 0])
        Lg, s_hat = curve_length(chart, P, "g", C=C, engine=engine,
                                 samples_per_segment=samples_per_segment)
        L0, _ = curve_length(chart, P, "g0", C=C, engine=engine,
                             samples_per_segment=samples_per_segment)
        L0c, _ = curve_length(chart, P, "g0", C=C, engine=engine,
                              samples_per_segment=2 * samples_per_segment)
        quad_err = max(quad_err, abs(L0 - L0c) / max(L0, 1e-300))
        lhs.append(L0)
        rhs.append(math.sqrt(s_hat + C) * Lg)
    return _strict_verdict("length_comparison", lhs, rhs,
                           max(3.0 * quad_err, 1e-12),
                           notes=f"{n_curves} random polylines")


def check_distance_inequality(df_g, df_g0, sff_sq, C):
    """Strict distance comparison at every grid node against the anchor."""
    s_path = df_g.path_max(sff_sq)
    rhs = np.sqrt(s_path + C) * df_g.d
    lhs = df_g0.d.copy()
    lhs[df_g.anchor_index] = np.nan       # the anchor itself is vacuous
    budget = df_g.overshoot + df_g0.overshoot
    return _strict_verdict("distance_comparison", lhs, rhs, budget,
                           notes=f"{lhs.size - 1} grid nodes")


def check_ball_containment(df_g, df_g0, sff_sq, C, r):
    """Every node of the induced-metric ball D_r must lie strictly inside
    the comparison-metric ball of radius psi(r) = r sqrt(S(r) + C)."""
    S = ball_max_sff(df_g, sff_sq, r)
    psi = r * math.sqrt(S + C)
    mask = (df_g.d <= r)
    mask[df_g.anchor_index] = False
    budget = df_g.overshoot + df_g0.overshoot
    if not np.any(mask):
        return ChainVerdict(f"ball_containment(r={r:g})", "pass", math.inf,
                            budget, notes="singleton ball")
    lhs = df_g0.d[mask]
    return _strict_verdict(f"ball_containment(r={r:g})", lhs,
                           np.full(lhs.shape, psi), budget,
                           notes=f"{int(np.sum(mask))} ball nodes")


# ---------------------------------------------------------------------------
# the growth report

@dataclass
class GrowthRow:
    r: float
    S: float
    psi: float
    vol: float
    bound: float
    ref_vol: float
    truncated: bool = False


@dataclass
class GrowthReport:
    """Per-radius growth table plus the bound-chain verdicts and the fit.

    The exponential fit is reported, never asserted: a finite patch cannot
    witness the exponential-growth conclusion, only the inequality chain.
    """

    chart_name: str
    x0: np.ndarray
    C: float
    rows: list
    verdicts: list                 # ChainVerdict items
    fit: tuple                     # (k, ell, r_squared) for S(r), or None
    fit_window: object
    warnings: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    CSV_HEADER = "r,S,psi,vol,bound,ref_vol"

    def to_csv(self):
        lines = [self.CSV_HEADER]
        for row in self.rows:
            lines.append(",".join(
                "%.17g" % v for v in (row.r, row.S, row.psi, row.vol,
                                      row.bound, row.ref_vol)))
        return "\n".join(lines) + "\n"

    @property
    def chain_holds(self):
        return all(v.verdict == "pass" for v in self.verdicts)


def default_fit_window(radii):
    """Skip the smallest 20% of radii (the asymptotic regime is existential)."""
    radii = sorted(radii)
    lo = radii[int(math.ceil(0.2 * len(radii)))] if len(radii) > 1 else radii[0]
    return (lo, radii[-1])


def growth_report(chart, x0, radii, window=None, resolution=None, C=None,
                  engine=None, seed=DEFAULT_SEED, exploratory=False,
                  n_test_curves=20):
    """Assemble the full growth table and inequality-chain verdicts.

    Requires the theorem hypotheses C > 0 and flat normal bundle; violations
    raise :class:`HypothesisViolation` (C = 0 is admitted in exploratory
    mode with the bound column left undefined).
    """
    from . import engines as _eng
    engine = engine or chart.engine
    if C is None:
        C = chart.C
    if C is None:
        raise HypothesisViolation(
            f"{chart.name}: intrinsic curvature unasserted, no curvature gap")
    if C < 0 or (C == 0 and not exploratory):
        raise HypothesisViolation(
            f"{chart.name}: curvature gap C = {C:g} violates C > 0"
            + ("" if C < 0 else " (pass exploratory=True for C = 0)"))
    radii = sorted(float(r) for r in radii)
    if not radii or radii[0] <= 0:
        raise ValueError("radii must be positive")

    if resolution is None:
        resolution = DEFAULT_RESOLUTION if chart.n == 2 else 65
    grid = make_grid(chart, resolution, engine=engine)
    fb = fundamental_batch(chart, grid.points, engine=engine,
                           interior_check=False)
    flat_res = float(np.max(fb.flatness_residual()))
    flat_tol = 10.0 * _eng.DEFAULT_TOL[engine]
    if flat_res > flat_tol:
        raise HypothesisViolation(
            f"{chart.name}: normal bundle not flat "
            f"(residual {flat_res:.3e} > {flat_tol:.1e})")

    sff_sq = fb.sff_sq
    sqrt_det_g = np.sqrt(np.linalg.det(fb.g))
    anchor = nearest_node(grid, x0)

    dfs = distance_fields(
        grid,
        {"g": induced_metric_fn(chart, engine),
         "g0": comparison_metric_fn(chart, C, engine, exploratory)},
        anchor)
    df_g, df_g0 = dfs["g"], dfs["g0"]

    warnings = []
    n = chart.n
    omega = unit_ball_volume(n)
    rows = []
    verdicts = []
    if C > 0:
        verdicts.append(check_length_inequality(
            chart, C=C, engine=engine, n_curves=n_test_curves, rng_seed=seed))
        verdicts.append(check_distance_inequality(df_g, df_g0, sff_sq, C))
    else:
        verdicts.append(ChainVerdict("length_comparison", "skip", math.nan,
                                     math.nan, "C = 0 (exploratory)"))
        verdicts.append(ChainVerdict("distance_comparison", "skip", math.nan,
                                     math.nan, "C = 0 (exploratory)"))

    budget_vol = 2.0 * df_g.overshoot
    for r in radii:
        S = ball_max_sff(df_g, sff_sq, r)
        psi = r * math.sqrt(S + C)
        vol, truncated = ball_volume(df_g, sqrt_det_g, r)
        if truncated:
            warnings.append(
                f"ball r={r:g} touches the domain boundary; its volume is a "
                "lower bound only")
        bound = (r ** n * (1.0 + S / C) ** (n / 2.0) * omega
                 if C > 0 else math.nan)
        ref = (reference_ball_volume(chart.c, n, r)
               if chart.c is not None else math.nan)
        rows.append(GrowthRow(r, S, psi, vol, bound, ref, truncated))
        if C > 0:
            verdicts.append(
                check_ball_containment(df_g, df_g0, sff_sq, C, r))
            verdicts.append(_strict_verdict(
                f"volume_bound(r={r:g})", [vol], [bound], budget_vol,
                notes="truncated ball (lower bound)" if truncated else ""))

    fit = None
    fit_window = window or default_fit_window(radii)
    try:
        fit = fit_exponential([(row.r, row.S) for row in rows], fit_window)
    except ValueError as exc:
        warnings.append(f"exponential fit skipped: {exc}")

    meta = dict(engine=engine, seed=seed, resolution=resolution,
                anchor=tuple(anchor), C=C,
                stencil_overshoot=df_g.overshoot,
                flatness_residual=flat_res,
                cell_volume=grid.cell_volume())
    return GrowthReport(chart.name, np.asarray(x0, dtype=float), C, rows,
                        verdicts, fit, fit_window, warnings, meta)
