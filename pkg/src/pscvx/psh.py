"""Distributional plurisubharmonicity checks.

Test functions are C^2 bumps ``alpha = s (1 - |x - c|^2 / r^2)^3``. Three
quadratures are provided:

* the 1-D jump identity ``int (phi alpha'' - phi'' alpha) = sum jump * alpha``
  with midpoint cells split at kinks;
* the per-axis inequality, reduced to 1-D chords by Fubini;
* the complex-line pairing ``2 int phi L alpha(xi, xi)``, evaluated on a grid
  whose first two axes are ``Re xi`` and ``Re(i xi)``. There ``L alpha`` is
  taken as second differences of ``alpha`` on the grid, so the discrete pairing
  equals ``sum (second differences of phi) * alpha`` exactly. Exact derivatives
  of ``alpha`` would put the C^2 seam of the bump across grid cells, where the
  midpoint rule has O(1) error at 16 cells per axis.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import gamma

from . import domain as dm
from .barrier import compute_lambda, phi_from_rho
from .errors import DiscExitsRegion, OnEdge, QuadratureUnderflow, UnlistedKink
from .expr import eval_jet, parse
from .hermitian import levi_form, min_eigenpairs
from .jets import complex_structure, to_complex, to_real

MIN_CELLS = 16
MARGIN_TOL = 1e-6
EIG_TOL = 1e-8


# ---------------------------------------------------------------------------
# test functions

def bump_mass(n, radius):
    """Integral of (1 - |x|^2/r^2)^3 over the ball of radius r in R^n."""
    sphere = 2.0 * math.pi ** (n / 2) / gamma(n / 2)
    return 0.5 * beta_fn(n / 2, 4) * sphere * radius**n


@dataclass(frozen=True)
class Bump:
    center: tuple
    radius: float
    scale: float = 1.0

    @classmethod
    def unit_mass(cls, center, radius):
        c = tuple(float(v) for v in np.atleast_1d(center))
        return cls(c, float(radius), 1.0 / bump_mass(len(c), radius))

    @property
    def c(self):
        return np.asarray(self.center, dtype=float)

    @property
    def dim(self):
        return len(self.center)

    @property
    def mass(self):
        return self.scale * bump_mass(self.dim, self.radius)

    def _q(self, x):
        d = np.asarray(x, dtype=float) - self.c
        return d, np.clip(1.0 - np.sum(d * d, axis=-1) / self.radius**2, 0.0, None)

    def value(self, x):
        _, q = self._q(x)
        return self.scale * q**3

    def gradient(self, x):
        d, q = self._q(x)
        return self.scale * (-6.0 / self.radius**2) * (q**2)[..., None] * d

    def hessian(self, x):
        d, q = self._q(x)
        r2 = self.radius**2
        outer = d[..., :, None] * d[..., None, :]
        eye = np.eye(self.dim)
        return self.scale * (24.0 / r2**2 * q[..., None, None] * outer
                             - 6.0 / r2 * (q**2)[..., None, None] * eye)

    def second(self, x, u):
        """Second derivative along the vector ``u``."""
        d, q = self._q(x)
        u = np.asarray(u, dtype=float)
        r2 = self.radius**2
        du = d @ u
        return self.scale * (24.0 / r2**2 * q * du**2 - 6.0 / r2 * q**2 * (u @ u))


# ---------------------------------------------------------------------------
# fields

class Field:
    """Scalar field: values everywhere, jets off the kink set, piece labels."""

    def value(self, x):
        raise NotImplementedError

    def jet(self, x):
        raise NotImplementedError

    def label(self, x):
        return np.zeros(np.shape(x)[:-1], dtype=int)


@dataclass(frozen=True)
class ExprField(Field):
    expr: object

    def value(self, x):
        from .expr import evaluate

        return evaluate(self.expr, np.asarray(x, dtype=float))

    def jet(self, x):
        return eval_jet(self.expr, np.asarray(x, dtype=float))


@dataclass(frozen=True)
class PiecewiseField(Field):
    """Field given by pieces with sign regions (ambient variables)."""

    pieces: tuple  # domain.Piece values
    tol: float = 1e-12

    @classmethod
    def from_text(cls, pieces, nvars):
        return cls(tuple(dm.make_piece(h, region, nvars) for h, region in pieces))

    def label(self, x):
        x = np.asarray(x, dtype=float)
        m = np.stack([p.region_margin(x) for p in self.pieces], axis=-1)
        return np.argmax(m, axis=-1)

    def value(self, x):
        from .expr import evaluate

        x = np.asarray(x, dtype=float)
        lab = self.label(x)
        out = np.empty(x.shape[:-1])
        for i, p in enumerate(self.pieces):
            mask = lab == i
            if np.any(mask):
                out[mask] = evaluate(p.h, x[mask])
        return out

    def piece_jet(self, i, x):
        return eval_jet(self.pieces[i].h, np.asarray(x, dtype=float))

    def jet(self, x):
        x = np.asarray(x, dtype=float)
        m = np.stack([p.region_margin(x) for p in self.pieces], axis=-1)
        if np.any(np.max(m, axis=-1) <= self.tol):
            raise OnEdge("field evaluated on its kink set")
        lab = np.argmax(m, axis=-1)
        if x.ndim == 1:
            return self.piece_jet(int(lab), x)
        return dm.gather_jets(self.piece_jet, lab, x)


@dataclass(frozen=True, eq=False)
class BarrierField(Field):
    """``-log(-rho) + lam |z|^2`` for a chart, with the chart's pieces as labels."""

    chart: object
    lam: float

    def label(self, x):
        y = self.chart.to_chart(x)
        return np.argmax(self.chart.region_margins(y[..., :-1]), axis=-1)

    def value(self, x, y=None):
        """Barrier values; ``y`` may pass the chart coordinates of ``x`` if known."""
        x = np.asarray(x, dtype=float)
        ch = self.chart
        if ch.defining_function is not None:
            from .expr import evaluate

            rho = evaluate(ch.defining_function, x)
        else:
            y = ch.to_chart(x) if y is None else y
            rho = ch.h(y[..., :-1]) - y[..., -1]
        with np.errstate(invalid="ignore", divide="ignore"):
            out = -np.log(-rho) + self.lam * np.sum(x * x, axis=-1)
        return np.where(rho < 0, out, np.inf)

    def jet(self, x):
        x = np.asarray(x, dtype=float)
        return phi_from_rho(self.chart.barrier_rho_jet(x), self.lam, x)

    def piece_jet(self, i, x):
        x = np.asarray(x, dtype=float)
        return phi_from_rho(self.chart.piece_barrier_rho_jet(i, x), self.lam, x)


@dataclass(frozen=True)
class Piecewise1D:
    """Function on R given by expressions in ``x1`` between sorted break points."""

    breaks: tuple
    exprs: tuple

    @classmethod
    def from_text(cls, breaks, exprs):
        if len(exprs) != len(breaks) + 1:
            raise ValueError("need one expression per interval")
        return cls(tuple(float(b) for b in breaks), tuple(parse(e, 1) for e in exprs))

    def _index(self, x):
        return np.searchsorted(np.asarray(self.breaks), x, side="right")

    def derivs(self, x):
        """Value, first and second derivative (right-continuous at breaks)."""
        x = np.asarray(x, dtype=float)
        idx = self._index(x)
        v = np.empty(x.shape)
        d1 = np.empty(x.shape)
        d2 = np.empty(x.shape)
        for i, e in enumerate(self.exprs):
            mask = idx == i
            if np.any(mask):
                j = eval_jet(e, x[mask][:, None])
                v[mask], d1[mask], d2[mask] = j.value, j.gradient[:, 0], j.hessian[:, 0, 0]
        return v, d1, d2

    def one_sided(self, a):
        """(phi'(a-), phi'(a+))."""
        i = int(self._index(np.asarray(a)))
        left = eval_jet(self.exprs[max(i - 1, 0) if a in self.breaks else i], np.array([[a]]))
        right = eval_jet(self.exprs[i], np.array([[a]]))
        return float(left.gradient[0, 0]), float(right.gradient[0, 0])

    def __call__(self, x):
        return self.derivs(x)[0]


# ---------------------------------------------------------------------------
# 1-D jump identity

@dataclass(frozen=True)
class JumpIdentity:
    lhs: float
    rhs: float

    @property
    def residual(self):
        return abs(self.lhs - self.rhs)


def _split_midpoint(lo, hi, cells, cuts):
    """Midpoint nodes and weights on [lo, hi] with cells split at ``cuts``."""
    edges = np.linspace(lo, hi, cells + 1)
    edges = np.unique(np.concatenate([edges, [c for c in cuts if lo < c < hi]]))
    return 0.5 * (edges[1:] + edges[:-1]), np.diff(edges)


def scan_kinks(phi, lo, hi, cells, rel=1e-6):
    """Locations where the slope of ``phi`` jumps, from second differences of values."""
    x = np.linspace(lo, hi, 4 * cells + 1)
    h = x[1] - x[0]
    v = phi(x)
    s = np.diff(v) / h
    ds = np.diff(s)
    # a kink between nodes shows up in at most two consecutive entries;
    # smooth curvature gives |ds| ~ h |phi''|, varying slowly
    scale = np.maximum(np.abs(np.roll(ds, 2)), np.abs(np.roll(ds, -2)))
    hits = np.flatnonzero((np.abs(ds) > rel) & (np.abs(ds) > 20.0 * scale + 1e-12))
    return x[hits + 1]


def jump_identity_residual(phi, kinks, alpha, cells=1 << 14, scan=True):
    """LHS and RHS of ``int (phi alpha'' - phi'' alpha) = sum_a jump(a) alpha(a)``.

    ``phi`` is a :class:`Piecewise1D`; ``alpha`` a 1-D :class:`Bump`. Cells are
    split at the listed kinks; ``UnlistedKink`` is raised if a scan finds a
    slope jump inside the support that is not listed.
    """
    kinks = [float(k) for k in kinks]
    c, r = float(alpha.c[0]), alpha.radius
    lo, hi = c - r, c + r
    if scan:
        h = (hi - lo) / (4 * cells)
        for x0 in scan_kinks(phi, lo, hi, min(cells, 4096)):
            if not any(abs(x0 - k) <= 4.0 * (hi - lo) / min(cells, 4096) + h for k in kinks):
                raise UnlistedKink(f"slope of phi jumps near x = {x0:.6g} but no kink is listed there")
    nodes, w = _split_midpoint(lo, hi, cells, kinks)
    v, _, d2 = phi.derivs(nodes)
    pts = nodes[:, None]
    a = alpha.value(pts)
    a2 = alpha.second(pts, np.array([1.0]))
    lhs = float(np.sum(w * (v * a2 - d2 * a)))
    rhs = 0.0
    for k in kinks:
        if lo < k < hi:
            left, right = phi.one_sided(k)
            rhs += (right - left) * float(alpha.value(np.array([k])))
    return JumpIdentity(lhs, rhs)


# ---------------------------------------------------------------------------
# per-axis inequality via Fubini

def _cross_section(n, r, cells):
    h = 2.0 * r / cells
    g = -r + h * (np.arange(cells) + 0.5)
    pts = np.stack(np.meshgrid(*([g] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1)
    return pts, h ** (n - 1)


def _locate(field, p0, p1, iters=60):
    """Bisection for the label change on segments p0 -> p1 (batched)."""
    l0 = field.label(p0)
    lo = np.zeros(len(p0))
    hi = np.ones(len(p0))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lab = field.label(p0 + mid[:, None] * (p1 - p0))
        same = lab == l0
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def coordinate_inequality_test(field, alpha, j, cells=MIN_CELLS, inside=None):
    """``int phi d_j^2 alpha - int (d_j^2 phi) alpha`` over the support of ``alpha``.

    Lines along axis ``j`` through a midpoint cross-section grid; each chord is
    integrated with ``cells`` midpoint cells split where the piece label changes.
    """
    n = alpha.dim
    if cells < MIN_CELLS:
        raise QuadratureUnderflow(f"need at least {MIN_CELLS} cells per axis, got {cells}")
    if alpha.radius <= 1e-10:
        raise QuadratureUnderflow("support too small for the grid")
    r = alpha.radius
    b, wb = _cross_section(n, r, cells)
    half = np.sqrt(np.clip(r * r - np.sum(b * b, axis=-1), 0.0, None))
    keep = half > 0
    b, half = b[keep], half[keep]
    others = [i for i in range(n) if i != j]
    c = alpha.c

    def embed(bb, s):
        x = np.empty(bb.shape[:-1] + (n,))
        x[..., others] = bb
        x[..., j] = s
        return x + c

    # chord nodes: uniform cells, plus one split at each label change
    t = (np.arange(cells) + 0.5) / cells
    s = -half[:, None] + 2.0 * half[:, None] * t[None, :]
    w = np.repeat((2.0 * half / cells)[:, None], cells, axis=1)
    edges_s = -half[:, None] + 2.0 * half[:, None] * (np.arange(cells + 1) / cells)[None, :]
    pts_e = embed(np.repeat(b[:, None, :], cells + 1, axis=1), edges_s)
    lab = field.label(pts_e)
    change = lab[:, 1:] != lab[:, :-1]
    nodes = [s]
    weights = [w]
    if np.any(change):
        li, ci = np.nonzero(change)
        p0, p1 = pts_e[li, ci], pts_e[li, ci + 1]
        frac = _locate(field, p0, p1)
        h = w[li, ci]
        left = frac * h
        right = h - left
        s0 = edges_s[li, ci]
        # replace the split cell by its two halves
        w[li, ci] = 0.0
        extra_s = np.full((len(half), 0), 0.0)
        ns = np.zeros((len(half), 2 * int(change.sum(axis=1).max())))
        nw = np.zeros_like(ns)
        slot = np.zeros(len(half), dtype=int)
        for k in range(len(li)):
            row = li[k]
            ns[row, slot[row]] = s0[k] + 0.5 * left[k]
            nw[row, slot[row]] = left[k]
            ns[row, slot[row] + 1] = s0[k] + left[k] + 0.5 * right[k]
            nw[row, slot[row] + 1] = right[k]
            slot[row] += 2
        del extra_s
        nodes.append(ns)
        weights.append(nw)
    s_all = np.concatenate(nodes, axis=1)
    w_all = np.concatenate(weights, axis=1)
    x = embed(np.repeat(b[:, None, :], s_all.shape[1], axis=1), s_all)
    live = w_all > 0
    xs = x[live]
    if inside is not None and not np.all(inside(xs)):
        raise QuadratureUnderflow("support of the test function leaves the region")
    jet = field.jet(xs)
    a = alpha.value(xs)
    a2 = alpha.second(xs, np.eye(n)[j])
    integrand = np.zeros(w_all.shape)
    integrand[live] = jet.value * a2 - jet.hessian[:, j, j] * a
    return float(np.sum(integrand * w_all) * wb)


# ---------------------------------------------------------------------------
# complex-line pairing

def _line_frame(xi):
    """Orthonormal frame whose first two columns are Re xi and Re(i xi) normalised."""
    u1 = to_real(np.asarray(xi, dtype=complex))
    n = u1.shape[0]
    nrm = np.linalg.norm(u1)
    if nrm == 0.0:
        raise ValueError("xi must be non-zero")
    u1 = u1 / nrm
    u2 = complex_structure(n) @ u1
    q, _ = np.linalg.qr(np.column_stack([u1, u2, np.eye(n)]))
    q = q[:, :n]
    q[:, 0] *= np.sign(q[:, 0] @ u1)
    q[:, 1] *= np.sign(q[:, 1] @ u2)
    return q, nrm


@dataclass(frozen=True, eq=False)
class _Template:
    """Unit-radius padded grid: points needed, support rows and axis neighbours."""

    local: np.ndarray  # (m, n) points on the unit-radius grid
    support: np.ndarray  # row indices with positive bump values
    profile: np.ndarray  # (1 - t)^3 on the support rows
    neighbours: np.ndarray  # (2, 2, k) rows of the -/+ neighbour along axes 0, 1


@lru_cache(maxsize=16)
def _template(n, cells):
    h = 2.0 / cells
    g = -1.0 - h + h * (np.arange(cells + 2) + 0.5)
    shape = (cells + 2,) * n
    idx = np.indices(shape).reshape(n, -1).T
    local = g[idx]
    prof = np.clip(1.0 - np.sum(local * local, axis=-1), 0.0, None) ** 3
    sup = (prof > 0).reshape(shape)
    need = sup.copy()
    for ax in (0, 1):
        need |= np.roll(sup, 1, ax) | np.roll(sup, -1, ax)
    row = np.full(shape, -1)
    row[need] = np.arange(int(need.sum()))
    sidx = np.argwhere(sup)
    nb = np.empty((2, 2, len(sidx)), dtype=int)
    for ax in (0, 1):
        for k, step in enumerate((-1, 1)):
            j = sidx.copy()
            j[:, ax] += step
            nb[ax, k] = row[tuple(j.T)]
    return _Template(local[need.reshape(-1)], row[sup], prof[sup.reshape(-1)], nb)


@dataclass(frozen=True, eq=False)
class LineGrid:
    """Padded tensor grid around a bump, axes aligned with ``(Re xi, Re i xi, ...)``."""

    points: np.ndarray  # (m, n) ambient points where phi is needed
    template: _Template
    alpha: np.ndarray  # bump values on the support rows
    h: float
    scale: float  # |xi|^2 / 2 * h^(n-2)

    @property
    def support_points(self):
        return self.points[self.template.support]


def line_grid(alpha, xi, cells=MIN_CELLS):
    n = alpha.dim
    if cells < MIN_CELLS:
        raise QuadratureUnderflow(f"need at least {MIN_CELLS} cells per axis, got {cells}")
    r = alpha.radius
    if r <= 1e-10:
        raise QuadratureUnderflow("support too small for the grid")
    q, nrm = _line_frame(xi)
    tpl = _template(n, cells)
    h = 2.0 * r / cells
    pts = alpha.c + (r * tpl.local) @ q.T
    return LineGrid(pts, tpl, alpha.scale * tpl.profile, h, 0.5 * nrm**2 * h ** (n - 2))


def line_pairing(grid, phi_values):
    """``2 int phi L alpha(xi, xi)`` on a :class:`LineGrid` from values of ``phi``."""
    tpl = grid.template
    f = np.asarray(phi_values)
    centre = f[tpl.support]
    nb = tpl.neighbours
    d2 = f[nb[0, 0]] + f[nb[0, 1]] + f[nb[1, 0]] + f[nb[1, 1]] - 4.0 * centre
    return grid.scale * float(np.dot(d2, grid.alpha))


def distributional_levi_test(field, xi, alpha, cells=MIN_CELLS, inside=None):
    """Margin ``2 int phi L alpha(xi, xi) dV``; non-negative for psh ``phi``."""
    grid = line_grid(alpha, xi, cells)
    if inside is not None and not np.all(inside(grid.points)):
        raise QuadratureUnderflow("support of the test function leaves the region")
    vals = field.value(grid.points)
    if not np.all(np.isfinite(vals)):
        raise QuadratureUnderflow("field is not finite on the support")
    return line_pairing(grid, vals)


def pointwise_levi_integral(field, xi, alpha, cells=MIN_CELLS):
    """``int 2 L phi(xi, xi) alpha dV`` on the same grid (smooth fields)."""
    grid = line_grid(alpha, xi, cells)
    pts = grid.support_points
    form = levi_form(field.jet(pts))
    xi = np.asarray(xi, dtype=complex)
    vals = 2.0 * np.real(form(xi)) if form.batch_shape == () else 2.0 * np.real(
        np.einsum("k,pkl,l->p", xi, form.matrix, np.conj(xi)))
    return float(np.dot(vals, grid.alpha) * grid.h ** alpha.dim)


# ---------------------------------------------------------------------------
# sub-mean value

def submean_test(phi, a, xi, r, ntheta=256, inside=None):
    """Circle average of ``phi`` over ``a + r e^{i t} xi`` minus ``phi(a)``."""
    a = np.asarray(a, dtype=float)
    xi = np.asarray(xi, dtype=complex)
    t = 2.0 * np.pi * np.arange(ntheta) / ntheta
    z = to_complex(a)[None, :] + r * np.exp(1j * t)[:, None] * xi[None, :]
    pts = to_real(z)
    if inside is not None and not np.all(inside(pts)):
        raise DiscExitsRegion("the closed disc leaves the region")
    f = phi.value if hasattr(phi, "value") else phi
    return float(np.mean(f(pts)) - f(a[None])[0])


# ---------------------------------------------------------------------------
# orchestration

@dataclass
class PshVerdict:
    verified: bool
    stage: str | None = None  # failing stage: "levi", "jump", "distributional"
    witness: dict | None = None
    levi_min: float = math.inf
    jump_min: float = math.inf
    margin_min: float = math.inf
    counts: dict = field(default_factory=dict)

    def __bool__(self):
        return self.verified


def _battery_directions(n, normal=None, seed=20240611):
    nn = n // 2
    dirs = [np.eye(nn, dtype=complex)[k] for k in range(nn)]
    rng = np.random.default_rng(seed)
    for _ in range(8):
        v = rng.normal(size=nn) + 1j * rng.normal(size=nn)
        dirs.append(v / np.linalg.norm(v))
    if normal is not None:
        v = to_complex(normal)
        dirs.append(v / np.linalg.norm(v))
    return dirs


def _battery_centers(chart, n):
    grid = (-0.5, 0.0, 0.5)
    yp = np.stack(np.meshgrid(*([grid] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1) * chart.r
    hv = chart.h(yp)
    top = chart.interval[1]
    out = []
    for depth in (0.25, 0.5, 0.75):
        yn = hv + depth * (top - hv)
        out.append(np.concatenate([yp, yn[:, None]], axis=1))
    return chart.to_ambient(np.concatenate(out, axis=0))


def _values_if_fits(chart, grid_pts, field):
    """Field values on the grid, or None if the grid leaves the box or the domain."""
    y = chart.to_chart(grid_pts)
    if not np.all(chart.in_box(y)):
        return None
    vals = field.value(grid_pts, y)
    return vals if np.all(np.isfinite(vals)) else None


def _threads():
    import os

    try:
        return max(1, int(os.environ.get("PSCVX_THREADS", "0")) or (os.cpu_count() or 1))
    except ValueError:
        return 1


def verify_psh(spec, chart, collar, lam=None, tol=MARGIN_TOL, eig_tol=EIG_TOL, cells=MIN_CELLS,
               edge_samples=64, battery=True, stop_on_failure=True):
    """Three-stage check that the barrier is plurisubharmonic on the collar.

    (a) Levi form of the barrier at the regular collar samples;
    (b) transversal jump of the barrier's derivative across every declared edge;
    (c) the distributional pairing for a fixed battery of directions and bumps.

    With ``stop_on_failure`` the battery is skipped once (a) or (b) has failed.
    """
    lam = compute_lambda(collar) if lam is None else lam
    ch = collar.chart
    n = ch.n
    verdict = PshVerdict(True)
    fieldf = BarrierField(ch, lam)

    # (a) pointwise Levi form
    pts = collar.points
    w, vec = min_eigenpairs(levi_form(fieldf.jet(pts)))
    k = int(np.argmin(w))
    verdict.levi_min = float(w[k])
    verdict.counts["levi_samples"] = int(len(pts))
    if w[k] < -eig_tol:
        verdict.verified = False
        verdict.stage = "levi"
        verdict.witness = {"point": pts[k], "xi": vec[k], "eigenvalue": float(w[k])}

    # (b) transversal convexity across edges
    normals = []
    lo, hi = ch.interval
    for ei, decl in enumerate(ch.edges):
        s, y, x = ch.sample_edge(ei, edge_samples, seed=ei)
        if len(y) == 0:
            continue
        from .edges import edge_geometry

        ok = np.isfinite(y[:, -1]) & (y[:, -1] < hi)
        for yk in y[ok]:
            g = edge_geometry(spec if ch is spec.charts[collar.chart_index] else _with_chart(spec, collar),
                              (collar.chart_index, ei), ch.to_ambient(yk))
            v_amb = ch.vector_to_ambient(np.concatenate([g.normal, [0.0]]))
            if not normals:
                normals.append(v_amb)
            for depth in (0.25, 0.5):
                yy = yk.copy()
                yy[-1] = yk[-1] + depth * (hi - yk[-1])
                xx = ch.to_ambient(yy)
                jp = fieldf.piece_jet(decl.plus_piece, xx)
                jm = fieldf.piece_jet(decl.minus_piece, xx)
                jump = float((jp.gradient - jm.gradient) @ v_amb)
                if jump < verdict.jump_min:
                    verdict.jump_min = jump
                    if jump < -tol and verdict.stage in (None, "levi") and verdict.verified:
                        verdict.verified = False
                        verdict.stage = "jump"
                        verdict.witness = {"point": xx, "direction": v_amb, "jump": jump, "edge": ei}
        verdict.counts["edge_samples"] = verdict.counts.get("edge_samples", 0) + int(ok.sum())

    # (c) distributional battery
    if battery and (verdict.verified or not stop_on_failure):
        dirs = _battery_directions(n, normals[0] if normals else None)
        centers = _battery_centers(ch, n)
        base_r = 0.5 * min(float(np.min(ch.r)), hi)
        tasks = []
        for ci_, c in enumerate(centers):
            for rad in (base_r, 0.5 * base_r):
                for di, xi in enumerate(dirs):
                    tasks.append((ci_, c, rad, di, xi))

        def run(task):
            ci_, c, rad, di, xi = task
            r = rad
            for _ in range(40):
                alpha = Bump.unit_mass(c, r)
                grid = line_grid(alpha, xi, cells)
                vals = _values_if_fits(ch, grid.points, fieldf)
                if vals is not None:
                    return task, r, line_pairing(grid, vals)
                r *= 0.5
            return task, r, None

        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            results = list(pool.map(run, tasks))
        done = 0
        for (ci_, c, rad, di, xi), r, m in results:
            if m is None:
                continue
            done += 1
            if m < verdict.margin_min:
                verdict.margin_min = m
                if m < -tol and verdict.verified:
                    verdict.verified = False
                    verdict.stage = "distributional"
                    verdict.witness = {"center": c, "radius": r, "xi": xi, "margin": m}
        verdict.counts["battery"] = done
    return verdict


def _with_chart(spec, collar):
    charts = list(spec.charts)
    charts[collar.chart_index] = collar.chart
    return dm.GraphDomainSpec(spec.dimension, tuple(charts), spec.global_region, spec.name)
