"""Piecewise graph domains given by local charts.

A chart is an axis box ``U' x I`` in coordinates ``y = R (x - center)`` with
``R`` orthogonal, together with a piecewise function ``h`` on ``U'`` such that
the domain inside the box is ``{y_n > h(y')}``. Each piece carries sign
conditions selecting where it is active; region boundaries are declared edges
(codimension-two loci of the boundary) or exceptional loci.

All complex quantities (Levi forms, Wirtinger gradients, the complex
structure) are computed in ambient coordinates, so frames need not be
holomorphic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import qmc

from .errors import (
    NotOnBoundary,
    OnEdge,
    OutsideAllCharts,
    SpecInvariantError,
)
from .expr import Expr, check_variables, eval_jet, evaluate, parse
from .jets import Jet2

EDGE_TOL = 1e-9
FRAME_TOL = 1e-12
CONTINUITY_TOL = 1e-9


def halton(n, d, seed=0):
    """Deterministic scrambled Halton points in [0, 1)^d."""
    if d == 0:
        return np.zeros((n, 0))
    return qmc.Halton(d, scramble=True, seed=seed).random(n)


def _as_expr(e, nvars=None):
    if isinstance(e, Expr):
        if nvars is not None:
            check_variables(e, nvars)
        return e
    return parse(e, nvars)


@dataclass(frozen=True)
class Locus:
    """Parametrised locus ``s -> (L_1(s), ..., L_m(s))`` over a parameter box.

    Expressions use the parameters as variables ``x1 .. x{d}``.
    """

    exprs: tuple
    params: tuple  # ((lo, hi), ...)

    @property
    def dim(self):
        return len(self.params)

    @cached_property
    def bounds(self):
        b = np.asarray(self.params, dtype=float).reshape(-1, 2)
        return b[:, 0], b[:, 1]

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.dim == 0:
            s = np.zeros(s.shape[:-1] + (0,)) if s.ndim else np.zeros((0,))
        return np.stack([evaluate(e, s) for e in self.exprs], axis=-1)

    def jacobian(self, s):
        """d L / d s, shape (..., m, d)."""
        s = np.asarray(s, dtype=float)
        if self.dim == 0:
            return np.zeros(s.shape[:-1] + (len(self.exprs), 0))
        return np.stack([eval_jet(e, s).gradient for e in self.exprs], axis=-2)

    def sample_params(self, k, seed=0):
        lo, hi = self.bounds
        return lo + (hi - lo) * halton(k, self.dim, seed)

    def project(self, target, grid=9):
        """Closest parameter to ``target`` and the Euclidean distance."""
        target = np.asarray(target, dtype=float)
        lo, hi = self.bounds
        if self.dim == 0:
            p = np.zeros(0)
            return p, float(np.linalg.norm(self(p) - target))
        axes = [np.linspace(a, b, grid) for a, b in zip(lo, hi)]
        cand = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        d2 = np.sum((self(cand) - target) ** 2, axis=-1)
        s0 = cand[int(np.argmin(d2))]
        if np.all(hi > lo):
            res = least_squares(lambda s: self(s) - target, s0, jac=lambda s: self.jacobian(s),
                                bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15)
            s = res.x
        else:
            s = s0
        return s, float(np.linalg.norm(self(s) - target))


@dataclass(frozen=True)
class Piece:
    h: Expr
    region: tuple = ()  # ((Expr, sign), ...); active where sign * expr > 0

    def region_margin(self, yp):
        """min_i sign_i * expr_i(y'); +inf for an unconstrained piece."""
        yp = np.asarray(yp, dtype=float)
        m = np.full(yp.shape[:-1], np.inf)
        for e, sign in self.region:
            m = np.minimum(m, sign * evaluate(e, yp, strict=False))
        return m


@dataclass(frozen=True)
class EdgeDecl:
    pieces: tuple  # (i, j)
    plus_piece: int
    locus: Locus
    name: str = ""

    @property
    def minus_piece(self):
        i, j = self.pieces
        return j if self.plus_piece == i else i


@dataclass(frozen=True)
class ExceptionalDecl:
    locus: Locus
    name: str = ""


@dataclass(frozen=True)
class BoundaryClass:
    kind: str  # "regular" | "edge" | "exceptional"
    chart: int
    edge: int | None = None
    param: tuple | None = None

    REGULAR = "regular"
    EDGE = "edge"
    EXCEPTIONAL = "exceptional"


def gather_jets(fn, idx, y):
    """Assemble a batch jet from ``fn(i, points)`` evaluated per label ``i``."""
    n = y.shape[-1]
    val = np.empty(y.shape[:-1])
    grad = np.empty(y.shape[:-1] + (n,))
    hess = np.empty(y.shape[:-1] + (n, n))
    for i in np.unique(idx):
        mask = idx == i
        j = fn(int(i), y[mask])
        val[mask], grad[mask], hess[mask] = j.value, j.gradient, j.hessian
    return Jet2(val, grad, hess)


@dataclass(frozen=True)
class Chart:
    center: tuple
    frame: tuple
    radii: tuple
    interval: tuple
    pieces: tuple
    edges: tuple = ()
    exceptional: tuple = ()
    defining_function: Expr | None = None
    name: str = ""

    # geometry ---------------------------------------------------------
    @cached_property
    def R(self):
        return np.asarray(self.frame, dtype=float)

    @cached_property
    def c(self):
        return np.asarray(self.center, dtype=float)

    @cached_property
    def r(self):
        return np.asarray(self.radii, dtype=float)

    @property
    def n(self):
        return len(self.center)

    def to_chart(self, x):
        return (np.asarray(x, dtype=float) - self.c) @ self.R.T

    def to_ambient(self, y):
        return np.asarray(y, dtype=float) @ self.R + self.c

    def vector_to_chart(self, v):
        return np.asarray(v) @ self.R.T

    def vector_to_ambient(self, w):
        return np.asarray(w) @ self.R

    def in_box(self, y, slack=0.0):
        y = np.asarray(y, dtype=float)
        lo, hi = self.interval
        return (np.all(np.abs(y[..., :-1]) <= self.r + slack, axis=-1)
                & (y[..., -1] >= lo - slack) & (y[..., -1] <= hi + slack))

    def shrunk(self, factor):
        """Same chart with the box scaled by ``factor`` about the center."""
        lo, hi = self.interval
        return Chart(self.center, self.frame, tuple(np.asarray(self.radii) * factor),
                     (lo * factor, hi * factor), self.pieces, self.edges, self.exceptional,
                     self.defining_function, self.name)

    # pieces -------------------------------------------------------------
    def region_margins(self, yp):
        yp = np.asarray(yp, dtype=float)
        return np.stack([p.region_margin(yp) for p in self.pieces], axis=-1)

    def active_piece(self, yp, tol=EDGE_TOL):
        """Index of the piece active at ``y'`` (-1 within ``tol`` of a region boundary)."""
        m = self.region_margins(yp)
        idx = np.argmax(m, axis=-1)
        best = np.take_along_axis(m, idx[..., None], axis=-1)[..., 0]
        return np.where(best > tol, idx, -1), best

    def h(self, yp, strict=False):
        """Piecewise graph function; on region boundaries the best-matching piece is used."""
        yp = np.asarray(yp, dtype=float)
        if len(self.pieces) == 1:
            return evaluate(self.pieces[0].h, yp, strict=strict)
        idx = np.argmax(self.region_margins(yp), axis=-1)
        out = np.full(yp.shape[:-1], np.nan)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            if np.any(mask):
                out[mask] = evaluate(piece.h, yp[mask], strict=strict)
        return out

    def piece_h_jet(self, i, yp):
        return eval_jet(self.pieces[i].h, yp)

    def piece_rho_jet(self, i, y):
        """Chart-coordinate jet of ``h_i(y') - y_n`` regardless of region activity."""
        y = np.asarray(y, dtype=float)
        return eval_jet(self.pieces[i].h, y) - Jet2.coordinate(y, self.n - 1)

    def rho_jet(self, y, tol=EDGE_TOL):
        """2-jet of ``rho = h(y') - y_n`` in chart coordinates (single point or batch)."""
        y = np.asarray(y, dtype=float)
        idx, margin = self.active_piece(y[..., :-1], tol)
        if np.any(idx < 0):
            bad = np.argwhere(np.atleast_1d(idx) < 0)[0]
            raise OnEdge(f"point {np.atleast_2d(y)[bad[0]]} lies within {tol:g} of a piece boundary")
        if y.ndim == 1:
            return self.piece_rho_jet(int(idx), y)
        return self._gather_jets(lambda i, pts: self.piece_rho_jet(i, pts), idx, y)

    def _gather_jets(self, fn, idx, y):
        return gather_jets(fn, idx, y)

    def ambient_rho_jet(self, x, tol=EDGE_TOL):
        """Jet of the graph defining function in ambient coordinates."""
        return self.rho_jet(self.to_chart(x), tol).pullback(self.R)

    def barrier_rho_jet(self, x, tol=EDGE_TOL):
        """Defining function used by the barrier: the declared one if any, else the graph one."""
        if self.defining_function is not None:
            return eval_jet(self.defining_function, np.asarray(x, dtype=float))
        return self.ambient_rho_jet(x, tol)

    def piece_barrier_rho_jet(self, i, x):
        if self.defining_function is not None:
            return eval_jet(self.defining_function, np.asarray(x, dtype=float))
        return self.piece_rho_jet(i, self.to_chart(x)).pullback(self.R)

    # sampling -----------------------------------------------------------
    def sample_boundary(self, k, seed=0, regular_only=True, tol=EDGE_TOL):
        """Low-discrepancy boundary points; returns chart and ambient coordinates."""
        d = self.n - 1
        yp = (2.0 * halton(k, d, seed) - 1.0) * self.r
        hv = self.h(yp)
        lo, hi = self.interval
        keep = np.isfinite(hv) & (hv > lo) & (hv < hi)
        if regular_only:
            idx, _ = self.active_piece(yp, tol)
            keep &= idx >= 0
        y = np.concatenate([yp, hv[:, None]], axis=1)[keep]
        return y, self.to_ambient(y)

    def sample_edge(self, e, k, seed=0):
        """Points on edge ``e``: parameters, chart points and ambient points."""
        edge = self.edges[e]
        s = edge.locus.sample_params(k, seed)
        yp = edge.locus(s)
        inside = np.all(np.abs(yp) <= self.r, axis=-1)
        s, yp = s[inside], yp[inside]
        hv = evaluate(self.pieces[edge.plus_piece].h, yp, strict=False)
        y = np.concatenate([yp, hv[:, None]], axis=1)
        return s, y, self.to_ambient(y)


@dataclass(frozen=True)
class GraphDomainSpec:
    dimension: int
    charts: tuple
    global_region: tuple | None = None  # union of intersections of {expr < 0}
    name: str = ""
    description: str = field(default="", compare=False)

    @property
    def n(self):
        return 2 * self.dimension

    def global_rho(self, x, strict=False):
        """min over alternatives of max over constraints; negative inside."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[:-1], np.inf)
        for alt in self.global_region:
            m = np.full(x.shape[:-1], -np.inf)
            for e in alt:
                m = np.maximum(m, evaluate(e, x, strict=strict))
            out = np.minimum(out, m)
        return out


# ---------------------------------------------------------------------------
# construction helpers

def make_piece(h, region=(), nvars=None):
    return Piece(_as_expr(h, nvars), tuple((_as_expr(e, nvars), int(s)) for e, s in region))


def make_locus(exprs, params):
    d = len(params)
    return Locus(tuple(_as_expr(e, max(d, 0) or None) if d else _as_expr(e) for e in exprs),
                 tuple((float(a), float(b)) for a, b in params))


def make_chart(center, frame, radii, interval, pieces, edges=(), exceptional=(),
               defining_function=None, name=""):
    n = len(center)
    chart = Chart(
        center=tuple(float(v) for v in center),
        frame=tuple(tuple(float(v) for v in row) for row in np.asarray(frame, dtype=float)),
        radii=tuple(float(v) for v in radii),
        interval=(float(interval[0]), float(interval[1])),
        pieces=tuple(p if isinstance(p, Piece) else make_piece(p[0], p[1] if len(p) > 1 else (), n - 1)
                     for p in pieces),
        edges=tuple(edges),
        exceptional=tuple(exceptional),
        defining_function=None if defining_function is None else _as_expr(defining_function, n),
        name=name,
    )
    return chart


def make_edge(pieces, plus_piece, locus_exprs, params, name=""):
    return EdgeDecl(tuple(int(i) for i in pieces), int(plus_piece), make_locus(locus_exprs, params), name)


def make_exceptional(locus_exprs, params, name=""):
    return ExceptionalDecl(make_locus(locus_exprs, params), name)


def validate_spec(spec, continuity_samples=64):
    """Check the structural invariants; raise :class:`SpecInvariantError`."""
    if spec.dimension < 1:
        raise SpecInvariantError("dimension must be >= 1")
    n = spec.n
    if not spec.charts:
        raise SpecInvariantError("spec has no charts")
    if spec.global_region is not None:
        for alt in spec.global_region:
            for e in alt:
                check_variables(e, n)
    for ci, ch in enumerate(spec.charts):
        where = f"charts[{ci}]"
        if len(ch.center) != n:
            raise SpecInvariantError(f"{where}: center has {len(ch.center)} coordinates, expected {n}")
        R = ch.R
        if R.shape != (n, n):
            raise SpecInvariantError(f"{where}: frame must be {n}x{n}")
        if np.max(np.abs(R @ R.T - np.eye(n))) > FRAME_TOL:
            raise SpecInvariantError(f"{where}: frame is not orthogonal within {FRAME_TOL:g}")
        if len(ch.radii) != n - 1 or np.any(ch.r <= 0):
            raise SpecInvariantError(f"{where}: box needs {n - 1} positive radii")
        lo, hi = ch.interval
        if not lo < hi:
            raise SpecInvariantError(f"{where}: empty interval")
        if not ch.pieces:
            raise SpecInvariantError(f"{where}: chart has no pieces")
        for pi, p in enumerate(ch.pieces):
            check_variables(p.h, n - 1)
            for e, s in p.region:
                check_variables(e, n - 1)
                if s not in (1, -1):
                    raise SpecInvariantError(f"{where}.pieces[{pi}]: region sign must be +1 or -1")
        if ch.defining_function is not None:
            check_variables(ch.defining_function, n)
        for ei, edge in enumerate(ch.edges):
            ew = f"{where}.edges[{ei}]"
            if len(edge.pieces) != 2 or any(not 0 <= i < len(ch.pieces) for i in edge.pieces):
                raise SpecInvariantError(f"{ew}: edge must reference two existing pieces")
            if edge.plus_piece not in edge.pieces:
                raise SpecInvariantError(f"{ew}: plus_piece must be one of the edge pieces")
            if len(edge.locus.exprs) != n - 1 or edge.locus.dim != n - 2:
                raise SpecInvariantError(f"{ew}: locus must map R^{n - 2} into R^{n - 1}")
            for e in edge.locus.exprs:
                check_variables(e, max(n - 2, 0))
            s = edge.locus.sample_params(continuity_samples, seed=17)
            yp = edge.locus(s)
            if n - 2 > 0 and np.any(np.linalg.matrix_rank(edge.locus.jacobian(s), tol=1e-10) < n - 2):
                raise SpecInvariantError(f"{ew}: locus parametrisation is not an immersion")
            i, j = edge.pieces
            hi_ = evaluate(ch.pieces[i].h, yp, strict=False)
            hj_ = evaluate(ch.pieces[j].h, yp, strict=False)
            gap = np.nanmax(np.abs(hi_ - hj_)) if np.any(np.isfinite(hi_ - hj_)) else np.inf
            if not gap <= CONTINUITY_TOL:
                raise SpecInvariantError(f"{ew}: h jumps by {gap:.3e} across the edge")
        for xi, exc in enumerate(ch.exceptional):
            if len(exc.locus.exprs) != n - 1 or exc.locus.dim > n - 3:
                raise SpecInvariantError(
                    f"{where}.exceptional[{xi}]: locus must map R^d (d <= {n - 3}) into R^{n - 1}")
    return spec


# ---------------------------------------------------------------------------
# queries

def find_chart(spec, x, slack=0.0):
    """Index of the first chart whose box contains ``x`` (or -1)."""
    x = np.asarray(x, dtype=float)
    for ci, ch in enumerate(spec.charts):
        if ch.in_box(ch.to_chart(x), slack):
            return ci
    return -1


def inside_margin(spec, x, strict=True):
    """Signed margin, positive inside: ``y_n - h(y')`` in the first covering
    chart, otherwise ``-rho_global`` from the global description."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    out = np.full(xb.shape[0], np.nan)
    todo = np.ones(xb.shape[0], dtype=bool)
    for ch in spec.charts:
        if not np.any(todo):
            break
        y = ch.to_chart(xb)
        hit = todo & ch.in_box(y)
        if np.any(hit):
            out[hit] = y[hit, -1] - ch.h(y[hit, :-1])
            todo &= ~hit
    if np.any(todo) and spec.global_region is not None:
        out[todo] = -spec.global_rho(xb[todo])
        todo[:] = False
    if np.any(todo) and strict:
        raise OutsideAllCharts(f"point {xb[np.argmax(todo)]} is outside all charts")
    return out[0] if single else out


def membership(spec, z, tol=1e-12):
    """'inside', 'outside' or 'boundary' for one ambient point."""
    m = inside_margin(spec, np.asarray(z, dtype=float))
    if not np.isfinite(m):
        return "outside"
    if m > tol:
        return "inside"
    if m < -tol:
        return "outside"
    return "boundary"


def classify_boundary_point(spec, a, tol=1e-9):
    """Regular / edge / exceptional classification of a boundary point."""
    a = np.asarray(a, dtype=float)
    ci = find_chart(spec, a, slack=tol)
    if ci < 0:
        return _classify_global(spec, a, tol)
    ch = spec.charts[ci]
    y = ch.to_chart(a)
    yp = y[:-1]
    gap = y[-1] - ch.h(yp[None, :])[0]
    if not abs(gap) <= tol:
        raise NotOnBoundary(f"point is {gap:.3e} off the boundary graph (tol {tol:g})")
    for exc in ch.exceptional:
        s, dist = exc.locus.project(yp)
        if dist <= tol:
            return BoundaryClass(BoundaryClass.EXCEPTIONAL, ci, None, tuple(map(float, s)))
    for ei, edge in enumerate(ch.edges):
        s, dist = edge.locus.project(yp)
        if dist <= tol:
            return BoundaryClass(BoundaryClass.EDGE, ci, ei, tuple(map(float, s)))
    _, margin = ch.active_piece(yp[None, :], 0.0)
    if not margin[0] > 0.0:
        raise SpecInvariantError(
            f"boundary point {a} lies on a piece boundary that is neither a declared edge nor exceptional")
    return BoundaryClass(BoundaryClass.REGULAR, ci)


def _classify_global(spec, a, tol):
    """Away from the charts only smooth boundary points of the global description
    can be classified: exactly one active constraint with non-zero gradient."""
    if spec.global_region is None:
        raise OutsideAllCharts(f"point {a} is outside all charts")
    g = spec.global_rho(a)
    if not abs(g) <= tol:
        raise NotOnBoundary(f"point is {g:.3e} off the boundary (tol {tol:g})")
    active = []
    for alt in spec.global_region:
        vals = [float(evaluate(e, a, strict=False)) for e in alt]
        if max(vals) <= tol:
            active.extend(e for e, v in zip(alt, vals) if abs(v) <= tol)
    if len(active) == 1 and np.linalg.norm(eval_jet(active[0], a).gradient) > tol:
        return BoundaryClass(BoundaryClass.REGULAR, -1)
    raise OutsideAllCharts(f"non-smooth boundary point {a} is outside all charts")
