"""One-sided derivatives, tangent cones and edge typing.

Edges are addressed by ``(chart index, edge index)``. Horizontal directions
``v`` for one-sided derivatives live in the chart's ``U'`` coordinates; all
tangent-space and complex-structure computations are ambient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import domain as dm
from .errors import (
    BranchCutIntersectsDomain,
    DegenerateTangent,
    EdgeMismatch,
    ExceptionalPoint,
    TangentDirection,
    WrongOrientation,
)
from .expr import eval_jet
from .jets import complex_structure

EDGE_TOL = 1e-9
COMPLEX_ANGLE_TOL = 1e-6
CONE_DIRECTIONS = 512
RICHARDSON_STEPS = (1e-3, 1e-4, 1e-5, 1e-6)


def _side_sign(side):
    if side in ("+", 1, "plus"):
        return 1
    if side in ("-", -1, "minus"):
        return -1
    raise ValueError(f"side must be '+' or '-', got {side!r}")


@dataclass(frozen=True, eq=False)
class EdgeGeometry:
    """First-order data of an edge at one of its points."""

    chart: int
    edge: int
    y: np.ndarray  # chart coordinates of the point
    param: np.ndarray
    tangent: np.ndarray  # (n-1, n-2) orthonormal columns in U'
    normal: np.ndarray  # unit, in U', pointing into the plus piece
    grad_plus: np.ndarray
    grad_minus: np.ndarray
    ambient_tangent: np.ndarray  # (n, n-2) orthonormal columns

    @property
    def jump(self):
        return float((self.grad_plus - self.grad_minus) @ self.normal)


def _orthonormal(cols, what):
    q, r = np.linalg.qr(cols)
    d = np.abs(np.diag(r)) if r.size else np.zeros(0)
    if d.size and d.min() < 1e-10 * max(1.0, d.max()):
        raise DegenerateTangent(f"{what} has rank below {cols.shape[1]}")
    return q


def edge_geometry(spec, edge, a, tol=EDGE_TOL, plus_piece=None):
    """Locate ``a`` on the declared edge and compute its tangent data."""
    ci, ei = edge
    ch = spec.charts[ci]
    decl = ch.edges[ei]
    a = np.asarray(a, dtype=float)
    y = ch.to_chart(a)
    s, dist = decl.locus.project(y[:-1])
    gap = abs(y[-1] - float(ch.h(y[None, :-1])[0]))
    if dist > tol or gap > tol:
        raise EdgeMismatch(f"point is {max(dist, gap):.3e} from edge {ei} of chart {ci}")
    yp = decl.locus(s)
    jac = decl.locus.jacobian(s)
    tangent = _orthonormal(jac, "edge parametrisation")
    # normal = orthogonal complement of the tangent in U'
    u, _, _ = np.linalg.svd(tangent, full_matrices=True)
    normal = u[:, -1]
    plus = decl.plus_piece if plus_piece is None else plus_piece
    if plus not in decl.pieces:
        raise ValueError("plus_piece must be one of the edge pieces")
    minus = decl.pieces[0] if plus == decl.pieces[1] else decl.pieces[1]
    step = 1e-6 * max(1.0, float(np.max(ch.r)))
    mp = ch.pieces[plus].region_margin(np.stack([yp + step * normal, yp - step * normal]))
    if mp[1] > mp[0]:
        normal = -normal
    grad_plus = eval_jet(ch.pieces[plus].h, yp).gradient
    grad_minus = eval_jet(ch.pieces[minus].h, yp).gradient
    lift = np.vstack([jac, grad_plus @ jac])
    amb = _orthonormal(ch.R.T @ lift, "edge tangent")
    return EdgeGeometry(ci, ei, np.concatenate([yp, [y[-1]]]), s, tangent, normal,
                        grad_plus, grad_minus, amb)


def one_sided_derivative(spec, edge, a, v, side, tol=EDGE_TOL):
    """``D_v h(a)`` approached from the given side, from the piece's exact jet."""
    g = edge_geometry(spec, edge, a, tol)
    grad = g.grad_plus if _side_sign(side) > 0 else g.grad_minus
    return float(grad @ np.asarray(v, dtype=float))


def one_sided_derivative_fd(spec, edge, a, v, side, steps=RICHARDSON_STEPS):
    """Difference-quotient estimate of the same limit, Richardson-extrapolated.

    Only evaluates ``h`` at points strictly inside the requested side: ``v`` is
    written as ``w - sigma c n`` with ``w`` and ``sigma n`` pointing into the side.
    """
    g = edge_geometry(spec, edge, a)
    ch = spec.charts[g.chart]
    sigma = _side_sign(side)
    v = np.asarray(v, dtype=float)
    c = 2.0 * max(float(np.linalg.norm(v)), 1e-300)
    w1 = v + sigma * c * g.normal
    w2 = sigma * g.normal
    yp = g.y[:-1]
    h0 = float(ch.h(yp[None])[0])

    def quotient(w):
        est = np.array([(float(ch.h((yp + d * w)[None])[0]) - h0) / d for d in steps])
        # Richardson for first-order truncation error with step ratio 10
        for _ in range(len(est) - 1):
            est = (10.0 * est[1:] - est[:-1]) / 9.0
        return float(est[0])

    return quotient(w1) - c * quotient(w2)


def derivative_jump(spec, edge, a, v, tol=EDGE_TOL, plus_piece=None):
    """``D_v h(a)_+ - D_v h(a)_-`` for ``v`` transversal and pointing into the plus side."""
    g = edge_geometry(spec, edge, a, tol, plus_piece)
    v = np.asarray(v, dtype=float)
    nv = float(np.linalg.norm(v))
    dot = float(v @ g.normal)
    if nv == 0.0 or abs(dot) <= 1e-9 * nv:
        raise TangentDirection("direction is tangent to the edge; the jump vanishes by continuity")
    if dot < 0:
        raise WrongOrientation("direction points into the minus side; swap the side labels or negate v")
    return float((g.grad_plus - g.grad_minus) @ v)


@dataclass(frozen=True, eq=False)
class Cone:
    """Tangent cone ``{(v', v_n): v_n >= g(v')}`` in chart coordinates.

    ``g`` is linear with gradient ``grad_plus`` where ``v' . normal >= 0`` and
    ``grad_minus`` elsewhere; for a regular point both agree.
    """

    base: np.ndarray
    frame: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray | None
    grad_plus: np.ndarray
    grad_minus: np.ndarray

    @property
    def regular(self):
        return self.normal is None

    @property
    def n(self):
        return self.frame.shape[0]

    @property
    def jump(self):
        if self.normal is None:
            return 0.0
        return float((self.grad_plus - self.grad_minus) @ self.normal)

    def slope(self, vp):
        vp = np.asarray(vp, dtype=float)
        if self.normal is None:
            return vp @ self.grad_plus
        return np.where(vp @ self.normal >= 0, vp @ self.grad_plus, vp @ self.grad_minus)

    def chart_margin(self, w):
        w = np.asarray(w, dtype=float)
        return w[..., -1] - self.slope(w[..., :-1])

    def margin(self, u):
        """Signed distance-like margin of an ambient vector; >= 0 inside the cone."""
        return self.chart_margin(np.asarray(u, dtype=float) @ self.frame.T)

    def to_ambient(self, w):
        return np.asarray(w, dtype=float) @ self.frame

    def lift(self, vp, height=0.0):
        """Cone point above ``vp`` at ``height`` over the boundary, in ambient coordinates."""
        vp = np.asarray(vp, dtype=float)
        top = np.asarray(self.slope(vp) + height, dtype=float)[..., None]
        w = np.concatenate([vp, top], axis=-1)
        return self.to_ambient(w)

    def ambient_edge_tangent(self):
        """Tangent space of the edge inside the boundary, ambient, orthonormal columns."""
        lift = np.vstack([self.tangent, self.grad_plus @ self.tangent])
        return np.linalg.qr(self.frame.T @ lift)[0]


def tangent_cone(spec, a, tol=EDGE_TOL):
    """Tangent cone at a regular or edge boundary point."""
    a = np.asarray(a, dtype=float)
    cls = dm.classify_boundary_point(spec, a, tol)
    if cls.kind == cls.EXCEPTIONAL:
        raise ExceptionalPoint("no cone at a declared exceptional point")
    if cls.kind == cls.EDGE:
        g = edge_geometry(spec, (cls.chart, cls.edge), a, tol)
        ch = spec.charts[cls.chart]
        return Cone(a, ch.R, g.tangent, g.normal, g.grad_plus, g.grad_minus)
    n = a.shape[-1]
    if cls.chart < 0:
        # smooth point of the global description: frame with inward last axis
        grads = [eval_jet(e, a).gradient for alt in spec.global_region for e in alt
                 if abs(float(eval_jet(e, a).value)) <= tol]
        nu = -grads[0] / np.linalg.norm(grads[0])
        q, _ = np.linalg.qr(np.column_stack([nu, np.eye(n)]))
        q[:, 0] *= np.sign(q[:, 0] @ nu)
        frame = np.vstack([q[:, 1:n].T, q[:, 0]])
        zero = np.zeros(n - 1)
        return Cone(a, frame, np.eye(n - 1)[:, : n - 2], None, zero, zero)
    ch = spec.charts[cls.chart]
    yp = ch.to_chart(a)[:-1]
    idx, _ = ch.active_piece(yp[None], tol)
    grad = eval_jet(ch.pieces[int(idx[0])].h, yp).gradient
    return Cone(a, ch.R, np.eye(n - 1)[:, : n - 2], None, grad, grad)


@dataclass(frozen=True)
class ConvexityResult:
    convex: bool
    worst: float  # largest midpoint violation found (<= tol when convex)
    witness: tuple | None = None  # two ambient cone points whose midpoint exits

    def __bool__(self):
        return self.convex


def cone_convexity(cone, tol=1e-9, ndirs=CONE_DIRECTIONS):
    """Midpoint test of the slope function on each plane (normal, tangent_i)."""
    if cone.regular:
        return ConvexityResult(True, 0.0)
    theta = 2.0 * np.pi * np.arange(ndirs) / ndirs
    worst, witness = -np.inf, None
    for i in range(cone.tangent.shape[1]):
        dirs = np.cos(theta)[:, None] * cone.normal + np.sin(theta)[:, None] * cone.tangent[:, i]
        g = cone.slope(dirs)
        mid = 0.5 * (dirs[:, None, :] + dirs[None, :, :])
        viol = cone.slope(mid) - 0.5 * (g[:, None] + g[None, :])
        k = int(np.argmax(viol))
        if viol.flat[k] > worst:
            p, q = divmod(k, ndirs)
            worst = float(viol.flat[k])
            witness = (cone.lift(dirs[p]), cone.lift(dirs[q]))
    if worst <= tol:
        return ConvexityResult(True, max(worst, 0.0))
    return ConvexityResult(False, worst, witness)


# ---------------------------------------------------------------------------
# complex structure

def principal_angle_to_j(t):
    """Largest principal angle between span(T) and span(J T), in radians."""
    t = np.asarray(t, dtype=float)
    q = _orthonormal(t, "tangent basis")
    jq = complex_structure(t.shape[0]) @ q
    resid = jq - q @ (q.T @ jq)
    s = np.linalg.norm(resid, 2) if resid.size else 0.0
    return float(math.asin(min(1.0, s)))


def span_rank(t, tol=1e-9):
    """Rank of [T, J T]."""
    t = np.asarray(t, dtype=float)
    m = np.hstack([t, complex_structure(t.shape[0]) @ t])
    sv = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(sv > tol * max(1.0, sv[0])))


@dataclass(frozen=True)
class EdgeType:
    kind: str  # "real_edge" | "complex_edge"
    angle: float
    generic: bool

    REAL = "real_edge"
    COMPLEX = "complex_edge"


def edge_type(spec, edge, a, tol=COMPLEX_ANGLE_TOL):
    g = edge_geometry(spec, edge, a)
    angle = principal_angle_to_j(g.ambient_tangent)
    generic = span_rank(g.ambient_tangent) == g.ambient_tangent.shape[0]
    return EdgeType(EdgeType.COMPLEX if angle < tol else EdgeType.REAL, angle, generic)


def is_generic(spec, edge, a, tol=1e-9):
    g = edge_geometry(spec, edge, a)
    return span_rank(g.ambient_tangent, tol) == g.ambient_tangent.shape[0]


# ---------------------------------------------------------------------------
# power map at complex edges

def _wrap_rel(theta, center):
    """Angle in (center - pi, center + pi]."""
    return center - np.angle(np.exp(1j * (center - theta)))


@dataclass(frozen=True, eq=False)
class PowerMap:
    """``z_k -> c + e^{i t0} ((z_k - c) e^{-i t0})^alpha`` with the branch cut on the
    ray opposite the bisector of the local sector ``(t0, t0 + opening)``."""

    spec: object
    k: int
    vertex: complex
    theta_start: float
    opening: float
    alpha: float
    base: np.ndarray

    @property
    def image_opening(self):
        return self.alpha * self.opening

    def forward(self, x):
        x = np.array(x, dtype=float)
        z = x[..., 2 * self.k] + 1j * x[..., 2 * self.k + 1] - self.vertex
        rel = z * np.exp(-1j * self.theta_start)
        arg = _wrap_rel(np.angle(rel), self.opening / 2)
        w = np.abs(rel) ** self.alpha * np.exp(1j * self.alpha * arg)
        w = self.vertex + np.exp(1j * self.theta_start) * w
        x[..., 2 * self.k], x[..., 2 * self.k + 1] = w.real, w.imag
        return x

    def inverse(self, x):
        """Preimage; nan where the point is not in the image of the cut plane."""
        x = np.array(x, dtype=float)
        w = (x[..., 2 * self.k] + 1j * x[..., 2 * self.k + 1] - self.vertex) * np.exp(-1j * self.theta_start)
        mid = self.alpha * self.opening / 2
        arg = _wrap_rel(np.angle(w), mid)
        ok = np.abs(arg - mid) < self.alpha * np.pi
        z = np.abs(w) ** (1.0 / self.alpha) * np.exp(1j * arg / self.alpha)
        z = self.vertex + np.exp(1j * self.theta_start) * z
        x[..., 2 * self.k] = np.where(ok, z.real, np.nan)
        x[..., 2 * self.k + 1] = np.where(ok, z.imag, np.nan)
        return x

    def image_margin(self, x):
        """Inside margin of the image domain, evaluated through the preimage."""
        pre = self.inverse(x)
        good = np.all(np.isfinite(pre), axis=-1)
        out = np.full(np.shape(pre)[:-1], -np.inf)
        if np.any(good):
            out[good] = dm.inside_margin(self.spec, pre[good], strict=False)
        return out

    def image_membership(self, x, tol=1e-12):
        m = float(self.image_margin(np.asarray(x, dtype=float)[None])[0])
        if not np.isfinite(m) or m < -tol:
            return "outside"
        return "inside" if m > tol else "boundary"

    def image_spec(self, radius=0.25):
        """Sector model of the image near the vertex (exact when the original is a sector)."""
        from .fixtures import sector_spec

        return sector_spec(self.base.shape[0], self.k, self.forward(self.base), self.theta_start,
                           self.image_opening, radius, name="power_image")

    def sample_image_boundary(self, count, seed=0):
        """Images of boundary samples of the original chart near the edge."""
        out = []
        for ch in self.spec.charts:
            _, x = ch.sample_boundary(count, seed)
            out.append(self.forward(x))
        return np.concatenate(out, axis=0)


def _edge_coordinate(tangent):
    """Complex coordinate k such that the edge is {z_k = const}."""
    n = tangent.shape[0]
    p = tangent @ tangent.T
    scores = [np.linalg.norm(p[[2 * k, 2 * k + 1]][:, [2 * k, 2 * k + 1]]) for k in range(n // 2)]
    k = int(np.argmin(scores))
    if scores[k] > 1e-8:
        raise EdgeMismatch("edge is not of the form {z_k = const}")
    return k


def _sector_at(spec, base, k, radius, nscan=1440):
    """Angular interval of the domain in the z_k-plane around ``base``."""
    theta = 2.0 * np.pi * np.arange(nscan) / nscan

    def point(t):
        t = np.atleast_1d(t)
        x = np.repeat(base[None], len(t), axis=0)
        x[:, 2 * k] += radius * np.cos(t)
        x[:, 2 * k + 1] += radius * np.sin(t)
        return x

    inside = dm.inside_margin(spec, point(theta), strict=False) > 0
    if inside.all() or not inside.any():
        raise EdgeMismatch("no sector structure around the edge point")
    starts = np.flatnonzero(inside & ~np.roll(inside, 1))
    if len(starts) != 1:
        raise EdgeMismatch(f"expected one angular sector, found {len(starts)}")
    i0 = int(starts[0])
    length = 0
    while inside[(i0 + length) % nscan]:
        length += 1

    def refine(lo, hi, want_inside_at_hi):
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            ins = dm.inside_margin(spec, point(mid), strict=False)[0] > 0
            if ins == want_inside_at_hi:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    step = 2.0 * np.pi / nscan
    t_in0 = theta[i0]
    t_start = refine(t_in0 - step, t_in0, True)
    t_in1 = theta[i0] + (length - 1) * step
    t_end = refine(t_in1 + step, t_in1, True)
    return t_start, t_end - t_start


def power_straighten(spec, edge, alpha, a=None, radius=None):
    """Power map straightening a complex edge ``{z_k = c}`` of sector type."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    ci, ei = edge
    ch = spec.charts[ci]
    decl = ch.edges[ei]
    if a is None:
        s0 = 0.5 * np.add(*decl.locus.bounds)
        yp = decl.locus(s0)
        y = np.concatenate([yp, [float(ch.h(yp[None])[0])]])
        a = ch.to_ambient(y)
    a = np.asarray(a, dtype=float)
    g = edge_geometry(spec, edge, a)
    if principal_angle_to_j(g.ambient_tangent) >= COMPLEX_ANGLE_TOL:
        raise EdgeMismatch("power map applies to complex edges only")
    k = _edge_coordinate(g.ambient_tangent)
    r = 0.25 * float(np.min(ch.r)) if radius is None else radius
    t0, opening = _sector_at(spec, a, k, r)
    cut = t0 + opening / 2 + np.pi
    probes = np.repeat(a[None], 4, axis=0)
    for i, frac in enumerate((0.125, 0.25, 0.5, 1.0)):
        probes[i, 2 * k] += frac * r * math.cos(cut)
        probes[i, 2 * k + 1] += frac * r * math.sin(cut)
    if np.any(dm.inside_margin(spec, probes, strict=False) > 0):
        raise BranchCutIntersectsDomain("the branch cut ray meets the domain")
    vertex = complex(a[2 * k], a[2 * k + 1])
    return PowerMap(spec, k, vertex, float(t0), float(opening), float(alpha), a)
