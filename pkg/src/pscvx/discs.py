"""Analytic discs attached near non-convex real edges and Cauchy extension.

A disc is the quadratic map ``A(t) = a + mu (t v + t^2 eps zeta)`` on the closed
unit disc, with complex vectors ``v`` and ``zeta``. When its boundary circle
lies in the domain, the trapezoid rule applied to the Cauchy integral over that
circle gives the value that every function holomorphic on the domain must take
at interior points, including points outside the domain. The output is
numerical evidence, not a proof.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import domain as dm
from .domain import BoundaryClass
from .edges import EdgeType, cone_convexity, edge_type, is_generic, tangent_cone
from .errors import BoundaryExitsDomain, FitFailed, NoDirectionFound
from .jets import complex_structure, to_complex, to_real

NTHETA = 256
MEMBERSHIP_FLOOR = 1e-6
COHERENCE_TOL = 1e-8


def theta_grid(ntheta=NTHETA):
    return 2.0 * np.pi * np.arange(ntheta) / ntheta


def _complex_vector(v):
    v = np.asarray(v)
    if np.iscomplexobj(v):
        return v.astype(complex)
    return to_complex(v.astype(float))


# ---------------------------------------------------------------------------
# discs

@dataclass(frozen=True, eq=False)
class AnalyticDisc:
    """``A(t) = base + mu (t v + t^2 eps zeta)``; base real, ``v``/``zeta`` complex."""

    base: np.ndarray
    v: np.ndarray
    zeta: np.ndarray
    eps: float = 0.0
    mu: float = 1.0

    @classmethod
    def make(cls, base, v, zeta=None, eps=0.0, mu=1.0):
        base = np.asarray(base, dtype=float)
        vc = _complex_vector(v)
        zc = np.zeros_like(vc) if zeta is None else _complex_vector(zeta)
        return cls(base, vc, zc, float(eps), float(mu))

    @property
    def n(self):
        return self.base.shape[0]

    def complex_point(self, t):
        t = np.asarray(t, dtype=complex)[..., None]
        return to_complex(self.base) + self.mu * (t * self.v + t**2 * self.eps * self.zeta)

    def __call__(self, t):
        """Real coordinates of ``A(t)``."""
        return to_real(self.complex_point(t))

    def boundary(self, ntheta=NTHETA):
        return self(np.exp(1j * theta_grid(ntheta)))

    def translate(self, d):
        return replace(self, base=self.base + np.asarray(d, dtype=float))

    def rotate(self, theta0):
        """Same image, reparametrised by ``t -> e^{i theta0} t``."""
        w = np.exp(1j * theta0)
        return replace(self, v=w * self.v, zeta=w**2 * self.zeta)


def boundary_margins(spec, disc, ntheta=NTHETA):
    """Inside margin of the domain at the boundary nodes of ``disc``."""
    m = dm.inside_margin(spec, disc.boundary(ntheta), strict=False)
    return np.where(np.isfinite(m), m, -np.inf)


@dataclass(frozen=True, eq=False)
class DiscFamily:
    spec: object
    center: AnalyticDisc
    translations: np.ndarray  # (k, n); row 0 is zero
    margins: np.ndarray  # min boundary margin per disc
    floor: float = MEMBERSHIP_FLOOR

    @property
    def count(self):
        return self.translations.shape[0]

    def disc(self, i):
        return self.center.translate(self.translations[i])

    def discs(self):
        return [self.disc(i) for i in range(self.count)]


def disc_family(spec, center, translations, floor=MEMBERSHIP_FLOOR, ntheta=NTHETA):
    """Family of translates whose boundaries all keep margin ``floor``."""
    d = np.atleast_2d(np.asarray(translations, dtype=float))
    margins = np.array([boundary_margins(spec, center.translate(t), ntheta).min() for t in d])
    if np.any(margins < floor):
        i = int(np.argmin(margins))
        raise BoundaryExitsDomain(
            f"disc {i} boundary margin {margins[i]:.3e} is below the floor {floor:g}")
    return DiscFamily(spec, center, d, margins, floor)


# ---------------------------------------------------------------------------
# Cauchy extension

def cauchy_integral(f, disc, t0, ntheta=NTHETA):
    """Trapezoid rule for ``(1/2 pi i) int f(A(t)) / (t - t0) dt`` over ``|t| = 1``."""
    t = np.exp(1j * theta_grid(ntheta))
    t0 = np.asarray(t0, dtype=complex)
    if np.any(np.abs(t0) >= 1.0):
        raise ValueError("evaluation parameters must satisfy |t0| < 1")
    vals = np.asarray(f(disc.complex_point(t)), dtype=complex)
    kern = t[None, :] / (t[None, :] - np.atleast_1d(t0)[:, None])
    out = (kern @ vals) / ntheta
    return out.reshape(t0.shape)


def cauchy_extend(f, family, t0, ntheta=NTHETA, spec=None):
    """Extension values at ``t0`` for each disc of a family (or one disc).

    Boundary nodes are checked against the domain; ``BoundaryExitsDomain`` is
    raised if any lies outside.
    """
    if isinstance(family, AnalyticDisc):
        if spec is not None:
            m = boundary_margins(spec, family, ntheta)
            if np.any(m <= 0.0):
                raise BoundaryExitsDomain(f"disc boundary leaves the domain (margin {m.min():.3e})")
        return cauchy_integral(f, family, t0, ntheta)
    out = []
    for i in range(family.count):
        d = family.disc(i)
        m = boundary_margins(family.spec, d, ntheta)
        if np.any(m <= 0.0):
            raise BoundaryExitsDomain(f"disc {i} boundary leaves the domain (margin {m.min():.3e})")
        out.append(cauchy_integral(f, d, t0, ntheta))
    return np.array(out)


def horizontal_disc(spec, target, k, radii=(1.0, 0.9, 0.75, 0.5, 0.25), floor=MEMBERSHIP_FLOOR,
                    ntheta=NTHETA):
    """Linear disc through ``target`` in complex coordinate ``k`` whose boundary lies in
    the domain, trying the given radii in order."""
    target = np.asarray(target, dtype=float)
    e = np.zeros(spec.dimension, dtype=complex)
    e[k] = 1.0
    worst = -np.inf
    for r in radii:
        d = AnalyticDisc.make(target, r * e)
        m = boundary_margins(spec, d, ntheta).min()
        if m >= floor:
            return d
        worst = max(worst, m)
    raise BoundaryExitsDomain(
        f"no disc of the tried radii keeps its boundary in the domain (best margin {worst:.3e})")


# ---------------------------------------------------------------------------
# concavity direction and fitting

@dataclass(frozen=True, eq=False)
class ConcavityDirection:
    v: np.ndarray  # unit real vector in the edge tangent space
    margin: float  # min over the theta grid of cone margin / |sin theta|


def _circle_margin(cone, v, ntheta):
    """min over theta not in {0, pi} of cone margin(cos t v + sin t Jv) / |sin t|."""
    theta = theta_grid(ntheta)
    s = np.sin(theta)
    keep = np.abs(s) > 1e-12
    jv = v @ complex_structure(v.shape[-1]).T
    pts = np.cos(theta)[keep, None, None] * v[None] + s[keep, None, None] * jv[None]
    m = cone.margin(pts) / np.abs(s[keep])[:, None]
    return m.min(axis=0)


def find_concavity_direction(cone, tangent=None, ntheta=NTHETA, nsearch=720):
    """Unit ``v`` in the edge tangent space with ``e^{it} v`` in the open cone for
    ``t`` off ``{0, pi}``; the best direction of a deterministic search."""
    if cone.regular:
        raise NoDirectionFound("regular point: the cone is a half-space")
    if cone_convexity(cone):
        raise NoDirectionFound("the tangent cone is convex")
    t = cone.ambient_edge_tangent() if tangent is None else np.asarray(tangent, dtype=float)
    d = t.shape[1]
    if d == 1:
        coeffs = np.array([[1.0], [-1.0]])
    elif d == 2:
        ang = np.pi * np.arange(nsearch) / nsearch
        coeffs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        g = dm.halton(nsearch * d, d, seed=7)
        from scipy.stats import norm

        coeffs = norm.ppf(np.clip(g, 1e-12, 1 - 1e-12))
        coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
    vs = coeffs @ t.T
    m = _circle_margin(cone, vs, ntheta)
    k = int(np.argmax(m))
    if not m[k] > 0.0:
        raise NoDirectionFound(f"no tangent direction found (best margin {m[k]:.3e})")
    return ConcavityDirection(vs[k], float(m[k]))


def fit_disc_parameters(spec, a, v, zeta=None, ntheta=NTHETA, floor=MEMBERSHIP_FLOOR,
                        eps_budget=30, mu_budget=40, cone=None):
    """Pick ``eps = 2^-k`` so the deformed disc's boundary is in the open cone, then
    ``mu = 2^-m`` so the rescaled boundary is inside the domain with margin ``floor``
    and, when ``a`` is charted, inside that chart's box."""
    a = np.asarray(a, dtype=float)
    cone = tangent_cone(spec, a) if cone is None else cone
    if zeta is None:
        zeta = cone.frame[-1]
    v = np.asarray(v, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    eps = None
    for k in range(eps_budget + 1):
        trial = AnalyticDisc.make(np.zeros_like(a), v, zeta, 0.5**k, 1.0)
        if np.all(cone.margin(trial.boundary(ntheta)) > 0.0):
            eps = 0.5**k
            break
    if eps is None:
        raise FitFailed("no eps puts the deformed disc boundary inside the tangent cone")
    ci = dm.find_chart(spec, a, slack=1e-9)
    for m in range(mu_budget + 1):
        disc = AnalyticDisc.make(a, v, zeta, eps, 0.5**m)
        bnd = disc.boundary(ntheta)
        if ci >= 0 and not np.all(spec.charts[ci].in_box(spec.charts[ci].to_chart(bnd))):
            continue
        if boundary_margins(spec, disc, ntheta).min() >= floor:
            return disc
    raise FitFailed(f"no mu down to 2^-{mu_budget} keeps the disc boundary inside the domain")


# ---------------------------------------------------------------------------
# witness

def monomial_corpus(nz, degree=4):
    """Monomials of total degree 1..degree in ``nz`` complex variables."""
    from itertools import product

    out = []
    for powers in product(range(degree + 1), repeat=nz):
        if 0 < sum(powers) <= degree:
            p = np.array(powers)
            label = "*".join(f"z{i + 1}^{e}" for i, e in enumerate(powers) if e) or "1"
            out.append((label, lambda z, p=p: np.prod(z**p, axis=-1)))
    return out


@dataclass(frozen=True)
class RationalProbe:
    """``1 / (z_k - pole)``; the polar hyperplane must avoid the closed domain."""

    k: int
    pole: complex

    @property
    def label(self):
        return f"1/(z{self.k + 1} - ({self.pole:.6g}))"

    def __call__(self, z):
        return 1.0 / (z[..., self.k] - self.pole)

    def avoids(self, spec, samples=4096, extent=4.0, seed=3):
        """Numerical check that ``{z_k = pole}`` misses the closed domain."""
        if spec.global_region is None:
            return False
        n = spec.n
        x = (2.0 * dm.halton(samples, n, seed) - 1.0) * extent
        x[:, 2 * self.k] = self.pole.real
        x[:, 2 * self.k + 1] = self.pole.imag
        return bool(np.all(spec.global_rho(x) > 0.0))


@dataclass
class WitnessReport:
    status: str  # "witness" | "inconclusive" | "refused"
    reason: str = ""
    point: np.ndarray | None = None
    disc: AnalyticDisc | None = None
    family: DiscFamily | None = None
    direction_margin: float | None = None
    probes: list = field(default_factory=list)
    coherence: float | None = None
    edge_kind: str | None = None

    @property
    def found(self):
        return self.status == "witness"


def _generic_edge_point(spec, cls, a, k=64):
    """``a`` itself if generic, else the nearest generic sample of the same edge."""
    edge = (cls.chart, cls.edge)
    if is_generic(spec, edge, a):
        return a
    ch = spec.charts[cls.chart]
    _, _, x = ch.sample_edge(cls.edge, k, seed=11)
    order = np.argsort(np.linalg.norm(x - a, axis=1))
    for i in order:
        if is_generic(spec, edge, x[i]):
            return x[i]
    return None


def witness_non_domain(spec, a, probes=None, ntheta=NTHETA, floor=MEMBERSHIP_FLOOR):
    """Assemble disc-extension evidence at a non-convex real edge point."""
    a = np.asarray(a, dtype=float)
    cls = dm.classify_boundary_point(spec, a)
    if cls.kind != BoundaryClass.EDGE:
        return WitnessReport("inconclusive", f"{cls.kind} point: no edge to attach discs to", a)
    et = edge_type(spec, (cls.chart, cls.edge), a)
    if et.kind == EdgeType.COMPLEX:
        return WitnessReport("refused", "complex edge: disc construction needs a real edge", a,
                             edge_kind=et.kind)
    b = _generic_edge_point(spec, cls, a)
    if b is None:
        return WitnessReport("inconclusive", "no generic edge point nearby", a, edge_kind=et.kind)
    cone = tangent_cone(spec, b)
    try:
        cd = find_concavity_direction(cone)
        disc = fit_disc_parameters(spec, b, cd.v, cone=cone, ntheta=ntheta, floor=floor)
    except (NoDirectionFound, FitFailed) as exc:
        return WitnessReport("inconclusive", str(exc), b, edge_kind=et.kind)

    # translates: coordinate shifts fill a neighbourhood of b; shifts along mu v
    # give coincident points A_0(delta/2) = A_d(-delta/2) for coherence checks
    m0 = boundary_margins(spec, disc, ntheta).min()
    n = spec.n
    step = 0.25 * m0
    family = None
    for _ in range(30):
        deltas = np.array([0.25, 0.5]) * step / disc.mu
        shifts = [np.zeros(n)] + [s * e for e in np.eye(n) for s in (step, -step)]
        shifts += [dl * disc.mu * cd.v for dl in deltas]
        try:
            family = disc_family(spec, disc, np.array(shifts), floor, ntheta)
            break
        except BoundaryExitsDomain:
            step *= 0.5
    if family is None:
        return WitnessReport("inconclusive", "could not build a family of translates", b, disc,
                             direction_margin=cd.margin, edge_kind=et.kind)

    corpus = monomial_corpus(spec.dimension) if probes is None else list(probes)
    corpus = [(p.label, p) if hasattr(p, "label") else p for p in corpus]
    rows = []
    worst = 0.0
    coh_index = range(1 + 2 * n, family.count)
    for label, f in corpus:
        for i in range(family.count):
            d = family.disc(i)
            val = complex(cauchy_integral(f, d, 0.0, ntheta))
            exact = complex(f(d.complex_point(0.0)))
            err = abs(val - exact)
            inside = dm.membership(spec, d(0.0)) == "inside"
            rows.append({"probe": label, "disc": i, "point": d(0.0), "inside": inside,
                         "value": val, "closed_form": exact, "error": err})
        for i in coh_index:
            dl = float(family.translations[i] @ cd.v) / disc.mu
            va = complex(cauchy_integral(f, family.disc(0), 0.5 * dl, ntheta))
            vb = complex(cauchy_integral(f, family.disc(i), -0.5 * dl, ntheta))
            worst = max(worst, abs(va - vb))
    status = "witness" if worst <= COHERENCE_TOL and all(r["error"] <= COHERENCE_TOL for r in rows) \
        else "inconclusive"
    reason = "" if status == "witness" else "extension probes disagree beyond tolerance"
    return WitnessReport(status, reason, b, disc, family, cd.margin, rows, worst, et.kind)


def replay_witness(spec, disc, ntheta=NTHETA, floor=MEMBERSHIP_FLOOR):
    """Re-check a disc: boundary inside the domain, centre point not inside.

    The centre is a boundary point, so its margin is zero up to rounding; it
    counts as not inside when below the same ``floor`` the boundary must clear.
    """
    m = boundary_margins(spec, disc, ntheta).min()
    centre = dm.inside_margin(spec, disc(0.0), strict=False)
    return bool(m >= floor and not centre >= floor), float(m), float(centre)
