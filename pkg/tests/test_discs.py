import numpy as np
import pytest
from hypothesis import given, strategies as st

from pscvx import domain as dm
from pscvx import fixtures as fx
from pscvx.discs import (
    AnalyticDisc,
    RationalProbe,
    boundary_margins,
    cauchy_extend,
    cauchy_integral,
    disc_family,
    find_concavity_direction,
    fit_disc_parameters,
    horizontal_disc,
    monomial_corpus,
    replay_witness,
    witness_non_domain,
)
from pscvx.edges import tangent_cone
from pscvx.errors import BoundaryExitsDomain, FitFailed, NoDirectionFound

HARTOGS_A = np.array([0.5, 0.0, 0.5, 0.0])
ORIGIN = np.zeros(4)


def poly_z1sq_w(z):
    return z[..., 0] ** 2 * z[..., 1]


def hartogs_hole_disc(w0=0.75, radius=0.75):
    return AnalyticDisc.make([0.0, 0.0, w0, 0.0], np.array([radius, 0.0], dtype=complex))


@pytest.fixture(scope="module")
def hartogs_witness():
    return witness_non_domain(fx.hartogs_figure(), HARTOGS_A)


# ---------------------------------------------------------------------------
# discs


@given(st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False),
       st.floats(0.0, 1.0), st.floats(0.01, 1.0))
def test_disc_base_and_holomorphy(t, eps, mu):
    rng = np.random.default_rng(0)
    d = AnalyticDisc.make(rng.normal(size=4), rng.normal(size=2) + 1j * rng.normal(size=2),
                          rng.normal(size=2) + 1j * rng.normal(size=2), eps, mu)
    assert np.array_equal(d(0.0), d.base)
    # Cauchy-Riemann: derivative along t and i t agree up to the factor i
    h = 1e-6
    dz_re = (d.complex_point(t + h) - d.complex_point(t - h)) / (2 * h)
    dz_im = (d.complex_point(t + 1j * h) - d.complex_point(t - 1j * h)) / (2 * h)
    assert np.allclose(dz_im, 1j * dz_re, atol=1e-7)


def test_rotate_keeps_image():
    d = AnalyticDisc.make(HARTOGS_A, [0.1, 0.2, 0.0, 0.3], [0.0, 0.0, 0.1, 0.0], 0.5, 0.25)
    r = d.rotate(0.7)
    t = 0.3 + 0.4j
    assert np.allclose(r(t * np.exp(-0.7j)), d(t), atol=1e-15)


# ---------------------------------------------------------------------------
# Cauchy extension


@pytest.mark.parametrize("t0", [0.0, 0.3 + 0.2j, -0.6j])
def test_cauchy_reproduces_polynomial(t0):
    d = AnalyticDisc.make(HARTOGS_A, [0.1, 0.2, 0.0, 0.3], [0.0, 0.0, 0.1, 0.0], 0.5, 0.25)
    got = cauchy_integral(poly_z1sq_w, d, t0)
    assert abs(got - poly_z1sq_w(d.complex_point(t0))) <= 1e-10


def test_cauchy_rejects_outside_parameter():
    d = hartogs_hole_disc()
    with pytest.raises(ValueError):
        cauchy_integral(poly_z1sq_w, d, 1.0)


def test_hartogs_hole_extension():
    spec = fx.hartogs_figure()
    d = hartogs_hole_disc()
    assert dm.membership(spec, d(0.0)) == "outside"
    assert boundary_margins(spec, d).min() >= 1e-6
    f = RationalProbe(1, 1.2)
    got = complex(cauchy_extend(f, d, 0.0, spec=spec))
    assert abs(got - 1.0 / (0.75 - 1.2)) <= 1e-8


def test_hartogs_horizontal_disc_search():
    spec = fx.hartogs_figure()
    d = horizontal_disc(spec, [0.0, 0.0, 0.75, 0.0], 0)
    assert boundary_margins(spec, d).min() >= 1e-6


def test_envelope_extension_and_scan():
    spec = fx.envelope_domain()
    f = RationalProbe(1, 1.45)
    assert f.avoids(spec)
    target = AnalyticDisc.make([0.0, 0.0, 1.3, 0.0], np.array([1.0, 0.0], dtype=complex))
    assert dm.membership(spec, target(0.0)) == "outside"
    got = complex(cauchy_extend(f, target, 0.0, spec=spec))
    assert abs(got - 1.0 / (1.3 - 1.45)) <= 1e-8
    for w in np.linspace(1.0, 1.41, 42):
        d = AnalyticDisc.make([0.0, 0.0, w, 0.0], np.array([1.0, 0.0], dtype=complex))
        assert abs(complex(cauchy_extend(f, d, 0.0, spec=spec)) - 1.0 / (w - 1.45)) <= 1e-8
    with pytest.raises(BoundaryExitsDomain):
        d = AnalyticDisc.make([0.0, 0.0, 1.42, 0.0], np.array([1.0, 0.0], dtype=complex))
        cauchy_extend(f, d, 0.0, spec=spec)


def test_pole_probe_through_domain_is_rejected():
    assert not RationalProbe(1, 1.0).avoids(fx.envelope_domain())


@pytest.mark.parametrize("theta0", [0.3, 1.7, np.pi, 5.0])
def test_cauchy_rotation_invariance(theta0, hartogs_witness):
    f = RationalProbe(1, 1.2)
    d = hartogs_witness.disc
    t0 = 0.2 - 0.1j
    a = complex(cauchy_integral(f, d, t0))
    b = complex(cauchy_integral(f, d.rotate(theta0), t0 * np.exp(-1j * theta0)))
    assert abs(a - b) <= 1e-10


@pytest.mark.parametrize("ntheta", [128, 256, 512])
def test_node_doubling_stability(ntheta, hartogs_witness):
    f = RationalProbe(1, 1.2)
    for d in [hartogs_witness.disc, hartogs_hole_disc()]:
        for t0 in (0.0, 0.25 + 0.25j):
            a = complex(cauchy_integral(f, d, t0, ntheta))
            b = complex(cauchy_integral(f, d, t0, 2 * ntheta))
            assert abs(a - b) <= 1e-10


def test_cauchy_self_consistency_on_family(hartogs_witness):
    fam = hartogs_witness.family
    for label, f in monomial_corpus(2) + [("rational", RationalProbe(1, 1.2))]:
        vals = cauchy_extend(f, fam, 0.1 + 0.05j)
        exact = np.array([f(fam.disc(i).complex_point(0.1 + 0.05j)) for i in range(fam.count)])
        assert np.max(np.abs(vals - exact)) <= 1e-10, label


# ---------------------------------------------------------------------------
# families


def test_family_margins_respect_floor(hartogs_witness):
    fam = hartogs_witness.family
    assert np.all(fam.margins >= fam.floor)
    for i in range(fam.count):
        assert boundary_margins(fam.spec, fam.disc(i)).min() >= fam.floor


def test_family_rejects_escaping_translate():
    spec = fx.hartogs_figure()
    d = hartogs_hole_disc()
    with pytest.raises(BoundaryExitsDomain):
        disc_family(spec, d, [[0, 0, 0, 0], [0, 0, 0.3, 0]])


# ---------------------------------------------------------------------------
# concavity direction and fitting


def _sin_grid_margin(cone, v, ntheta=256):
    # independent re-evaluation of the circle condition
    theta = 2 * np.pi * np.arange(ntheta) / ntheta
    vc = v[0::2] + 1j * v[1::2]
    out = []
    for t in theta:
        if abs(np.sin(t)) < 1e-12:
            continue
        w = np.exp(1j * t) * vc
        x = np.empty(4)
        x[0::2], x[1::2] = w.real, w.imag
        out.append(float(cone.margin(x)) / abs(np.sin(t)))
    return min(out)


def test_hartogs_concavity_direction():
    spec = fx.hartogs_figure()
    cone = tangent_cone(spec, HARTOGS_A)
    cd = find_concavity_direction(cone)
    assert cd.margin > 0.1
    assert _sin_grid_margin(cone, cd.v) == pytest.approx(cd.margin, rel=1e-9)
    # v lies in the edge tangent space
    t = cone.ambient_edge_tangent()
    assert np.linalg.norm(cd.v - t @ (t.T @ cd.v)) <= 1e-12


def test_convex_cone_has_no_direction():
    cone = tangent_cone(fx.convex_wedge(), ORIGIN)
    with pytest.raises(NoDirectionFound):
        find_concavity_direction(cone)


def test_reflex_wedge_direction_is_complexified_edge():
    # h = -|x1|: e^{it} e2 = (-sin t, cos t, 0, 0) stays above the graph, e3 does not
    cone = tangent_cone(fx.reflex_wedge(), ORIGIN)
    cd = find_concavity_direction(cone)
    assert abs(abs(cd.v[1]) - 1.0) <= 1e-12
    assert cd.margin == pytest.approx(1.0, abs=1e-12)


def test_fit_hartogs_disc():
    spec = fx.hartogs_figure()
    cone = tangent_cone(spec, HARTOGS_A)
    cd = find_concavity_direction(cone)
    d = fit_disc_parameters(spec, HARTOGS_A, cd.v, cone=cone)
    assert d.mu <= 1 / 8
    assert np.all([dm.membership(spec, x) == "inside" for x in d.boundary()])
    assert boundary_margins(spec, d).min() >= 1e-6
    d2 = fit_disc_parameters(spec, HARTOGS_A, cd.v, cone=cone, ntheta=512)
    assert (d2.eps, d2.mu) == (d.eps, d.mu)


def test_fit_fails_on_ball():
    spec = fx.ball()
    a = np.array([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(FitFailed):
        # complex tangent direction at a strictly pseudoconvex point
        fit_disc_parameters(spec, a, [0.0, 0.0, 1.0, 0.0])


# ---------------------------------------------------------------------------
# witnesses


def test_hartogs_witness(hartogs_witness):
    r = hartogs_witness
    assert r.found
    assert r.coherence <= 1e-8
    assert all(row["error"] <= 1e-8 for row in r.probes)
    ok, margin, centre = replay_witness(fx.hartogs_figure(), r.disc)
    assert ok and margin >= 1e-6 and centre <= 0.0


def test_convex_wedge_inconclusive():
    r = witness_non_domain(fx.convex_wedge(), ORIGIN)
    assert r.status == "inconclusive"


def test_polygon_complex_edge_refused():
    r = witness_non_domain(fx.polygon_cross_plane(), ORIGIN)
    assert r.status == "refused"
    assert r.edge_kind == "complex_edge"


def test_regular_point_inconclusive():
    r = witness_non_domain(fx.ball(), np.array([1.0, 0.0, 0.0, 0.0]))
    assert r.status == "inconclusive"
