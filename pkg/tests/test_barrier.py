import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pscvx import fixtures as fx
from pscvx.barrier import (
    Barrier,
    barrier_jet,
    barrier_levi_closed_form,
    build_barrier,
    compute_lambda,
    condition_ii,
    exhaustion_value,
    lemma_decomposition,
    shrink_for_bound,
)
from pscvx.errors import NonNegativeRho, NotInside, OutsideBall, ShrinkBudgetExceeded
from pscvx.expr import eval_jet, parse
from pscvx.hermitian import levi_form, restrict_to_kernel, wirtinger_gradient

from oracles import fd_gradient, fd_hessian

ENVELOPE_RHO = parse("abs2(2) + (abs2(1) - 1)^2 - 2", 4)


@pytest.fixture(scope="module")
def ball_collar():
    return shrink_for_bound(fx.ball(), 0)


def random_zeta(rng, k):
    return rng.normal(size=(k, 2)) + 1j * rng.normal(size=(k, 2))


# -- collar and lambda ------------------------------------------------------------------

def test_ball_collar(ball_collar):
    rho = np.sum(ball_collar.points**2, axis=1) - 1
    assert np.all(rho < 0)
    assert ball_collar.sup_levi_norm == pytest.approx(1.0)
    # ||L rho|| = 1 so the collar condition is |rho| <= 0.9 / 8 < 1/8
    assert np.max(-rho) <= 0.9 / 8
    assert np.all(np.sum(ball_collar.points**2, axis=1) >= 7 / 8)
    assert compute_lambda(ball_collar) == pytest.approx(8.4, rel=1e-15)


@pytest.mark.parametrize("name,ci", [("ball", 0), ("envelope_domain", 0), ("envelope_domain", 1),
                                     ("hartogs_figure", 0), ("halfspace", 0)])
def test_collar_invariants(name, ci, specs):
    col = shrink_for_bound(specs[name], ci)
    assert col.halvings <= 40 and col.count == 10_000
    j = col.chart.barrier_rho_jet(col.points)
    lnorm = np.linalg.norm(levi_form(j).matrix, 2, axis=(-2, -1))
    assert np.all(np.abs(j.value) * lnorm <= 1 / 8)
    lam = compute_lambda(col)
    assert lam >= 8 * np.max(lnorm) ** 2
    # condition (ii) of the lemma at every collar sample
    assert np.all(condition_ii(j, lam) >= 0)


def test_halfspace_lambda_floor(specs):
    col = shrink_for_bound(specs["halfspace"], 0)
    assert col.halvings == 0 and col.sup_levi_norm == 0.0
    assert compute_lambda(col) == 1e-6


def test_shrink_budget():
    # |rho| ||L rho|| stays large on a tiny budget for a highly curved sphere
    spec = fx.ball()
    with pytest.raises(ShrinkBudgetExceeded):
        shrink_for_bound(spec, 0, budget=0)


# -- barrier jet ---------------------------------------------------------------------------

def test_halfspace_phi_value():
    spec = fx.halfspace()
    x = np.array([0.0, 0.0, 0.0, math.exp(-1)])
    lam = 1e-6
    assert barrier_jet(spec, 0, lam, x).value == pytest.approx(1.0 + lam * math.exp(-2))
    with pytest.raises(NotInside):
        barrier_jet(spec, 0, lam, np.array([0.0, 0.0, 0.0, -0.1]))


@pytest.mark.parametrize("name", ["ball", "envelope_domain", "convex_wedge", "hartogs_figure"])
def test_barrier_jet_vs_finite_differences(name, specs):
    spec = specs[name]
    col, bar = build_barrier(spec, 0, samples=2000)
    j = col.chart.barrier_rho_jet(col.points)
    pts = col.points[-j.value > 0.02][:10]
    f = lambda x: float(bar.value(x))
    for x in pts:
        jet = bar.jet(x)
        g = fd_gradient(f, x, h=1e-6)
        assert np.allclose(jet.gradient, g, rtol=1e-5, atol=1e-5 * np.abs(g).max())
        # Richardson on the step removes the O(h^2) truncation term
        h = (4 * fd_hessian(f, x, h=5e-5) - fd_hessian(f, x, h=1e-4)) / 3
        assert np.allclose(jet.hessian, h, rtol=1e-5, atol=1e-5 * np.abs(h).max())


@pytest.mark.parametrize("name,ci", [("ball", 0), ("envelope_domain", 0), ("envelope_domain", 1),
                                     ("hartogs_figure", 0), ("convex_wedge", 0)])
def test_closed_form_matches_jet(name, ci, specs):
    col = shrink_for_bound(specs[name], ci)
    lam = compute_lambda(col)
    rho = col.chart.barrier_rho_jet(col.points)
    via_jet = levi_form(barrier_jet(specs[name], col.chart, lam, col.points)).matrix
    closed = barrier_levi_closed_form(rho, lam).matrix
    scale = np.maximum(1.0, np.abs(closed).max(axis=(-2, -1)))
    assert np.all(np.abs(via_jet - closed).max(axis=(-2, -1)) <= 1e-10 * scale)


def test_closed_form_halfspace():
    t, lam = 0.3, 0.5
    rho = eval_jet(parse("-x4", 4), np.array([0.1, 0.2, 0.3, t]))
    assert np.allclose(wirtinger_gradient(rho), [0, 0.5j])
    m = barrier_levi_closed_form(rho, lam).matrix
    want = lam * np.eye(2)
    want[1, 1] += 1 / (4 * t * t)
    assert np.allclose(m, want)
    with pytest.raises(NonNegativeRho):
        barrier_levi_closed_form(eval_jet(parse("x4", 4), np.array([0, 0, 0, 0.1])), lam)


def test_ball_levi_psd(ball_collar):
    lam = compute_lambda(ball_collar)
    rho = ball_collar.chart.barrier_rho_jet(ball_collar.points)
    w = np.linalg.eigvalsh(barrier_levi_closed_form(rho, lam).matrix)
    assert w.min() >= 0


def test_lambda_zero_without_hypothesis():
    # near z = 0 the envelope rho has L rho = diag(-2, 1): without lambda the barrier fails
    x = np.array([0.0, 0.0, 0.5, 0.0])
    rho = eval_jet(ENVELOPE_RHO, x)
    assert rho.value == pytest.approx(-0.75)
    w = np.linalg.eigvalsh(barrier_levi_closed_form(rho, 0.0).matrix)
    assert w[0] < 0
    # for the ball the lemma's conclusion holds even with lambda = 0 (convex level sets)
    r = eval_jet(parse("norm2 - 1", 4), np.array([0.1, 0.0, 0.0, 0.1]))
    assert np.linalg.eigvalsh(barrier_levi_closed_form(r, 0.0).matrix)[0] > 0


# -- lemma decomposition -----------------------------------------------------------------------

def test_degenerate_split():
    rho = eval_jet(ENVELOPE_RHO, np.array([0.2, 0.1, 0.5, 0.3]))
    d = wirtinger_gradient(rho)
    zeta = np.conj(d)  # parallel to the dual: zeta2 = 0
    s = lemma_decomposition(rho, 3.0, zeta)
    n1 = np.sum(np.abs(zeta) ** 2)
    assert np.allclose(s.B, np.diag([3.0 * n1, 0.0]), atol=1e-12)
    assert np.allclose(s.A[1, :], 0, atol=1e-12) and np.allclose(s.A[:, 1], 0, atol=1e-12)


@pytest.mark.parametrize("name", ["ball", "envelope_domain", "hartogs_figure"])
def test_decomposition_reconstructs_levi(name, specs, rng):
    col = shrink_for_bound(specs[name], 0, samples=500)
    lam = compute_lambda(col)
    rho = col.chart.barrier_rho_jet(col.points)
    zeta = random_zeta(rng, col.count)
    s = lemma_decomposition(rho, lam, zeta)
    alpha = random_zeta(rng, col.count)
    lhs = np.einsum("...k,...kl,...l->...", alpha, s.A + s.B, np.conj(alpha))
    v = alpha[:, :1] * s.zeta1 + alpha[:, 1:] * s.zeta2
    rhs = barrier_levi_closed_form(rho, lam)(v)
    assert np.all(np.abs(lhs - rhs) <= 1e-10 * np.maximum(1.0, np.abs(rhs)))


@pytest.mark.parametrize("name,ci", [("ball", 0), ("envelope_domain", 1), ("convex_wedge", 0),
                                     ("halfspace", 0)])
def test_det_bound_on_pseudoconvex_collars(name, ci, specs, rng):
    col = shrink_for_bound(specs[name], ci)
    lam = compute_lambda(col)
    rho = col.chart.barrier_rho_jet(col.points)
    s = lemma_decomposition(rho, lam, random_zeta(rng, col.count))
    assert np.all(s.residual >= -1e-9 * np.maximum(1.0, np.abs(s.det_a)))
    assert np.all(s.bound >= -1e-9 * np.maximum(1.0, np.abs(s.det_a)))
    assert np.all(np.linalg.eigvalsh(s.B).min(axis=-1) >= -1e-9 * np.abs(s.B).max(axis=(-2, -1)))


@pytest.mark.parametrize("name", sorted(fx.FIXTURES))
def test_lemma_end_to_end(name, specs):
    spec = specs[name]
    for ci in range(len(spec.charts)):
        col = shrink_for_bound(spec, ci, samples=2000)
        lam = compute_lambda(col)
        rho = col.chart.barrier_rho_jet(col.points)
        restricted = restrict_to_kernel(levi_form(rho), wirtinger_gradient(rho))
        hyp = (np.linalg.eigvalsh(restricted.matrix)[:, 0] >= -1e-12) & (condition_ii(rho, lam) >= 0)
        w = np.linalg.eigvalsh(barrier_levi_closed_form(rho, lam).matrix)[:, 0]
        assert np.all(w[hyp] >= -1e-8)


# -- exhaustion ---------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def ball_barrier(ball_collar):
    return Barrier(fx.ball(), 0, compute_lambda(ball_collar))


def test_exhaustion_second_branch(ball_barrier):
    x0, eps = np.array([0.9, 0.0, 0.0, 0.0]), 0.05
    z = x0 + np.array([0.0, eps * (1 - math.exp(-1)), 0.0, 0.0])
    assert exhaustion_value(ball_barrier, x0, eps, z) >= 1.0
    with pytest.raises(OutsideBall):
        exhaustion_value(ball_barrier, x0, eps, x0 + np.array([0, eps, 0, 0]))


def test_exhaustion_diverges_along_ray(ball_barrier):
    x0, eps = np.array([0.9, 0.0, 0.0, 0.0]), 0.05
    u = np.array([0.0, 1.0, 0.0, 0.0])
    ks = np.arange(1, 30)
    vals = [float(exhaustion_value(ball_barrier, x0, eps, x0 + eps * (1 - math.exp(-k)) * u)) for k in ks]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] > 25


@pytest.mark.parametrize("c", [5.0, 10.0])
def test_exhaustion_sublevel_sets_compact(ball_barrier, c, rng):
    x0, eps = np.array([0.3, 0.0, 0.0, 0.0]), 0.69
    v = rng.normal(size=(20000, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    z = x0 + eps * rng.random(20000)[:, None] ** 0.25 * v
    z = z[np.sum(z**2, axis=1) < 1]
    val = exhaustion_value(ball_barrier, x0, eps, z)
    sub = z[val <= c]
    assert len(sub) > 100
    assert np.max(np.sum(sub**2, axis=1) - 1) <= -math.exp(-c)
    assert np.min(eps - np.linalg.norm(sub - x0, axis=1)) >= math.exp(-c)


@given(st.floats(0.01, 0.5))
def test_phi_blows_up_at_boundary(t):
    spec = fx.halfspace()
    a = float(barrier_jet(spec, 0, 1e-6, np.array([0, 0, 0, t])).value)
    b = float(barrier_jet(spec, 0, 1e-6, np.array([0, 0, 0, t / 10])).value)
    assert b - a == pytest.approx(math.log(10), rel=1e-6)
