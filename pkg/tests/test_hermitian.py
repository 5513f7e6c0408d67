import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pscvx.errors import ZeroGradient
from pscvx.expr import eval_jet, parse
from pscvx.hermitian import (
    HermitianForm,
    covector_norm,
    hermitian_norm,
    kernel_basis,
    levi_form,
    min_eigenpairs,
    pair,
    psd_check,
    restrict_to_kernel,
    split_along_gradient,
    wirtinger_gradient,
)
from pscvx.jets import Jet2, to_real

from oracles import (
    complex_line_laplacian,
    fd_gradient,
    levi_from_hessian,
    random_hermitian,
    sylvester_psd,
    sympy_jet,
)

ENVELOPE_RHO = "abs2(2) + (abs2(1) - 1)^2 - 2"
FIELDS = [
    ("abs2(1) + abs2(2)", 4),
    (ENVELOPE_RHO, 4),
    ("re(1)^2 - im(1)^2", 4),
    ("exp(x1*x3) - x2^2*x4 + sqrt(2 + x3^2)", 4),
    ("log(3 + abs2(1)) * re(2) - im(3)^3", 6),
]
complex_vec = st.builds(
    lambda a: a[:, 0] + 1j * a[:, 1],
    arrays(np.float64, (2, 2), elements=st.floats(-3, 3)),
)


def jet_of(text, nvars, x):
    return eval_jet(parse(text, nvars), np.asarray(x, dtype=float))


def fn_of(text, nvars):
    from pscvx.expr import evaluate
    e = parse(text, nvars)
    return lambda x: float(evaluate(e, np.asarray(x, dtype=float)))


# -- wirtinger gradient ------------------------------------------------------

def test_wirtinger_of_coordinate():
    j = Jet2.coordinate(np.array([0.3, -1.0, 2.0, 0.5]), 0)
    assert np.array_equal(wirtinger_gradient(j), [0.5, 0.0])


@given(complex_vec)
def test_wirtinger_of_norm_is_conjugate(a):
    j = jet_of("norm2", 4, to_real(a))
    assert np.allclose(wirtinger_gradient(j), np.conj(a), atol=1e-14)
    assert np.isclose(covector_norm(wirtinger_gradient(j)), np.linalg.norm(a))


@pytest.mark.parametrize("text,n", FIELDS)
def test_wirtinger_vs_real_linear_curves(text, n, rng):
    f = fn_of(text, n)
    for _ in range(5):
        x = rng.uniform(-0.8, 0.8, n)
        d = wirtinger_gradient(jet_of(text, n, x))
        for _ in range(3):
            xi = rng.normal(size=n // 2) + 1j * rng.normal(size=n // 2)
            # d rho(xi) = (D_u - i D_{J u}) rho / 2 with u the real form of xi
            u, ju = to_real(xi), to_real(1j * xi)
            du = (f(x + 1e-5 * u) - f(x - 1e-5 * u)) / 2e-5
            dju = (f(x + 1e-5 * ju) - f(x - 1e-5 * ju)) / 2e-5
            want = 0.5 * (du - 1j * dju)
            assert abs(pair(d, xi) - want) <= 1e-6 * max(1.0, abs(want))


# -- levi form ----------------------------------------------------------------

def test_levi_examples():
    assert np.allclose(levi_form(jet_of("norm2", 4, [0.3, 1, -2, 0.1])).matrix, np.eye(2))
    env = levi_form(jet_of(ENVELOPE_RHO, 4, [0, 0, 1, 0])).matrix
    assert np.allclose(env, np.diag([-2.0, 1.0]), atol=1e-14)
    assert np.allclose(levi_form(jet_of("re(1)^2 - im(1)^2", 4, [0.7, -0.2, 1, 1])).matrix, 0)


@pytest.mark.parametrize("text,n", FIELDS)
def test_levi_vs_symbolic(text, n, rng):
    for _ in range(3):
        x = rng.uniform(-0.8, 0.8, n)
        _, _, H = sympy_jet(text, n, x)
        got = levi_form(jet_of(text, n, x)).matrix
        assert np.allclose(got, levi_from_hessian(H), atol=1e-12, rtol=1e-12)


@pytest.mark.parametrize("text,n", FIELDS)
def test_complex_line_laplacian(text, n, rng):
    # L(xi, xi) is a quarter of the Laplacian along s + i t -> a + (s + i t) xi
    f = fn_of(text, n)
    for _ in range(4):
        x = rng.uniform(-0.8, 0.8, n)
        xi = rng.normal(size=n // 2) + 1j * rng.normal(size=n // 2)
        got = levi_form(jet_of(text, n, x))(xi).real
        want = complex_line_laplacian(f, x, xi, h=1e-3)
        assert abs(got - want) <= 1e-5 * max(1.0, abs(want))


@given(complex_vec, complex_vec)
def test_hermitian_symmetry_exact(xi, eta):
    form = levi_form(jet_of(FIELDS[3][0], 4, [0.1, 0.2, -0.3, 0.4]))
    assert form(xi, eta) == np.conj(form(eta, xi))


def test_linearity(rng):
    x = rng.uniform(-0.5, 0.5, 4)
    e1, e2 = parse(FIELDS[1][0], 4), parse(FIELDS[3][0], 4)
    j1, j2 = eval_jet(e1, x), eval_jet(e2, x)
    assert np.allclose(levi_form(j1 + j2).matrix, levi_form(j1).matrix + levi_form(j2).matrix,
                       atol=1e-13)


def test_form_is_symmetrised():
    m = np.array([[1.0, 2.0], [0.0, 3.0]])
    h = HermitianForm(m).matrix
    assert np.array_equal(h, np.conj(h.T))


# -- restriction and psd ---------------------------------------------------------

def test_restriction_examples():
    r = restrict_to_kernel(HermitianForm(np.eye(2)), np.array([1.0, 0.0]))
    assert np.allclose(r.matrix, [[1.0]])
    d = wirtinger_gradient(jet_of(ENVELOPE_RHO, 4, [0, 0, 1, 0]))
    assert np.allclose(d, [0, 1])
    r = restrict_to_kernel(HermitianForm(np.diag([-2.0, 1.0])), d)
    assert np.allclose(r.matrix, [[-2.0]])


def test_zero_gradient():
    with pytest.raises(ZeroGradient):
        restrict_to_kernel(HermitianForm(np.eye(2)), np.zeros(2))
    with pytest.raises(ZeroGradient):
        split_along_gradient(np.ones(2), np.zeros(2))


@given(st.integers(0, 10_000), st.integers(2, 4))
def test_restriction_interlaces(seed, n):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, n)
    d = rng.normal(size=n) + 1j * rng.normal(size=n)
    lam = np.linalg.eigvalsh(h)
    mu = np.linalg.eigvalsh(restrict_to_kernel(HermitianForm(h), d).matrix)
    assert np.all(mu >= lam[:-1] - 1e-10) and np.all(mu <= lam[1:] + 1e-10)
    q = kernel_basis(d)
    assert np.allclose(d @ q, 0, atol=1e-12)
    assert np.allclose(q.conj().T @ q, np.eye(n - 1), atol=1e-12)


@given(st.integers(0, 10_000))
def test_restriction_of_psd_is_psd(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    form = HermitianForm(a @ a.conj().T)
    d = rng.normal(size=3) + 1j * rng.normal(size=3)
    assert psd_check(restrict_to_kernel(form, d)).psd


def test_restriction_is_deterministic(rng):
    h = HermitianForm(random_hermitian(rng, 3))
    d = rng.normal(size=3) + 1j * rng.normal(size=3)
    assert np.array_equal(restrict_to_kernel(h, d).matrix, restrict_to_kernel(h, d).matrix)


def test_psd_examples():
    assert psd_check(HermitianForm(np.eye(2))).psd
    res = psd_check(HermitianForm(np.diag([-2.0, 1.0])))
    assert not res.psd and res.min_eigenvalue == pytest.approx(-2.0)
    assert np.isclose(abs(res.witness[0]), 1.0) and abs(res.witness[1]) < 1e-14
    with pytest.raises(ValueError):
        psd_check(HermitianForm(np.eye(2)), tol=-1.0)


def test_psd_vs_sylvester_minors():
    rng = np.random.default_rng(7)
    forms = np.stack([random_hermitian(rng, 2) for _ in range(10_000)])
    # shift half of them towards psd so both outcomes are common
    forms = forms + np.where(rng.random(10_000) < 0.5, 2.5, 0.0)[:, None, None] * np.eye(2)
    w, _ = min_eigenpairs(HermitianForm(forms))
    disagree = 0
    for m, lam in zip(forms, w):
        det = (m[0, 0] * m[1, 1] - abs(m[0, 1]) ** 2).real
        if abs(det) < 1e-9 or abs(m[0, 0]) < 1e-9:
            continue  # on the psd boundary both answers are acceptable
        disagree += (lam >= -1e-12) != sylvester_psd(m)
    assert disagree == 0
    assert np.allclose(w, np.linalg.eigvalsh(forms)[:, 0], atol=1e-12)


def test_witness_is_negative_direction(rng):
    for _ in range(50):
        h = HermitianForm(random_hermitian(rng, 3))
        res = psd_check(h)
        if not res.psd:
            assert np.isclose(np.linalg.norm(res.witness), 1.0)
            assert h(res.witness).real == pytest.approx(res.min_eigenvalue, abs=1e-12)


# -- norms and splitting ------------------------------------------------------------

def test_norm_examples():
    assert hermitian_norm(HermitianForm(np.eye(2))) == pytest.approx(1.0)
    a = np.array([0.3 - 1j, 2.0 + 0.5j])
    d = wirtinger_gradient(jet_of("norm2", 4, to_real(a)))
    assert covector_norm(d) == pytest.approx(np.linalg.norm(a))


def test_norm_is_sampled_sup():
    rng = np.random.default_rng(3)
    h = HermitianForm(random_hermitian(rng, 2))
    xi = rng.normal(size=(10_000, 2)) + 1j * rng.normal(size=(10_000, 2))
    eta = rng.normal(size=(10_000, 2)) + 1j * rng.normal(size=(10_000, 2))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    eta /= np.linalg.norm(eta, axis=1, keepdims=True)
    # best eta for each xi plus random pairs
    best = np.linalg.norm(xi @ h.matrix, axis=1)
    sampled = max(best.max(), np.abs(h(xi, eta)).max())
    norm = hermitian_norm(h)
    assert sampled <= norm + 1e-12
    assert norm - sampled <= 1e-3 * norm


def test_covector_norm_is_sup(rng):
    d = rng.normal(size=3) + 1j * rng.normal(size=3)
    xi = rng.normal(size=(10_000, 3)) + 1j * rng.normal(size=(10_000, 3))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    assert np.abs(xi @ d).max() <= covector_norm(d) + 1e-12
    assert abs(pair(d, np.conj(d) / covector_norm(d))) == pytest.approx(covector_norm(d))


def test_split_examples():
    z1, z2 = split_along_gradient(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
    assert np.allclose(z1, [1, 0]) and np.allclose(z2, [0, 0])
    z1, z2 = split_along_gradient(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
    assert np.allclose(z1, [1, 0]) and np.allclose(z2, [0, 1])


@given(st.integers(0, 10_000))
def test_split_properties(seed):
    rng = np.random.default_rng(seed)
    zeta = rng.normal(size=3) + 1j * rng.normal(size=3)
    d = rng.normal(size=3) + 1j * rng.normal(size=3)
    z1, z2 = split_along_gradient(zeta, d)
    assert np.linalg.norm(zeta - z1 - z2) <= 1e-12
    assert abs(np.vdot(z1, z2)) <= 1e-12
    assert abs(pair(d, z2)) <= 1e-12
    assert abs(pair(d, z1)) == pytest.approx(covector_norm(d) * np.linalg.norm(z1), rel=1e-12)


def test_batched_forms(rng):
    x = rng.uniform(-0.5, 0.5, size=(20, 4))
    j = jet_of(FIELDS[3][0], 4, x)
    forms = levi_form(j)
    assert forms.batch_shape == (20,)
    w = forms.eigvals()
    assert np.allclose(w, np.linalg.eigvalsh(forms.matrix), atol=1e-12)
    d = wirtinger_gradient(j)
    r = restrict_to_kernel(forms, d)
    for i in (0, 7):
        assert np.allclose(r.matrix[i], restrict_to_kernel(forms[i], d[i]).matrix)
