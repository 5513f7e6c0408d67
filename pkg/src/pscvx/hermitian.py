"""Wirtinger and Levi calculus on top of :mod:`pscvx.jets`.

Conventions
-----------
* ``z_k = x[2k] + i x[2k+1]``; ``d/dz_k = (d/dx_{2k} - i d/dx_{2k+1}) / 2``.
* A covector ``d`` pairs with a vector by ``d(xi) = sum_k d_k xi_k``.
* A :class:`HermitianForm` with matrix ``H`` evaluates
  ``L(xi, eta) = sum_{k,l} H[k, l] xi_k conj(eta_l)``.

Eigenvalues come from the cyclic Jacobi kernel applied to the real symmetric
embedding ``[[A, -B], [B, A]]`` of ``H = A + iB``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ZeroGradient

ZERO_GRADIENT_TOL = 1e-12
PSD_TOL = 1e-8


class HermitianForm:
    """Hermitian N x N matrix (or a batch of them, leading axes)."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        h = np.asarray(matrix, dtype=complex)
        if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
            raise ValueError(f"expected square matrix, got shape {h.shape}")
        h = 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))
        h.setflags(write=False)
        object.__setattr__(self, "matrix", h)

    def __setattr__(self, name, val):
        raise AttributeError("HermitianForm is immutable")

    @property
    def dim(self):
        return self.matrix.shape[-1]

    @property
    def batch_shape(self):
        return self.matrix.shape[:-2]

    def __getitem__(self, idx):
        return HermitianForm(self.matrix[idx])

    def __call__(self, xi, eta=None):
        xi = np.asarray(xi, dtype=complex)
        eta = xi if eta is None else np.asarray(eta, dtype=complex)
        s = np.einsum("...k,...kl,...l->...", xi, self.matrix, np.conj(eta))
        t = np.einsum("...k,...kl,...l->...", eta, self.matrix, np.conj(xi))
        # averaging both orders makes L(xi, eta) = conj L(eta, xi) bit for bit
        return 0.5 * (s + np.conj(t))

    def __add__(self, other):
        return HermitianForm(self.matrix + other.matrix)

    def __mul__(self, c):
        return HermitianForm(self.matrix * np.asarray(c, dtype=float)[..., None, None])

    __rmul__ = __mul__

    def __repr__(self):
        return f"HermitianForm({self.matrix!r})"

    def real_embedding(self):
        a = self.matrix.real
        b = self.matrix.imag
        top = np.concatenate([a, -b], axis=-1)
        bottom = np.concatenate([b, a], axis=-1)
        return np.concatenate([top, bottom], axis=-2)

    def eigh(self):
        """Ascending eigenvalues and matching unit eigenvectors ``u`` (``H u = w u``).

        Degenerate eigenvalues may come with dependent eigenvectors; only the
        eigenvalues and individual eigenpairs are meaningful.
        """
        n = self.dim
        emb = self.real_embedding().reshape((-1, 2 * n, 2 * n))
        w, v, _ = kernels.jacobi_eigh_batch(emb)
        w = w[:, 0::2]
        cols = v[:, :, 0::2]
        u = cols[:, :n, :] + 1j * cols[:, n:, :]
        shape = self.batch_shape
        return w.reshape(shape + (n,)), u.reshape(shape + (n, n))

    def eigvals(self):
        return self.eigh()[0]


def wirtinger_gradient(jet):
    """Complex differential ``d rho`` with components ``d rho / d z_k``."""
    g = jet.gradient
    return 0.5 * (g[..., 0::2] - 1j * g[..., 1::2])


def levi_form(jet):
    """Matrix of mixed derivatives ``d^2 rho / dz_k d conj(z_l)``."""
    h = jet.hessian
    xx = h[..., 0::2, 0::2]
    yy = h[..., 1::2, 1::2]
    xy = h[..., 0::2, 1::2]
    yx = h[..., 1::2, 0::2]
    return HermitianForm(0.25 * ((xx + yy) + 1j * (xy - yx)))


def pair(d, xi):
    """Evaluate the covector ``d`` on ``xi``."""
    return np.sum(np.asarray(d) * np.asarray(xi), axis=-1)


def covector_norm(d):
    return np.sqrt(np.sum(np.abs(np.asarray(d, dtype=complex)) ** 2, axis=-1))


def hermitian_norm(form):
    """Spectral norm, the sup of |L(xi, eta)| over unit vectors."""
    w = form.eigvals()
    return np.max(np.abs(w), axis=-1)


def _unit_dual(d, tol):
    d = np.asarray(d, dtype=complex)
    nd = covector_norm(d)
    if np.any(nd < tol):
        raise ZeroGradient(f"complex gradient norm {np.min(nd):.3e} below {tol:g}")
    return np.conj(d) / nd[..., None], nd


def kernel_basis(d, tol=ZERO_GRADIENT_TOL):
    """Orthonormal basis (columns) of ``{xi : d(xi) = 0}``.

    Gram-Schmidt over the coordinate vectors in index order, skipping the one
    most parallel to the Hermitian dual of ``d``; the result is therefore
    fully determined by ``d``.
    """
    nhat, _ = _unit_dual(d, tol)
    n = nhat.shape[-1]
    batch = nhat.shape[:-1]
    drop = np.argmax(np.abs(nhat), axis=-1)
    basis = np.zeros(batch + (n, n - 1), dtype=complex)
    for slot in range(n - 1):
        j = slot + (slot >= drop)
        vec = np.zeros(batch + (n,), dtype=complex)
        np.put_along_axis(vec, np.asarray(j)[..., None], 1.0, axis=-1)
        prev = [nhat] + [basis[..., :, s] for s in range(slot)]
        for _ in range(2):  # re-orthogonalise once for stability
            for q in prev:
                vec = vec - np.sum(vec * np.conj(q), axis=-1)[..., None] * q
        vec = vec / np.linalg.norm(vec, axis=-1)[..., None]
        basis[..., :, slot] = vec
    return basis


def restrict_to_kernel(form, d, tol=ZERO_GRADIENT_TOL):
    """Restriction of ``form`` to the complex tangent space ``ker d``."""
    q = kernel_basis(d, tol)
    h = form.matrix
    m = np.einsum("...ka,...kl,...lb->...ab", q, h, np.conj(q))
    return HermitianForm(m)


@dataclass(frozen=True)
class PsdResult:
    psd: bool
    min_eigenvalue: float
    witness: np.ndarray | None = None

    def __bool__(self):
        return self.psd


def psd_check(form, tol=PSD_TOL):
    """Decide ``min eigenvalue >= -tol``; a failing result carries a unit
    vector ``xi`` with ``L(xi, xi) = min eigenvalue < -tol``."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    if form.batch_shape:
        raise ValueError("psd_check takes a single form; use min_eigenpairs for batches")
    if form.dim == 0:
        return PsdResult(True, float("inf"))
    w, u = form.eigh()
    lam = float(w[0])
    if lam >= -tol:
        return PsdResult(True, lam)
    return PsdResult(False, lam, np.conj(u[:, 0]))


def min_eigenpairs(form):
    """Batch helper: smallest eigenvalue and its witness vector for each form."""
    w, u = form.eigh()
    return w[..., 0], np.conj(u[..., :, 0])


def split_along_gradient(zeta, d, tol=ZERO_GRADIENT_TOL):
    """Orthogonal split ``zeta = zeta1 + zeta2`` with ``zeta1`` along the
    Hermitian dual of ``d`` and ``d(zeta2) = 0``."""
    zeta = np.asarray(zeta, dtype=complex)
    nhat, _ = _unit_dual(d, tol)
    coeff = np.sum(zeta * np.conj(nhat), axis=-1)
    zeta1 = coeff[..., None] * nhat
    return zeta1, zeta - zeta1
