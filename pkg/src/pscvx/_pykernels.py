"""Pure numpy fallback for the compiled kernels in ``_ckernels.pyx``.

The cyclic Jacobi sweep is vectorised over the batch axis: every (p, q)
rotation is applied to all matrices at once, so the Python-level loop count
depends only on the matrix size and the number of sweeps.
"""
from __future__ import annotations

import numpy as np

EPS_OFF = 1e-15
MAX_SWEEPS = 60


def jacobi_eigh_batch(a, tol=EPS_OFF, max_sweeps=MAX_SWEEPS):
    """Eigen-decompose a stack of real symmetric matrices.

    Parameters
    ----------
    a : (m, n, n) array
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm of every matrix is
        below ``tol`` times its full Frobenius norm.

    Returns
    -------
    w : (m, n) ascending eigenvalues
    v : (m, n, n) orthonormal eigenvectors, column ``j`` pairs with ``w[:, j]``
    sweeps : int
    """
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ValueError("expected a stack of square matrices")
    m, n, _ = a.shape
    v = np.broadcast_to(np.eye(n), (m, n, n)).copy()
    scale = np.sqrt(np.einsum("kij,kij->k", a, a))
    thresh = tol * scale
    sweeps = 0
    iu = np.triu_indices(n, 1)
    while sweeps < max_sweeps:
        off = np.sqrt(2.0 * np.sum(a[:, iu[0], iu[1]] ** 2, axis=1))
        if np.all(off <= thresh):
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                active = apq != 0.0
                if not np.any(active):
                    continue
                app = a[:, p, p]
                aqq = a[:, q, q]
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    theta = np.where(active, (aqq - app) / (2.0 * np.where(active, apq, 1.0)), 0.0)
                    t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                cc = c[:, None]
                ss = s[:, None]
                col_p = a[:, :, p].copy()
                col_q = a[:, :, q].copy()
                a[:, :, p] = cc * col_p - ss * col_q
                a[:, :, q] = ss * col_p + cc * col_q
                row_p = a[:, p, :].copy()
                row_q = a[:, q, :].copy()
                a[:, p, :] = cc * row_p - ss * row_q
                a[:, q, :] = ss * row_p + cc * row_q
                a[:, p, q] = 0.0
                a[:, q, p] = 0.0
                vp = v[:, :, p].copy()
                vq = v[:, :, q].copy()
                v[:, :, p] = cc * vp - ss * vq
                v[:, :, q] = ss * vp + cc * vq
    w = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w, v, sweeps
