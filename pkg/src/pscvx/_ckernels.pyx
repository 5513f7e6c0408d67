# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cyclic Jacobi eigensolver for stacks of small symmetric matrices.

Same algorithm and stopping rule as ``_pykernels.jacobi_eigh_batch``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef int _jacobi_one(double[:, ::1] a, double[:, ::1] v, double tol, int max_sweeps) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, p, q, k
    cdef double scale = 0.0, off, apq, theta, t, c, s, x, y
    cdef int sweeps = 0
    for i in range(n):
        for k in range(n):
            v[i, k] = 1.0 if i == k else 0.0
            scale += a[i, k] * a[i, k]
    scale = sqrt(scale)
    while sweeps < max_sweeps:
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        off = sqrt(2.0 * off)
        if off <= tol * scale:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif theta > 0.0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x = a[k, p]
                    y = a[k, q]
                    a[k, p] = c * x - s * y
                    a[k, q] = s * x + c * y
                for k in range(n):
                    x = a[p, k]
                    y = a[q, k]
                    a[p, k] = c * x - s * y
                    a[q, k] = s * x + c * y
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    x = v[k, p]
                    y = v[k, q]
                    v[k, p] = c * x - s * y
                    v[k, q] = s * x + c * y
    return sweeps


def jacobi_eigh_batch(a, double tol=1e-15, int max_sweeps=60):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] work = np.array(a, dtype=np.float64, order="C", copy=True)
    if work.shape[1] != work.shape[2]:
        raise ValueError("expected a stack of square matrices")
    cdef Py_ssize_t m = work.shape[0], n = work.shape[1], j
    cdef cnp.ndarray[cnp.float64_t, ndim=3] vecs = np.empty((m, n, n), dtype=np.float64)
    cdef double[:, :, ::1] wa = work
    cdef double[:, :, ::1] wv = vecs
    cdef int sweeps = 0, sw
    with nogil:
        for j in range(m):
            sw = _jacobi_one(wa[j], wv[j], tol, max_sweeps)
            if sw > sweeps:
                sweeps = sw
    w = np.diagonal(work, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=2)
    return w, vecs, sweeps
