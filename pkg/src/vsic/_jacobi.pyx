# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Cyclic Jacobi eigensolver for small dense complex Hermitian matrices.

Real and imaginary parts are carried in separate float64 buffers so the
kernel needs no C99 complex support.  The rotation sequence is identical to
``vsic._jacobi_py`` so both backends agree to rounding.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot

cnp.import_array()


cdef int _rotate(double[:, ::1] ar, double[:, ::1] ai,
                 double[:, ::1] vr, double[:, ::1] vi,
                 Py_ssize_t p, Py_ssize_t q) noexcept nogil:
    cdef Py_ssize_t n = ar.shape[0]
    cdef Py_ssize_t k
    cdef double r = hypot(ar[p, q], ai[p, q])
    if r == 0.0:
        return 0
    cdef double phr = ar[p, q] / r, phi = ai[p, q] / r
    cdef double app = ar[p, p], aqq = ar[q, q]
    cdef double theta = (aqq - app) / (2.0 * r)
    cdef double t
    if theta >= 0.0:
        t = 1.0 / (theta + sqrt(theta * theta + 1.0))
    else:
        t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
    cdef double c = 1.0 / sqrt(t * t + 1.0)
    cdef double s = t * c
    cdef double xr, xi, yr, yi, zr, zi

    # columns: A <- A G with G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
    for k in range(n):
        xr = ar[k, p]; xi = ai[k, p]
        yr = ar[k, q]; yi = ai[k, q]
        # z = e^{-i phi} * y
        zr = phr * yr + phi * yi
        zi = phr * yi - phi * yr
        ar[k, p] = c * xr - s * zr
        ai[k, p] = c * xi - s * zi
        ar[k, q] = s * xr + c * zr
        ai[k, q] = s * xi + c * zi
    # rows: A <- G^H A
    for k in range(n):
        xr = ar[p, k]; xi = ai[p, k]
        yr = ar[q, k]; yi = ai[q, k]
        # z = e^{+i phi} * y
        zr = phr * yr - phi * yi
        zi = phr * yi + phi * yr
        ar[p, k] = c * xr - s * zr
        ai[p, k] = c * xi - s * zi
        ar[q, k] = s * xr + c * zr
        ai[q, k] = s * xi + c * zi
    ar[p, q] = 0.0; ai[p, q] = 0.0
    ar[q, p] = 0.0; ai[q, p] = 0.0
    ar[p, p] = app - t * r; ai[p, p] = 0.0
    ar[q, q] = aqq + t * r; ai[q, q] = 0.0
    for k in range(n):
        xr = vr[k, p]; xi = vi[k, p]
        yr = vr[k, q]; yi = vi[k, q]
        zr = phr * yr + phi * yi
        zi = phr * yi - phi * yr
        vr[k, p] = c * xr - s * zr
        vi[k, p] = c * xi - s * zi
        vr[k, q] = s * xr + c * zr
        vi[k, q] = s * xi + c * zi
    return 1


cdef int _jacobi_inplace(double[:, ::1] ar, double[:, ::1] ai,
                         double[:, ::1] vr, double[:, ::1] vi,
                         double tol, int max_sweeps) noexcept nogil:
    cdef Py_ssize_t n = ar.shape[0]
    cdef Py_ssize_t p, q
    cdef double off, total, thresh
    cdef int sweep
    for sweep in range(max_sweeps):
        off = 0.0
        total = 0.0
        for p in range(n):
            total += ar[p, p] * ar[p, p]
            for q in range(p + 1, n):
                off += ar[p, q] * ar[p, q] + ai[p, q] * ai[p, q]
        total += 2.0 * off
        if off <= tol * tol * total or off == 0.0:
            return sweep
        thresh = tol * sqrt(total) / n
        for p in range(n - 1):
            for q in range(p + 1, n):
                if fabs(ar[p, q]) + fabs(ai[p, q]) > 0.01 * thresh:
                    _rotate(ar, ai, vr, vi, p, q)
    return -1


def jacobi_eigh(a, double tol=1e-15, int max_sweeps=60):
    """Return ``(eigenvalues, eigenvectors, sweeps)`` of a Hermitian matrix.

    Eigenvalues are unsorted; ``sweeps`` is -1 when ``max_sweeps`` was hit.
    """
    a = np.asarray(a, dtype=np.complex128)
    cdef Py_ssize_t n = a.shape[0]
    cdef double[:, ::1] ar = np.ascontiguousarray(a.real)
    cdef double[:, ::1] ai = np.ascontiguousarray(a.imag)
    cdef double[:, ::1] vr = np.eye(n)
    cdef double[:, ::1] vi = np.zeros((n, n))
    cdef int sweeps
    with nogil:
        sweeps = _jacobi_inplace(ar, ai, vr, vi, tol, max_sweeps)
    w = np.array([ar[i, i] for i in range(n)])
    v = np.asarray(vr) + 1j * np.asarray(vi)
    return w, v, sweeps


def jacobi_eigh_batch(stack, double tol=1e-15, int max_sweeps=60):
    """Diagonalize a ``(m, n, n)`` stack; returns ``(w, v, sweeps)`` stacks."""
    stack = np.asarray(stack, dtype=np.complex128)
    cdef Py_ssize_t m = stack.shape[0]
    cdef Py_ssize_t n = stack.shape[1]
    cdef double[:, :, ::1] sr = np.ascontiguousarray(stack.real)
    cdef double[:, :, ::1] si = np.ascontiguousarray(stack.imag)
    cdef cnp.ndarray[cnp.double_t, ndim=3] vr_all = np.zeros((m, n, n))
    cdef cnp.ndarray[cnp.double_t, ndim=3] vi_all = np.zeros((m, n, n))
    cdef double[:, :, ::1] vr = vr_all
    cdef double[:, :, ::1] vi = vi_all
    cdef int[::1] sweeps = np.zeros(m, dtype=np.intc)
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(m):
            for j in range(n):
                vr[i, j, j] = 1.0
            sweeps[i] = _jacobi_inplace(sr[i], si[i], vr[i], vi[i], tol, max_sweeps)
    w = np.einsum("kii->ki", np.asarray(sr)).copy()
    v = vr_all + 1j * vi_all
    return w, v, np.asarray(sweeps)
