"""Dense Hermitian eigensolver with a compiled kernel and a Python fallback.

The backend is chosen once at import.  Set ``VSIC_BACKEND=python`` to force
the fallback (the benchmark and the cross-backend tests do this explicitly
through :func:`get_backend`).
"""
import os
import warnings

import numpy as np

from . import _jacobi_py

try:
    from . import _jacobi as _jacobi_c
except ImportError:  # pragma: no cover - depends on build
    _jacobi_c = None

__all__ = ["BACKEND", "available_backends", "get_backend", "eigh", "eigh_batch",
           "fix_phases", "NotHermitianError"]

HERMITIAN_TOL = 1e-10


class NotHermitianError(ValueError):
    pass


def available_backends():
    names = ["python"]
    if _jacobi_c is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the import-time choice)."""
    name = name or BACKEND
    if name == "compiled":
        if _jacobi_c is None:
            raise RuntimeError("compiled kernel vsic._jacobi is not built")
        return _jacobi_c
    if name == "python":
        return _jacobi_py
    raise ValueError(f"unknown eigensolver backend {name!r}")


def _select_backend():
    wanted = os.environ.get("VSIC_BACKEND", "").strip().lower()
    if wanted == "python":
        return "python"
    if wanted == "compiled" and _jacobi_c is None:
        warnings.warn("VSIC_BACKEND=compiled requested but extension missing; "
                      "using the Python fallback", RuntimeWarning)
    return "compiled" if _jacobi_c is not None else "python"


BACKEND = _select_backend()


def check_hermitian(h, tol=HERMITIAN_TOL):
    h = np.asarray(h)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise NotHermitianError(f"expected square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    dev = float(np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2))))) if h.size else 0.0
    if dev > tol * scale:
        raise NotHermitianError(f"matrix is not Hermitian (max |H - H^+| = {dev:.3e})")


def fix_phases(v):
    """Rotate each column so its first non-negligible entry is real positive."""
    v = np.array(v, dtype=np.complex128, copy=True)
    for k in range(v.shape[-1]):
        col = v[..., k]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size:
            z = col[idx[0]]
            v[..., k] = col * (abs(z) / z)
    return v


def _finish(w, v, sweeps):
    if sweeps < 0:
        raise np.linalg.LinAlgError("Jacobi iteration did not converge")
    order = np.argsort(w, kind="stable")
    return w[order], fix_phases(v[:, order])


def eigh(h, backend=None):
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending eigenvalues and the matching orthonormal eigenvectors
    as columns, each column phase-normalized by :func:`fix_phases`.
    """
    h = np.asarray(h, dtype=np.complex128)
    check_hermitian(h)
    if h.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=np.complex128)
    # symmetrize away the sub-tolerance anti-Hermitian part
    h = 0.5 * (h + h.conj().T)
    w, v, sweeps = get_backend(backend).jacobi_eigh(h)
    return _finish(np.asarray(w), np.asarray(v), int(sweeps))


def eigh_batch(stack, backend=None):
    """Vectorized :func:`eigh` over a ``(m, n, n)`` stack."""
    stack = np.asarray(stack, dtype=np.complex128)
    check_hermitian(stack)
    stack = 0.5 * (stack + np.conj(np.swapaxes(stack, -1, -2)))
    w, v, sweeps = get_backend(backend).jacobi_eigh_batch(stack)
    if np.any(np.asarray(sweeps) < 0):
        raise np.linalg.LinAlgError("Jacobi iteration did not converge")
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w, np.array([fix_phases(m) for m in v])
