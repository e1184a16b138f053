"""Pure-Python twin of the compiled Jacobi kernel (``vsic._jacobi``).

Same rotation order and thresholds; used when the extension is absent.
"""
import numpy as np


def _rotate(a, v, p, q):
    apq = a[p, q]
    r = abs(apq)
    if r == 0.0:
        return
    ph = apq / r
    app = a[p, p].real
    aqq = a[q, q].real
    theta = (aqq - app) / (2.0 * r)
    if theta >= 0.0:
        t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
    else:
        t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c

    x = a[:, p].copy()
    z = ph.conjugate() * a[:, q]
    a[:, p] = c * x - s * z
    a[:, q] = s * x + c * z
    x = a[p, :].copy()
    z = ph * a[q, :]
    a[p, :] = c * x - s * z
    a[q, :] = s * x + c * z
    a[p, q] = a[q, p] = 0.0
    a[p, p] = app - t * r
    a[q, q] = aqq + t * r

    x = v[:, p].copy()
    z = ph.conjugate() * v[:, q]
    v[:, p] = c * x - s * z
    v[:, q] = s * x + c * z


def jacobi_eigh(a, tol=1e-15, max_sweeps=60):
    """Return ``(eigenvalues, eigenvectors, sweeps)``; eigenvalues unsorted."""
    a = np.array(a, dtype=np.complex128, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    iu = np.triu_indices(n, 1)
    for sweep in range(max_sweeps):
        off = float(np.sum(np.abs(a[iu]) ** 2))
        total = float(np.sum(np.diag(a).real ** 2)) + 2.0 * off
        if off <= tol * tol * total or off == 0.0:
            return np.diag(a).real.copy(), v, sweep
        thresh = tol * np.sqrt(total) / n
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q].real) + abs(a[p, q].imag) > 0.01 * thresh:
                    _rotate(a, v, p, q)
    return np.diag(a).real.copy(), v, -1


def jacobi_eigh_batch(stack, tol=1e-15, max_sweeps=60):
    stack = np.asarray(stack, dtype=np.complex128)
    out = [jacobi_eigh(m, tol, max_sweeps) for m in stack]
    w = np.array([o[0] for o in out]).reshape(stack.shape[:2])
    v = np.array([o[1] for o in out]).reshape(stack.shape)
    sweeps = np.array([o[2] for o in out], dtype=np.intc)
    return w, v, sweeps
