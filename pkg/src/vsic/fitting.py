"""Damped least-squares (Levenberg-Marquardt) curve fitting.

Damping follows the gain-ratio update of Nielsen: the damping factor shrinks
after a step that realizes most of the predicted reduction and grows
geometrically after rejected steps.  Jacobians come from the model when it
provides one, otherwise from central finite differences.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

__all__ = ["FitResult", "fit_curve", "numeric_jacobian"]

_logger = logging.getLogger(__name__)

MAX_ITER = 200
RTOL = 1e-10
GTOL = 1e-8
_FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


@dataclass
class FitResult:
    params: dict
    residual_norm: float
    converged: bool
    iterations: int
    param_uncertainties: dict
    covariance: np.ndarray = None
    gradient_norm: float = float("nan")
    message: str = ""
    flags: list = field(default_factory=list)
    history: list = field(default_factory=list)

    def __getitem__(self, name):
        return self.params[name]

    def values(self):
        return np.array(list(self.params.values()))

    def to_dict(self):
        return {
            "params": {k: float(v) for k, v in self.params.items()},
            "param_uncertainties": {k: float(v) for k, v in self.param_uncertainties.items()},
            "residual_norm": float(self.residual_norm),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "gradient_norm": float(self.gradient_norm),
            "message": self.message,
            "flags": list(self.flags),
        }


def numeric_jacobian(fun, p, x, step=None):
    """Central-difference Jacobian of ``fun(x, *p)`` with respect to ``p``.

    The default step ``eps**(1/3) * max(|p|, 0.01)`` balances truncation and
    round-off error of the central difference.
    """
    p = np.asarray(p, dtype=float)
    f0 = np.asarray(fun(x, *p), dtype=float)
    jac = np.empty((f0.size, p.size))
    for k in range(p.size):
        h = step if step is not None else _FD_STEP * max(abs(p[k]), 1e-2)
        up, dn = p.copy(), p.copy()
        up[k] += h
        dn[k] -= h
        jac[:, k] = (np.asarray(fun(x, *up), float) - np.asarray(fun(x, *dn), float)).ravel() / (2 * h)
    return jac


def _project(p, lower, upper):
    return np.minimum(np.maximum(p, lower), upper)


def fit_curve(model, x, y, p0, names=None, sigma=None, bounds=None, jac=None,
              max_iter=MAX_ITER, rtol=RTOL, gtol=GTOL):
    """Least-squares fit of ``y ~ model(x, *p)``.

    ``p0`` may be a sequence or a dict (its keys become parameter names).
    ``sigma`` gives per-point standard deviations used as weights 1/sigma.
    ``bounds`` is ``(lower, upper)``; steps are projected onto the box.
    ``jac(x, *p)`` returns the model Jacobian, shape ``(n_points, n_params)``.

    Non-convergence is not an error: the best parameters are returned with
    ``converged=False``.
    """
    if isinstance(p0, dict):
        names = list(p0) if names is None else list(names)
        p0 = [p0[k] for k in names]
    p = np.asarray(p0, dtype=float).copy()
    names = list(names) if names is not None else [f"p{k}" for k in range(p.size)]
    if len(names) != p.size:
        raise ValueError("names and p0 differ in length")
    if not np.all(np.isfinite(p)):
        raise ValueError("initial parameters must be finite")
    y = np.asarray(y, dtype=float).ravel()
    if y.size < p.size:
        raise ValueError(f"need at least {p.size} data points, got {y.size}")
    if sigma is None:
        w = np.ones_like(y)
    else:
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float).ravel(), y.shape)
        if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
            raise ValueError("sigma must be positive and finite")
        w = 1.0 / sigma
    lower = np.full(p.size, -np.inf)
    upper = np.full(p.size, np.inf)
    if bounds is not None:
        lower = np.broadcast_to(np.asarray(bounds[0], float), p.shape).copy()
        upper = np.broadcast_to(np.asarray(bounds[1], float), p.shape).copy()
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        p = _project(p, lower, upper)

    def residuals(q):
        return w * (np.asarray(model(x, *q), dtype=float).ravel() - y)

    def jacobian(q):
        j = numeric_jacobian(model, q, x) if jac is None else np.asarray(jac(x, *q), float)
        return w[:, None] * j.reshape(y.size, p.size)

    r = residuals(p)
    cost = float(r @ r)
    history = [cost]
    J = jacobian(p)
    g = J.T @ r
    A = J.T @ J
    mu = 1e-3 * float(np.max(np.diag(A))) if A.size else 1e-3
    mu = mu if mu > 0 else 1e-3
    nu = 2.0
    converged = float(np.max(np.abs(g))) < gtol
    message = "gradient below tolerance" if converged else ""
    it = 0
    while not converged and it < max_iter:
        it += 1
        diag = np.diag(A).copy()
        diag[diag <= 0] = 1.0
        try:
            step = np.linalg.solve(A + mu * np.diag(diag), -g)
        except np.linalg.LinAlgError:
            mu *= nu
            nu *= 2.0
            continue
        p_new = _project(p + step, lower, upper)
        step = p_new - p
        r_new = residuals(p_new)
        cost_new = float(r_new @ r_new)
        predicted = -(2.0 * step @ g + step @ A @ step)
        rho = (cost - cost_new) / predicted if predicted > 0 else -1.0
        if np.isfinite(cost_new) and cost_new <= cost and rho > 0:
            rel = (cost - cost_new) / max(cost, 1e-300)
            p, r, cost = p_new, r_new, cost_new
            history.append(cost)
            J = jacobian(p)
            g = J.T @ r
            A = J.T @ J
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            if float(np.max(np.abs(g))) < gtol:
                converged, message = True, "gradient below tolerance"
            elif rel < rtol:
                converged, message = True, "relative residual change below tolerance"
        else:
            mu *= nu
            nu *= 2.0
            if mu > 1e30:
                message = "damping diverged"
                break
            if np.linalg.norm(step) <= 1e-15 * (np.linalg.norm(p) + 1e-15):
                converged, message = True, "step below machine precision"
    if not converged and not message:
        message = f"no convergence after {max_iter} iterations"
        _logger.warning(message)
    if converged:
        # one undamped Gauss-Newton step removes the residual bias of the damping
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        p_new = _project(p + step, lower, upper)
        r_new = residuals(p_new)
        cost_new = float(r_new @ r_new)
        if np.isfinite(cost_new) and cost_new <= cost:
            p, r, cost = p_new, r_new, cost_new
            history.append(cost)
            J = jacobian(p)
            g = J.T @ r
            A = J.T @ J

    dof = y.size - p.size
    chi2_red = cost / dof if dof > 0 else float("nan")
    try:
        cov = np.linalg.pinv(A) * (chi2_red if dof > 0 else 1.0)
        unc = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:  # pragma: no cover
        cov, unc = None, np.full(p.size, np.nan)
    return FitResult(
        params=dict(zip(names, p.tolist())),
        residual_norm=cost,
        converged=converged,
        iterations=it,
        param_uncertainties=dict(zip(names, unc.tolist())),
        covariance=cov,
        gradient_norm=float(np.max(np.abs(g))),
        message=message,
        history=history,
    )
