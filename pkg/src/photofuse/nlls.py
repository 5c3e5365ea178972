"""Damped Gauss-Newton (Levenberg-style) nonlinear least squares.

Small dense problems only: the Jacobian is built by forward differences
and the normal equations are solved directly. Levenberg damping keeps the
step useful near the non-differentiable kink that a hard min() inside a
residual model produces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LstsqResult:
    x: np.ndarray
    cost: float          # sum of squared residuals
    n_iter: int
    converged: bool      # relative step fell below tolerance


def _jacobian(residual_fn, x, r0):
    h = np.sqrt(np.finfo(float).eps) * (1.0 + np.abs(x))
    J = np.empty((r0.size, x.size))
    for j in range(x.size):
        xp = x.copy()
        xp[j] += h[j]
        J[:, j] = (residual_fn(xp) - r0) / h[j]
    return J


def levenberg_least_squares(
    residual_fn,
    x0,
    max_iter: int = 200,
    rel_step_tol: float = 1e-8,
    lam0: float = 1e-3,
) -> LstsqResult:
    """Minimise ``sum(residual_fn(x)**2)`` starting from ``x0``.

    The damping factor shrinks by 3 on accepted steps and grows by 5 on
    rejected ones; convergence is declared when the relative step of an
    accepted update drops below ``rel_step_tol``.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = residual_fn(x)
    cost = float(r @ r)
    lam = lam0
    converged = False
    n_iter = 0

    for n_iter in range(1, max_iter + 1):
        J = _jacobian(residual_fn, x, r)
        g = J.T @ r
        H = J.T @ J
        diag = np.diag(H).copy()
        diag[diag <= 0] = 1.0

        accepted = False
        for _ in range(20):
            try:
                step = np.linalg.solve(H + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 5.0
                continue
            with np.errstate(over="ignore", invalid="ignore"):
                r_new = residual_fn(x + step)
                cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                accepted = True
                break
            lam *= 5.0

        if not accepted:
            break
        x = x + step
        r, cost = r_new, cost_new
        lam = max(lam / 3.0, 1e-12)
        if np.linalg.norm(step) <= rel_step_tol * (1.0 + np.linalg.norm(x)):
            converged = True
            break

    return LstsqResult(x=x, cost=cost, n_iter=n_iter, converged=converged)
