"""Inner solvers: l_p residual minimization and l_inf (minimax) coefficient fits.

The l_p fit minimizes ||target - basis @ c||_p over c for p >= 2. For p = 2 it
is plain least squares. For p > 2 it is a damped Newton iteration on the smooth
strictly convex objective sum |r_i|**p, with two stopping certificates:

  * "functional": max_j |F_r(b_j)| <= tol, where F_r is the norming functional
    of the residual. This is the stationarity condition a best-approximation
    step must certify.
  * "gradient": inf-norm of the objective gradient <= tol * max(1, objective).
    Used by the certifier sweeps, where accuracy relative to the objective is
    what matters.

Near an exactly representable target the Hessian degenerates and plain Newton
slows to a linear rate; the line search therefore also evaluates the
extrapolated step length (p - 1), which is exact for separable residuals, and
takes it whenever it strictly beats the plain step. A residual below zero_tol
stops the iteration outright.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .errors import ConvergenceError


def _pnorm(r: np.ndarray, p: float) -> float:
    scale = float(np.max(np.abs(r))) if r.size else 0.0
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum((np.abs(r) / scale) ** p) ** (1.0 / p))


def lp_fit(target: np.ndarray, basis: np.ndarray, p: float,
           x0: np.ndarray | None = None, tol: float = 1e-9,
           certificate: str = "functional", max_iter: int = 200,
           zero_tol: float | None = None) -> np.ndarray:
    """Coefficients c minimizing ||target - basis @ c||_p  (p >= 2).

    basis is dim x m with m >= 1 independent columns; raises ConvergenceError
    if the Newton iteration hits max_iter without meeting its certificate.
    """
    target = np.asarray(target, dtype=float)
    basis = np.asarray(basis, dtype=float)
    if certificate not in ("functional", "gradient"):
        raise ValueError(f"unknown certificate {certificate!r}")
    if p == 2.0:
        c, *_ = np.linalg.lstsq(basis, target, rcond=None)
        return c

    if zero_tol is None:
        zero_tol = 1e-13 * max(1.0, _pnorm(target, p))
    if x0 is None:
        c, *_ = np.linalg.lstsq(basis, target, rcond=None)
    else:
        c = np.asarray(x0, dtype=float).copy()

    m = basis.shape[1]
    flat_steps = 0
    for _ in range(max_iter):
        r = target - basis @ c
        rnorm = _pnorm(r, p)
        if rnorm <= zero_tol:
            return c
        obj = rnorm ** p
        u = np.abs(r) ** (p - 1.0) * np.sign(r)
        grad = -p * (basis.T @ u)
        gmax = float(np.max(np.abs(grad)))
        if certificate == "functional":
            # |F_r(b_j)| = |grad_j| / (p * ||r||**(p-1))
            if gmax <= tol * p * rnorm ** (p - 1.0):
                return c
        else:
            if gmax <= tol * max(1.0, obj):
                return c

        w = np.abs(r) ** (p - 2.0)
        hess = p * (p - 1.0) * (basis.T * w) @ basis
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            ridge = 1e-12 * max(1.0, float(np.trace(hess)) / m)
            step = np.linalg.solve(hess + ridge * np.eye(m), -grad)
        descent = float(grad @ step)
        if descent >= 0.0:  # numerically not a descent direction; steepest fallback
            step = -grad
            descent = -float(grad @ grad)
            if descent == 0.0:
                return c

        accepted = False
        obj_newton = _pnorm(target - basis @ (c + step), p) ** p
        # Extrapolated step length p - 1 is exact for separable degenerate
        # residuals; take it only when it beats plain Newton strictly, so it
        # is never accepted as a zero-progress overshoot near an optimum.
        obj_extra = _pnorm(target - basis @ (c + (p - 1.0) * step), p) ** p
        if obj_extra < obj_newton and obj_extra < obj \
                and obj_extra <= obj + 1e-4 * (p - 1.0) * descent:
            c = c + (p - 1.0) * step
            accepted = True
        elif obj_newton < obj and obj_newton <= obj + 1e-4 * descent:
            c = c + step
            accepted = True
        if not accepted:
            # The true objective decrease can fall below float resolution while
            # the gradient is still accurately computable. Full Newton steps
            # remain contractions there, so take a bounded number of them.
            flat = abs(obj_newton - obj) <= 8.0 * np.finfo(float).eps * obj
            small = float(np.max(np.abs(step))) <= 1e-6 * (1.0 + float(np.max(np.abs(c))))
            if flat and small and flat_steps < 30:
                c = c + step
                flat_steps += 1
                accepted = True
        if not accepted:
            t = 0.5
            while t >= 1e-14:
                trial = c + t * step
                trial_obj = _pnorm(target - basis @ trial, p) ** p
                if trial_obj < obj and trial_obj <= obj + 1e-4 * t * descent:
                    c = trial
                    accepted = True
                    break
                t /= 2.0
        if not accepted:
            # No representable decrease at any step length: float optimum.
            if certificate == "gradient" or gmax <= 1e-6 * p * max(rnorm, 1e-300) ** (p - 1.0):
                return c
            raise ConvergenceError("line search stagnated before certificate")
    raise ConvergenceError(f"no certificate after {max_iter} Newton iterations")


def minimax_fit(values: np.ndarray, columns: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimize max_j |values_j - (columns @ c)_j| over c; returns (c, optimum).

    Solved as a linear program in (c, s): minimize s subject to
    |values - columns @ c| <= s componentwise.
    """
    values = np.asarray(values, dtype=float)
    columns = np.asarray(columns, dtype=float)
    n, m = columns.shape
    if m == 0:
        return np.zeros(0), float(np.max(np.abs(values))) if n else 0.0
    ones = np.ones((n, 1))
    a_ub = np.vstack([np.hstack([-columns, -ones]), np.hstack([columns, -ones])])
    b_ub = np.concatenate([-values, values])
    cost = np.zeros(m + 1)
    cost[m] = 1.0
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub,
                  bounds=[(None, None)] * m + [(0.0, None)], method="highs",
                  options={"primal_feasibility_tolerance": 1e-9,
                           "dual_feasibility_tolerance": 1e-9})
    if not res.success:
        raise ConvergenceError(f"minimax LP failed: {res.message}")
    return res.x[:m], float(res.fun)
