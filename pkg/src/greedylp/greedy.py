"""Greedy pursuit algorithms: WOMP (p = 2), WCGA and WQOGA (p >= 2).

All three share the same weak selection rule: score every atom against the
current residual, then take the smallest index whose score is at least t times
the maximum. They differ in how atoms are scored and how coefficients are
refreshed:

  * WOMP scores by inner products and re-projects orthogonally (incremental QR).
  * WCGA scores by the residual's norming functional and re-fits all
    coefficients by best l_p approximation from the selected span.
  * WQOGA scores by the fixed atom functionals and solves the linear
    interpolation system F_atom_j(residual) = 0 for the selected atoms.

Runs are deterministic; every run returns a GreedyTrace with per-iteration
residual norms and, when the true support is supplied, the count of
still-unselected true atoms after each iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from .analysis import SparseSignal
from .errors import DegenerateSystemError
from .lpsolve import lp_fit
from .space import Dictionary, as_vector, atom_functionals, lp_norm, norming_functional

# Full refactorization period for the WOMP QR to bound update drift.
_REFACTOR_EVERY = 50
# An orthogonalized atom shorter than this is numerically inside the span.
_SPAN_TOL = 1e-12


@dataclass(frozen=True)
class GreedyConfig:
    """Weakness parameter, iteration cap, and residual stopping tolerance.

    Tie-breaking is fixed: the smallest qualifying index wins.
    """

    weakness_t: float = 1.0
    max_iterations: int = 100
    residual_tolerance: float = 1e-12

    def __post_init__(self):
        if not 0.0 < self.weakness_t <= 1.0:
            raise ValueError("weakness_t must be in (0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.residual_tolerance < 0.0:
            raise ValueError("residual_tolerance must be nonnegative")


@dataclass(frozen=True)
class GreedyTrace:
    """Record of one pursuit run.

    residual_norms[m] is the residual norm after m completed iterations, so
    its length is always one more than the number of completed iterations.
    gamma_sizes mirrors it with the count of true-support atoms not yet
    selected, when a ground truth was supplied.
    """

    algorithm: str
    selected: tuple
    residual_norms: tuple
    final_coeffs: np.ndarray
    stop_reason: str
    gamma_sizes: Optional[tuple] = None

    def to_json_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "selected": list(self.selected),
            "residual_norms": list(self.residual_norms),
            "gamma_sizes": None if self.gamma_sizes is None else list(self.gamma_sizes),
            "final_coeffs": np.asarray(self.final_coeffs).tolist(),
            "stop_reason": self.stop_reason,
        }


def _scores(residual: np.ndarray, d: Dictionary, mode: str) -> np.ndarray:
    if mode == "inner_product":
        return np.abs(d.atoms.T @ residual)
    if mode == "norming_functional":
        w = norming_functional(residual, d.space).weights
        return np.abs(d.atoms.T @ w)
    raise ValueError(f"unknown selection mode {mode!r}")


def _pick(scores: np.ndarray, t: float) -> int:
    """Smallest index whose score reaches t times the maximum."""
    smax = float(np.max(scores))
    return int(np.flatnonzero(scores >= t * smax)[0])


def select_atom(residual, d: Dictionary, t: float,
                mode: str = "inner_product") -> int:
    """Weak selection step: smallest index i with score_i >= t * max score.

    Scores are |<residual, g_i>| in inner_product mode and |F_residual(g_i)|
    in norming_functional mode (identical selections at p = 2, where the
    functional rescales all scores equally).
    """
    if not 0.0 < t <= 1.0:
        raise ValueError("t must be in (0, 1]")
    r = as_vector(residual, d.space)
    if not np.any(r):
        raise ValueError("selection is undefined for a zero residual")
    s = _scores(r, d, mode)
    if float(np.max(s)) == 0.0:
        raise DegenerateSystemError("all selection scores are zero")
    return _pick(s, t)


def _gamma_trace(selected, truth: Optional[SparseSignal]):
    if truth is None:
        return None
    t_set = set(int(i) for i in truth.support)
    out = [len(t_set)]
    seen = set()
    for idx in selected:
        seen.add(idx)
        out.append(len(t_set - seen))
    return tuple(out)


def trace_gamma_sizes(trace: GreedyTrace, truth: SparseSignal) -> list:
    """|T \\ T^m| for m = 0 .. completed iterations, from the selection order."""
    return list(_gamma_trace(trace.selected, truth))


def _finish(algorithm, selected, norms, coeffs, reason, truth):
    return GreedyTrace(algorithm=algorithm, selected=tuple(selected),
                       residual_norms=tuple(norms),
                       final_coeffs=np.asarray(coeffs, dtype=float),
                       stop_reason=reason,
                       gamma_sizes=_gamma_trace(selected, truth))


def run_womp(f0, d: Dictionary, cfg: GreedyConfig,
             truth: Optional[SparseSignal] = None) -> GreedyTrace:
    """Weak Orthogonal Matching Pursuit: inner-product selection plus exact
    orthogonal projection onto the selected span, updated by incremental QR
    with periodic full refactorization. Hilbert case only (p = 2)."""
    if d.space.p != 2.0:
        raise ValueError("orthogonal projection requires p = 2; use run_wcga for p > 2")
    f0 = as_vector(f0, d.space)
    dim = d.space.dim
    cap = min(cfg.max_iterations, d.n_atoms, dim)
    q_mat = np.zeros((dim, cap))
    r_mat = np.zeros((cap, cap))
    z = np.zeros(cap)
    selected: list = []
    residual = f0.copy()
    norms = [float(np.linalg.norm(residual))]

    def coeffs(m):
        if m == 0:
            return np.zeros(0)
        return solve_triangular(r_mat[:m, :m], z[:m])

    if norms[0] <= cfg.residual_tolerance:
        return _finish("womp", selected, norms, coeffs(0), "tolerance", truth)

    for m in range(cap):
        s = np.abs(d.atoms.T @ residual)
        if float(np.max(s)) == 0.0:
            return _finish("womp", selected, norms, coeffs(m), "degenerate_system", truth)
        idx = _pick(s, cfg.weakness_t)
        g = d.atoms[:, idx]
        h1 = q_mat[:, :m].T @ g
        v = g - q_mat[:, :m] @ h1
        h2 = q_mat[:, :m].T @ v
        v -= q_mat[:, :m] @ h2
        rho = float(np.linalg.norm(v))
        if rho <= _SPAN_TOL:
            return _finish("womp", selected, norms, coeffs(m), "degenerate_system", truth)
        selected.append(idx)
        q_mat[:, m] = v / rho
        r_mat[:m, m] = h1 + h2
        r_mat[m, m] = rho
        z[m] = q_mat[:, m] @ f0
        residual = residual - q_mat[:, m] * (q_mat[:, m] @ residual)
        if (m + 1) % _REFACTOR_EVERY == 0:
            q_full, r_full = np.linalg.qr(d.atoms[:, selected])
            q_mat[:, :m + 1] = q_full
            r_mat[:m + 1, :m + 1] = r_full
            z[:m + 1] = q_full.T @ f0
            residual = f0 - q_full @ z[:m + 1]
        norms.append(float(np.linalg.norm(residual)))
        if norms[-1] <= cfg.residual_tolerance:
            return _finish("womp", selected, norms, coeffs(m + 1), "tolerance", truth)
    return _finish("womp", selected, norms, coeffs(len(selected)), "max_iterations", truth)


def chebyshev_project(f0, atom_indices, d: Dictionary, tol: float = 1e-9,
                      max_newton: int = 200, x0=None) -> tuple[np.ndarray, np.ndarray]:
    """Best approximation of f0 from the span of the given atoms.

    Returns (coefficients, residual vector). For p = 2 this is least squares,
    which satisfies the first-order condition to machine precision by
    construction. For p > 2 a damped Newton fit certifies the first-order
    condition |F_residual(g_j)| <= tol for every selected j (or drives the
    residual to the numerical zero floor when f0 is exactly representable).
    Dependent atoms raise DegenerateSystemError.
    """
    f0 = as_vector(f0, d.space)
    idx = list(atom_indices)
    if len(idx) == 0:
        return np.zeros(0), f0.copy()
    basis = d.atoms[:, idx]
    if np.linalg.matrix_rank(basis) < len(idx):
        raise DegenerateSystemError(f"atoms {idx} are linearly dependent")
    if d.space.p == 2.0:
        c, *_ = np.linalg.lstsq(basis, f0, rcond=None)
    else:
        c = lp_fit(f0, basis, d.space.p, x0=x0, tol=tol,
                   certificate="functional", max_iter=max_newton)
    return c, f0 - basis @ c


def run_wcga(f0, d: Dictionary, cfg: GreedyConfig,
             truth: Optional[SparseSignal] = None) -> GreedyTrace:
    """Weak Chebyshev Greedy Algorithm: norming-functional selection plus best
    l_p approximation from the selected span after every iteration.

    The coefficient fit is warm-started from the previous coefficients
    extended by the single-atom-optimal coefficient of the new atom, so the
    residual norm can never increase.
    """
    f0 = as_vector(f0, d.space)
    selected: list = []
    coeffs = np.zeros(0)
    residual = f0.copy()
    norms = [lp_norm(residual, d.space)]
    if norms[0] <= cfg.residual_tolerance:
        return _finish("wcga", selected, norms, coeffs, "tolerance", truth)

    for _ in range(cfg.max_iterations):
        if norms[-1] == 0.0:
            return _finish("wcga", selected, norms, coeffs, "tolerance", truth)
        s = _scores(residual, d, "norming_functional")
        if float(np.max(s)) == 0.0:
            return _finish("wcga", selected, norms, coeffs, "degenerate_system", truth)
        idx = _pick(s, cfg.weakness_t)
        g = d.atoms[:, idx]
        lam = lp_fit(residual, g[:, None], d.space.p)[0] if d.space.p > 2.0 \
            else float(residual @ g) / float(g @ g)
        warm = np.append(coeffs, lam)
        selected.append(idx)
        try:
            coeffs, residual = chebyshev_project(f0, selected, d, x0=warm)
        except DegenerateSystemError:
            selected.pop()
            return _finish("wcga", selected, norms, coeffs, "degenerate_system", truth)
        norms.append(lp_norm(residual, d.space))
        if norms[-1] <= cfg.residual_tolerance:
            return _finish("wcga", selected, norms, coeffs, "tolerance", truth)
    return _finish("wcga", selected, norms, coeffs, "max_iterations", truth)


def run_wqoga(f0, d: Dictionary, cfg: GreedyConfig,
              truth: Optional[SparseSignal] = None) -> GreedyTrace:
    """Weak Quasi-Orthogonal Greedy Algorithm: selection by the fixed atom
    functionals, coefficients from the linear interpolation system
    F_atom_j(f0 - sum_i c_i atom_i) = 0 for all selected j.

    Stops with degenerate_system when that system becomes singular; the trace
    stays valid up to the last completed iteration.
    """
    f0 = as_vector(f0, d.space)
    funcs = atom_functionals(d)
    selected: list = []
    coeffs = np.zeros(0)
    residual = f0.copy()
    norms = [lp_norm(residual, d.space)]
    if norms[0] <= cfg.residual_tolerance:
        return _finish("wqoga", selected, norms, coeffs, "tolerance", truth)

    for _ in range(cfg.max_iterations):
        if norms[-1] == 0.0:
            return _finish("wqoga", selected, norms, coeffs, "tolerance", truth)
        s = np.abs(funcs.T @ residual)
        if float(np.max(s)) == 0.0:
            return _finish("wqoga", selected, norms, coeffs, "degenerate_system", truth)
        idx = _pick(s, cfg.weakness_t)
        selected.append(idx)
        w_sel = funcs[:, selected]
        interp = w_sel.T @ d.atoms[:, selected]
        sing = np.linalg.svd(interp, compute_uv=False)
        if sing[-1] <= 1e-12 * sing[0]:
            selected.pop()
            return _finish("wqoga", selected, norms, coeffs, "degenerate_system", truth)
        coeffs = np.linalg.solve(interp, w_sel.T @ f0)
        residual = f0 - d.atoms[:, selected] @ coeffs
        norms.append(lp_norm(residual, d.space))
        if norms[-1] <= cfg.residual_tolerance:
            return _finish("wqoga", selected, norms, coeffs, "tolerance", truth)
    return _finish("wqoga", selected, norms, coeffs, "max_iterations", truth)
