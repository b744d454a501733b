"""Dictionary and signal certifiers.

Every quantity here is *measured*, not bounded by theory: coherence by the
full pairwise functional sweep, isometry constants by extreme eigenvalues of
Gram submatrices over explicit supports, and the two per-signal constants
(the l1-vs-norm subset constant and the incoherence constant) by exhaustive
subset sweeps with exact inner minimizations. Sampled variants exist only for
the isometry constant and are lower bounds by construction.

Conventions:
  * All subset sweeps reduce with max, so results are independent of
    evaluation order.
  * Combinatorial budgets are checked before sweeping and raise
    BudgetExceededError; nothing is silently truncated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import BudgetExceededError
from .lpsolve import lp_fit, minimax_fit
from .space import Dictionary, as_vector, atom_functionals, lp_norm

DEFAULT_SUBSET_BUDGET = 10 ** 6   # isometry + l1-subset sweeps
DEFAULT_PAIR_BUDGET = 10 ** 5     # incoherence + best m-term sweeps


@dataclass(frozen=True)
class SparseSignal:
    """Ground truth for recovery runs: support indices and aligned coefficients."""

    support: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=int)
        cf = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "coeffs", cf)
        sup.setflags(write=False)
        cf.setflags(write=False)
        if sup.ndim != 1 or cf.shape != sup.shape or sup.size < 1:
            raise ValueError("support and coeffs must be equal-length, nonempty 1-d arrays")
        if np.any(np.diff(sup) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(sup < 0):
            raise ValueError("support indices must be nonnegative")
        if np.any(cf == 0.0) or not np.all(np.isfinite(cf)):
            raise ValueError("coefficients must be nonzero and finite")

    @property
    def k(self) -> int:
        return int(self.support.size)

    def synthesize(self, d: Dictionary) -> np.ndarray:
        """The dense vector sum_i coeffs_i * atom_{support_i}."""
        if int(self.support[-1]) >= d.n_atoms:
            raise ValueError("support index exceeds dictionary size")
        return d.atoms[:, self.support] @ self.coeffs

    def to_json_dict(self) -> dict:
        return {"support": self.support.tolist(), "coeffs": self.coeffs.tolist()}

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SparseSignal":
        with open(path) as fh:
            obj = json.load(fh)
        return cls(support=np.array(obj["support"], dtype=int),
                   coeffs=np.array(obj["coeffs"], dtype=float))


@dataclass(frozen=True)
class RipEstimate:
    """Isometry-constant measurement for one sparsity level.

    method "exhaustive" means every support was swept and delta is exact up to
    the eigenvalue solver; "sampled" means delta is a lower bound obtained
    from randomly drawn supports.
    """

    sparsity: int
    delta: float
    method: str
    trials: int = 0

    def __post_init__(self):
        if self.method not in ("exhaustive", "sampled"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")

    def to_json_dict(self) -> dict:
        return {"S": self.sparsity, "delta": self.delta,
                "method": self.method, "trials": self.trials}


@dataclass(frozen=True)
class CertificateReport:
    """Bundle of measured constants with method provenance."""

    coherence: float | None = None
    rip: tuple = ()
    c1_r: float | None = None
    c1_value: float | None = None
    u_d: int | None = None
    u_value: float | None = None
    skipped: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        out: dict = {}
        if self.coherence is not None:
            out["coherence"] = self.coherence
        out["rip"] = [r.to_json_dict() for r in self.rip]
        if self.c1_value is not None:
            out["c1"] = {"r": self.c1_r, "value": self.c1_value}
        if self.u_value is not None:
            out["u"] = {"D": self.u_d, "value": self.u_value}
        for key, reason in self.skipped.items():
            out[key] = {"skipped": reason}
        return out


def coherence(d: Dictionary) -> float:
    """Largest |F_g(h)| over ordered pairs of distinct atoms g != h.

    The functional of g applied to h is not symmetric in g and h once p > 2,
    hence the sweep over ordered pairs.
    """
    if d.n_atoms < 2:
        raise ValueError("coherence needs at least two atoms")
    scores = np.abs(atom_functionals(d).T @ d.atoms)
    np.fill_diagonal(scores, 0.0)
    return float(scores.max())


def _gram_extremes(gram: np.ndarray, supports) -> float:
    worst = 0.0
    for sup in supports:
        sub = gram[np.ix_(sup, sup)]
        eigs = np.linalg.eigvalsh(sub)
        worst = max(worst, float(eigs[-1] - 1.0), float(1.0 - eigs[0]))
    return max(worst, 0.0)


def rip_constant_exhaustive(d: Dictionary, sparsity: int,
                            budget: int = DEFAULT_SUBSET_BUDGET) -> RipEstimate:
    """Exact isometry constant: sweep all supports of the given size.

    Principal submatrices only narrow the eigenvalue range, so sweeping
    supports of size exactly min(sparsity, n_atoms) covers all smaller ones.
    Hilbert case only (p = 2).
    """
    if d.space.p != 2.0:
        raise ValueError("isometry constants are defined here for p = 2 only")
    if sparsity < 1:
        raise ValueError("sparsity must be >= 1")
    size = min(sparsity, d.n_atoms)
    count = math.comb(d.n_atoms, size)
    if count > budget:
        raise BudgetExceededError(
            f"C({d.n_atoms},{size}) = {count} supports exceeds budget {budget}")
    gram = d.atoms.T @ d.atoms
    delta = _gram_extremes(gram, combinations(range(d.n_atoms), size))
    return RipEstimate(sparsity=sparsity, delta=delta, method="exhaustive", trials=0)


def rip_lower_bound_sampled(d: Dictionary, sparsity: int, trials: int,
                            seed: int) -> RipEstimate:
    """Lower bound on the isometry constant from uniformly sampled supports.

    Deterministic given the seed. If the trial count covers the full support
    family, falls back to the exhaustive sweep and reports it as such.
    """
    if d.space.p != 2.0:
        raise ValueError("isometry constants are defined here for p = 2 only")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    size = min(sparsity, d.n_atoms)
    if math.comb(d.n_atoms, size) <= trials:
        return rip_constant_exhaustive(d, sparsity)
    rng = np.random.Generator(np.random.PCG64(seed))
    gram = d.atoms.T @ d.atoms
    supports = (rng.choice(d.n_atoms, size=size, replace=False) for _ in range(trials))
    delta = _gram_extremes(gram, supports)
    return RipEstimate(sparsity=sparsity, delta=delta, method="sampled", trials=trials)


def rip_doubling_check(d: Dictionary, sparsity: int,
                       budget: int = DEFAULT_SUBSET_BUDGET) -> tuple[float, float, bool]:
    """(delta_S, delta_2S, delta_2S <= 3 delta_S + 1e-9), both computed exhaustively.

    The comparison is reported, not asserted: it can fail when delta_S
    degenerates to zero at tiny sparsity while atoms are correlated.
    """
    d_s = rip_constant_exhaustive(d, sparsity, budget).delta
    d_2s = rip_constant_exhaustive(d, 2 * sparsity, budget).delta
    return d_s, d_2s, bool(d_2s <= 3.0 * d_s + 1e-9)


def riesz_to_unconditionality(delta: float) -> float:
    """((1 + delta) / (1 - delta)) ** 0.5, the incoherence constant implied by
    an isometry constant delta < 1."""
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must be in [0, 1), got {delta}")
    return math.sqrt((1.0 + delta) / (1.0 - delta))


def n_of_x(x: SparseSignal, nu: float) -> int:
    """Largest n such that the n smallest squared coefficients sum to at most nu.

    Equivalently the minimal integer such that every sub-support strictly
    larger than it carries squared l2 energy exceeding nu.
    """
    if nu < 0.0:
        raise ValueError("nu must be nonnegative")
    squares = np.sort(np.asarray(x.coeffs, dtype=float) ** 2)
    return int(np.count_nonzero(np.cumsum(squares) <= nu))


def _subset_bit_chunks(k: int, chunk: int = 1 << 14):
    """Yield (masks, bits) for all nonempty subsets of {0..k-1}, chunked."""
    total = 1 << k
    shifts = np.arange(k, dtype=np.uint64)
    for start in range(1, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        bits = ((masks[:, None] >> shifts[None, :]) & 1).astype(float)
        yield bits


def nikolskii_constant(f: SparseSignal, d: Dictionary, r: float,
                       budget: int = DEFAULT_SUBSET_BUDGET) -> float:
    """Smallest constant C with sum_{i in A} |x_i| <= C |A|**r ||f_A|| for all
    nonempty A inside the support; exhaustive over all 2**K - 1 subsets."""
    if r < 0.5:
        raise ValueError("r must be >= 1/2")
    k = f.k
    if (1 << k) - 1 > budget:
        raise BudgetExceededError(f"2**{k} - 1 subsets exceeds budget {budget}")
    scaled = d.atoms[:, f.support] * f.coeffs  # column i is x_i * g_i
    abscf = np.abs(f.coeffs)
    p = d.space.p
    best = 0.0
    for bits in _subset_bit_chunks(k):
        sums = bits @ abscf
        sizes = bits.sum(axis=1)
        cols = scaled @ bits.T  # dim x chunk, each column is f_A
        if p == 2.0:
            norms = np.linalg.norm(cols, axis=0)
        else:
            scale = np.max(np.abs(cols), axis=0)
            safe = np.where(scale == 0.0, 1.0, scale)
            norms = scale * np.sum((np.abs(cols) / safe) ** p, axis=0) ** (1.0 / p)
        with np.errstate(divide="ignore"):
            ratios = sums / (sizes ** r * norms)
        best = max(best, float(np.max(ratios)))
    return best


def incoherence_constant(f: SparseSignal, d: Dictionary, depth: int,
                         budget: int = DEFAULT_PAIR_BUDGET,
                         solver_tol: float = 1e-9) -> float:
    """Smallest U such that ||f_A - sum_{i in Lam} c_i g_i|| >= ||f_A|| / U for
    every nonempty A inside the support and every Lam disjoint from A with
    |A| + |Lam| <= depth.

    Lam ranges over *all* atoms outside A, including support atoms: the decay
    guarantees apply the bound with Lam equal to the set of already-selected
    atoms, which typically meets the support. Restricting Lam away from the
    support would understate U and overstate the certified decay rate.

    Since the inner minimum is non-increasing as Lam grows, only Lam of
    maximal admissible size need be swept. For p = 2 the inner minimum is a
    least-squares residual; for p > 2 it is a smooth convex fit solved to
    solver_tol. Returns inf if some f_A lies in the span of an admissible Lam.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    k = f.k
    n = d.n_atoms
    max_a = min(k, depth)
    pairs = 0
    for a in range(1, max_a + 1):
        lam_size = min(depth - a, n - a)
        pairs += math.comb(k, a) * max(1, math.comb(n - a, lam_size))
    if pairs > budget:
        raise BudgetExceededError(f"{pairs} (A, Lam) evaluations exceed budget {budget}")

    scaled = d.atoms[:, f.support] * f.coeffs
    p = d.space.p
    all_atoms = np.arange(n)
    worst = 1.0  # empty Lam gives ratio exactly 1
    for a in range(1, max_a + 1):
        for a_pos in combinations(range(k), a):
            f_a = scaled[:, a_pos].sum(axis=1)
            fa_norm = lp_norm(f_a, d.space)
            if fa_norm == 0.0:
                return math.inf
            a_idx = f.support[list(a_pos)]
            others = np.setdiff1d(all_atoms, a_idx, assume_unique=True)
            lam_size = min(depth - a, others.size)
            if lam_size == 0:
                continue
            for lam in combinations(others, lam_size):
                basis = d.atoms[:, list(lam)]
                if p == 2.0:
                    c, *_ = np.linalg.lstsq(basis, f_a, rcond=None)
                else:
                    c = lp_fit(f_a, basis, p, tol=solver_tol, certificate="gradient")
                dist = lp_norm(f_a - basis @ c, d.space)
                if dist <= 1e-12 * max(1.0, fa_norm):
                    return math.inf
                worst = max(worst, fa_norm / dist)
    return worst


def d_norm(f, d: Dictionary) -> float:
    """max over atoms g of |F_g(f)|: the dictionary-induced norm of f."""
    v = as_vector(f, d.space)
    return float(np.max(np.abs(atom_functionals(d).T @ v)))


def best_m_term_oracle(f, d: Dictionary, m: int, norm: str = "space",
                       budget: int = DEFAULT_PAIR_BUDGET,
                       solver_tol: float = 1e-8) -> tuple[float, tuple]:
    """Exact best m-term approximation error by exhaustive support enumeration.

    norm "space" measures the residual in the ambient l_p norm (inner
    minimization: least squares at p = 2, smooth convex fit otherwise);
    norm "d_norm" measures it in the dictionary norm (inner minimization:
    linear minimax program). Supports of size exactly m cover all smaller
    ones since coefficients may vanish. Ties go to the lexicographically
    smallest support; returns (error, support).
    """
    if norm not in ("space", "d_norm"):
        raise ValueError(f"unknown norm {norm!r}")
    if m < 0:
        raise ValueError("m must be >= 0")
    v = as_vector(f, d.space)
    if m == 0:
        sigma = lp_norm(v, d.space) if norm == "space" else d_norm(v, d)
        return sigma, ()
    size = min(m, d.n_atoms)
    count = math.comb(d.n_atoms, size)
    if count > budget:
        raise BudgetExceededError(f"C({d.n_atoms},{size}) = {count} exceeds budget {budget}")
    if norm == "d_norm":
        funcs = atom_functionals(d)
        values = funcs.T @ v
    best_sigma = math.inf
    best_support: tuple = ()
    for sup in combinations(range(d.n_atoms), size):
        basis = d.atoms[:, list(sup)]
        if norm == "space":
            if d.space.p == 2.0:
                c, *_ = np.linalg.lstsq(basis, v, rcond=None)
            else:
                c = lp_fit(v, basis, d.space.p, tol=solver_tol, certificate="functional")
            sigma = lp_norm(v - basis @ c, d.space)
        else:
            _, sigma = minimax_fit(values, funcs.T @ basis)
        if sigma < best_sigma:
            best_sigma = sigma
            best_support = sup
    return float(best_sigma), best_support
