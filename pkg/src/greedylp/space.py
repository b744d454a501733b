"""Finite-dimensional l_p spaces: norms, norming functionals, unit-norm dictionaries.

Everything downstream (atom selection, projections, certifiers) is built on the
three primitives here: the l_p norm, the norming (peak) functional of a nonzero
vector, and dictionaries of unit-norm atoms stored as dense columns.

Only p in [2, inf) is supported: that is the range where the space's modulus of
smoothness admits the quadratic bound gamma * u**2 with gamma = (p - 1) / 2,
which the residual-decay guarantees rely on. Smaller p raises immediately.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

# Two orders of magnitude above double-precision accumulation at dim <= 1e4.
UNIT_NORM_TOL = 1e-12
DUAL_NORM_TOL = 1e-10
# Dictionary files are re-verified on read; anything worse than this is rejected.
FILE_NORM_TOL = 1e-9


@dataclass(frozen=True)
class SpaceSpec:
    """The ambient space l_p^dim.

    The smoothness constant gamma is derived, never stored, so it cannot drift
    from its defining value (p - 1) / 2.
    """

    dim: int
    p: float

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if not np.isfinite(self.p) or self.p < 2.0:
            raise ValueError(f"p must be >= 2 and finite, got {self.p}")

    @property
    def gamma(self) -> float:
        return (self.p - 1.0) / 2.0

    @property
    def dual_p(self) -> float:
        return self.p / (self.p - 1.0)


def as_vector(f, space: SpaceSpec) -> np.ndarray:
    """Validate f as a vector of the space and return it as a float array."""
    v = np.asarray(f, dtype=float)
    if v.shape != (space.dim,):
        raise ValueError(f"expected vector of shape ({space.dim},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def lp_norm(f, space: SpaceSpec) -> float:
    """(sum |f_i|**p) ** (1/p), computed with max-scaling for overflow safety."""
    v = as_vector(f, space)
    if space.p == 2.0:
        return float(np.linalg.norm(v))
    scale = float(np.max(np.abs(v)))
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum((np.abs(v) / scale) ** space.p) ** (1.0 / space.p))


@dataclass(frozen=True)
class NormingFunctional:
    """Representer of the norming (peak) functional of a nonzero vector.

    Acts by F(g) = sum_i weights_i * g_i, has dual norm one, and attains the
    norm of the vector it was built from.
    """

    weights: np.ndarray
    space: SpaceSpec

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)
        if w.shape != (self.space.dim,):
            raise ValueError("weights length does not match space dimension")
        dual = np.linalg.norm(w) if self.space.p == 2.0 else \
            float(np.sum(np.abs(w) ** self.space.dual_p) ** (1.0 / self.space.dual_p))
        if abs(dual - 1.0) > DUAL_NORM_TOL:
            raise ValueError(f"dual norm {dual} deviates from 1 beyond {DUAL_NORM_TOL}")

    def __call__(self, g) -> float:
        v = as_vector(g, self.space)
        return float(self.weights @ v)


def _duality_weights(v: np.ndarray, p: float) -> np.ndarray:
    """Unnormalized representer |v|**(p-1) * sign(v); sign(0) contributes zero."""
    if p == 2.0:
        return v.copy()
    return np.abs(v) ** (p - 1.0) * np.sign(v)


def norming_functional(f, space: SpaceSpec) -> NormingFunctional:
    """Norming functional of a nonzero f: weights |f_i|**(p-1) sign(f_i) / ||f||**(p-1)."""
    v = as_vector(f, space)
    norm = lp_norm(v, space)
    if norm == 0.0:
        raise ValueError("norming functional is undefined for the zero vector")
    w = _duality_weights(v / norm, space.p)
    return NormingFunctional(weights=w, space=space)


def smoothness_gamma(space: SpaceSpec) -> float:
    """Quadratic modulus-of-smoothness constant (p - 1) / 2 of the space."""
    return space.gamma


@dataclass(frozen=True)
class Dictionary:
    """Dense dim x N matrix whose columns are distinct unit-norm atoms."""

    atoms: np.ndarray
    space: SpaceSpec
    norm_tol: float = UNIT_NORM_TOL

    def __post_init__(self):
        a = np.asarray(self.atoms, dtype=float)
        object.__setattr__(self, "atoms", a)
        a.setflags(write=False)
        if a.ndim != 2 or a.shape[0] != self.space.dim:
            raise ValueError(
                f"atoms must be a ({self.space.dim}, N) matrix, got shape {a.shape}")
        if a.shape[1] < 1:
            raise ValueError("dictionary needs at least one atom")
        if not np.all(np.isfinite(a)):
            raise ValueError("atoms have non-finite entries")
        norms = _column_lp_norms(a, self.space.p)
        bad = np.flatnonzero(np.abs(norms - 1.0) > self.norm_tol)
        if bad.size:
            raise ValueError(
                f"columns {bad.tolist()} are not unit-norm within {self.norm_tol} "
                f"(norms {norms[bad].tolist()})")
        if np.unique(a, axis=1).shape[1] != a.shape[1]:
            raise ValueError("dictionary columns must be pairwise distinct")

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]

    def to_json_dict(self) -> dict:
        return {
            "dim": self.space.dim,
            "n_atoms": self.n_atoms,
            "p": self.space.p,
            "atoms": [self.atoms[:, j].tolist() for j in range(self.n_atoms)],
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Dictionary":
        """Read a dictionary file; atoms are verified, never re-normalized."""
        with open(path) as fh:
            obj = json.load(fh)
        space = SpaceSpec(dim=int(obj["dim"]), p=float(obj["p"]))
        atoms = np.array(obj["atoms"], dtype=float).T
        if atoms.ndim != 2 or atoms.shape != (space.dim, int(obj["n_atoms"])):
            raise ValueError("atom array shape disagrees with dim/n_atoms header")
        return cls(atoms=atoms, space=space, norm_tol=FILE_NORM_TOL)


def _column_lp_norms(a: np.ndarray, p: float) -> np.ndarray:
    if p == 2.0:
        return np.linalg.norm(a, axis=0)
    scale = np.max(np.abs(a), axis=0)
    safe = np.where(scale == 0.0, 1.0, scale)
    return scale * np.sum((np.abs(a) / safe) ** p, axis=0) ** (1.0 / p)


def normalize_dictionary(raw, space: SpaceSpec) -> Dictionary:
    """Scale each column of a raw matrix to unit l_p norm, preserving order."""
    a = np.asarray(raw, dtype=float)
    if a.ndim != 2 or a.shape[0] != space.dim:
        raise ValueError(f"raw matrix must be ({space.dim}, N), got shape {a.shape}")
    norms = _column_lp_norms(a, space.p)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero columns at indices {zero.tolist()}")
    return Dictionary(atoms=a / norms, space=space)


def atom_functionals(d: Dictionary) -> np.ndarray:
    """dim x N matrix whose column j is the norming-functional representer of atom j.

    Atoms are unit-norm, so no denominator is needed. For p = 2 this is the
    atom matrix itself.
    """
    return _duality_weights(d.atoms, d.space.p)
