"""Shared instance builders for the test suite."""

import numpy as np
from scipy.linalg import hadamard

from greedylp import Dictionary, SparseSignal, SpaceSpec, normalize_dictionary


def gaussian_dictionary(rng, dim, n, p=2.0):
    space = SpaceSpec(dim=dim, p=p)
    return normalize_dictionary(rng.standard_normal((dim, n)), space)


def identity_dictionary(dim, p=2.0, n=None):
    space = SpaceSpec(dim=dim, p=p)
    return Dictionary(atoms=np.eye(dim)[:, : (n or dim)], space=space)


def spikes_and_hadamard(dim):
    """Identity plus normalized Hadamard columns: 2*dim atoms with pairwise
    inner products either 0 or exactly 1/sqrt(dim)."""
    space = SpaceSpec(dim=dim, p=2.0)
    had = hadamard(dim).astype(float) / np.sqrt(dim)
    return Dictionary(atoms=np.hstack([np.eye(dim), had]), space=space)


def random_signal(rng, n_atoms, k, low=0.2, high=1.0):
    """Signal with coefficient magnitudes bounded away from zero."""
    support = np.sort(rng.choice(n_atoms, size=k, replace=False))
    signs = rng.integers(0, 2, size=k) * 2.0 - 1.0
    coeffs = signs * rng.uniform(low, high, size=k)
    return SparseSignal(support=support, coeffs=coeffs)
