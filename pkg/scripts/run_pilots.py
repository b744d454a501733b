#!/usr/bin/env python3
"""Pilot runs that fix the calibration constants recorded in calibration.json.

The recovery guarantees come with non-constructive absolute constants, so the
acceptance thresholds are pinned empirically:

  * omp_recovery.theta_star — lower bound for the recovery frequency of OMP at
    (M=256, N=512, K=20, eps=0.5, uniform coefficients, 200 trials). Pilot:
    the same configuration under five disjoint base seeds; theta_star is the
    smallest observed frequency minus two binomial standard errors, rounded
    down to 0.005. The acceptance run uses a sixth, disjoint seed.
  * wcga_budget_factor.big_c — iteration-budget factor for the Chebyshev
    greedy algorithm: m* = ceil(big_c * U^2 ln(U+1) K^(2r)). Pilot: sweep
    big_c upward over a grid until every exactly sparse pilot instance
    (orthonormal and Gaussian dictionaries, p in {2, 4}, K <= 3, measured U)
    is recovered to 1e-9 within m*; record that minimal value and pin 1.5x.
  * wcga_noise_ratio_bound.value — bound on ||residual after m*|| / eps for
    noisy inputs at p = 2. Pilot: 50 instances of sparse signal plus
    orthogonal noise; record the largest observed ratio and pin 2x.

Rerun with:  python scripts/run_pilots.py  (writes calibration.json in cwd)
"""

import json
import math
import sys

import numpy as np

from greedylp import (GreedyConfig, McConfig, SparseSignal, lebesgue_check,
                      lp_norm, mc_recovery, normalize_dictionary)
from greedylp.space import Dictionary, SpaceSpec


def pilot_theta_star():
    cfg_base = dict(dim_m=256, n_atoms=512, sparsity_k=20, epsilon=0.5,
                    trials=200, coefficient_law="uniform_pm1")
    seeds = [1, 2, 3, 4, 5]
    freqs = []
    for seed in seeds:
        res = mc_recovery(McConfig(base_seed=seed, **cfg_base))
        freqs.append(res.frequency)
        print(f"  seed {seed}: frequency {res.frequency:.3f}")
    worst = min(freqs)
    sigma = math.sqrt(max(worst * (1 - worst), 1e-4) / cfg_base["trials"])
    theta = math.floor((worst - 2 * sigma) / 0.005) * 0.005
    return {
        "theta_star": theta,
        "acceptance_seed": 20260809,
        "config": cfg_base,
        "pilot_seeds": seeds,
        "pilot_frequencies": freqs,
        "procedure": ("five 200-trial runs of the acceptance configuration under "
                      "disjoint base seeds; theta_star = min frequency - 2 binomial "
                      "sigma, floored to a multiple of 0.005; the acceptance run "
                      "uses base_seed 20260809, disjoint from the pilot seeds"),
    }


def _pilot_instances():
    """(dictionary, signal, depth) triples for the budget-factor pilot."""
    out = []
    for p in (2.0, 4.0):
        space = SpaceSpec(16, p)
        eye = Dictionary(atoms=np.eye(16), space=space)
        for k, sup in ((1, [3]), (2, [2, 9]), (3, [1, 8, 14])):
            coeffs = np.linspace(1.0, 0.4, k) * np.where(np.arange(k) % 2, -1.0, 1.0)
            out.append((eye, SparseSignal(support=np.array(sup),
                                          coeffs=coeffs), 16))
    rng = np.random.default_rng(31415)
    for p in (2.0, 4.0):
        for k in (2, 3):
            for _ in range(3):
                space = SpaceSpec(16, p)
                d = normalize_dictionary(rng.standard_normal((16, 14)), space)
                sup = np.sort(rng.choice(14, size=k, replace=False))
                coeffs = rng.uniform(0.4, 1.0, size=k) * \
                    (rng.integers(0, 2, size=k) * 2.0 - 1.0)
                out.append((d, SparseSignal(support=sup, coeffs=coeffs), 12))
    return out


def pilot_big_c():
    instances = _pilot_instances()
    grid = [0.5 + 0.25 * i for i in range(19)]  # 0.5 .. 5.0
    minimal = None
    for big_c in grid:
        ok = True
        for d, sig, depth in instances:
            rep = lebesgue_check(sig.synthesize(d), d, sig, 0.0,
                                 GreedyConfig(weakness_t=1.0),
                                 r=0.5, big_c=big_c, budget_d=depth)
            if not rep.exact_recovery:
                ok = False
                break
        if ok:
            minimal = big_c
            break
    assert minimal is not None, "no grid value recovered every pilot instance"
    pinned = round(1.5 * minimal, 3)
    print(f"  minimal big_c on grid: {minimal}; pinned {pinned}")
    return {
        "big_c": pinned,
        "pilot_minimal": minimal,
        "grid": [grid[0], grid[-1], 0.25],
        "instances": len(instances),
        "procedure": ("sweep big_c over 0.5:5.0:0.25 until every exactly sparse "
                      "pilot instance (orthonormal + Gaussian, p in {2,4}, K <= 3, "
                      "measured incoherence constants) reaches residual <= 1e-9 "
                      "within m*; pin 1.5x the minimal grid value"),
    }


def pilot_noise_ratio(big_c):
    rng = np.random.default_rng(27182)
    ratios = []
    for i in range(50):
        space = SpaceSpec(16, 2.0)
        if i % 2 == 0:
            d = Dictionary(atoms=np.eye(16), space=space)
            n_atoms, depth = 16, 16
        else:
            d = normalize_dictionary(rng.standard_normal((16, 14)), space)
            n_atoms, depth = 14, 12
        k = int(rng.integers(1, 4))
        sup = np.sort(rng.choice(n_atoms, size=k, replace=False))
        coeffs = rng.uniform(0.4, 1.0, size=k) * (rng.integers(0, 2, size=k) * 2.0 - 1.0)
        sig = SparseSignal(support=sup, coeffs=coeffs)
        clean = sig.synthesize(d)
        noise = rng.standard_normal(16)
        basis = d.atoms[:, sig.support]
        q, _ = np.linalg.qr(basis)
        noise -= q @ (q.T @ noise)
        noise /= lp_norm(noise, space)
        eps = float(rng.uniform(0.01, 0.1))
        rep = lebesgue_check(clean + eps * noise, d, sig, eps,
                             GreedyConfig(weakness_t=1.0),
                             r=0.5, big_c=big_c, budget_d=depth)
        ratios.append(rep.ratio)
    worst = max(ratios)
    pinned = round(2.0 * worst, 3)
    print(f"  worst ratio {worst:.4f}; pinned bound {pinned}")
    return {
        "value": pinned,
        "pilot_worst_ratio": worst,
        "instances": 50,
        "procedure": ("50 instances of exactly sparse signal plus orthogonal unit "
                      "noise scaled by eps in [0.01, 0.1] at p = 2; run the "
                      "Chebyshev greedy algorithm for the calibrated m* budget and "
                      "record ||residual|| / eps; pin 2x the worst observed ratio"),
    }


def main():
    print("pilot: OMP recovery threshold")
    omp = pilot_theta_star()
    print("pilot: WCGA budget factor")
    budget = pilot_big_c()
    print("pilot: WCGA noise ratio bound")
    noise = pilot_noise_ratio(budget["big_c"])
    payload = {
        "omp_recovery": omp,
        "wcga_budget_factor": budget,
        "wcga_noise_ratio_bound": noise,
    }
    with open("calibration.json", "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print("wrote calibration.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
