"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion lines.
Calibrated thresholds come from calibration.json at the repository root; the
calibration procedure is documented there and in scripts/run_pilots.py.
"""

import json
import math
import subprocess
import sys
import time
from contextlib import contextmanager
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from greedylp import (GreedyConfig, McConfig, SparseSignal, best_m_term_oracle,
                      coherence, d_norm, decay_check, incoherence_constant,
                      lp_norm, mc_recovery, n_of_x, qoga_dnorm_check,
                      rip_constant_exhaustive, rip_lower_bound_sampled,
                      riesz_to_unconditionality, run_wcga, run_womp, run_wqoga,
                      small_coeff_check)

from helpers import (gaussian_dictionary, identity_dictionary, random_signal,
                     spikes_and_hadamard)

REPO = Path(__file__).resolve().parents[1]
CALIBRATION = json.loads((REPO / "calibration.json").read_text())


@contextmanager
def criterion(number, description, seconds):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < seconds, f"runtime {elapsed:.1f}s exceeds {seconds}s"
    except BaseException:
        print(f"ACCEPTANCE {number:2d} FAIL  {description}")
        raise
    print(f"ACCEPTANCE {number:2d} PASS  {description} ({elapsed:.1f}s)")


def test_criterion_01_hilbert_reduction():
    with criterion(1, "WOMP = WCGA = WQOGA at p=2, t=1 (50 instances)", 10):
        rng = np.random.default_rng(1001)
        for _ in range(50):
            d = gaussian_dictionary(rng, 32, 64)
            sig = random_signal(rng, 64, 5)
            f0 = sig.synthesize(d)
            cfg = GreedyConfig(weakness_t=1.0, max_iterations=15,
                               residual_tolerance=1e-9)
            a = run_womp(f0, d, cfg)
            b = run_wcga(f0, d, cfg)
            c = run_wqoga(f0, d, cfg)
            assert a.selected == b.selected == c.selected
            np.testing.assert_allclose(a.residual_norms, b.residual_norms,
                                       rtol=0, atol=1e-9)
            np.testing.assert_allclose(a.residual_norms, c.residual_norms,
                                       rtol=0, atol=1e-9)


def test_criterion_02_canonical_basis_recovery():
    with criterion(2, "canonical basis: WCGA recovers in exactly K steps "
                      "(p in {2,4}, 100 signals)", 5):
        rng = np.random.default_rng(1002)
        for p in (2.0, 4.0):
            d = identity_dictionary(16, p=p)
            for _ in range(50):
                k = int(rng.integers(1, 9))  # K <= M/2
                sig = random_signal(rng, 16, k, low=0.3)
                f0 = sig.synthesize(d)
                cfg = GreedyConfig(weakness_t=1.0, max_iterations=k,
                                   residual_tolerance=1e-10)
                tr = run_wcga(f0, d, cfg, truth=sig)
                assert len(tr.residual_norms) == k + 1, "stopped before K steps"
                assert tr.residual_norms[-1] <= 1e-10
                assert set(tr.selected) == set(int(i) for i in sig.support)


def test_criterion_03_coherence_recovery():
    with criterion(3, "coherence regime: WQOGA exact recovery 100/100 "
                      "(t in {1, 0.9})", 30):
        d = spikes_and_hadamard(64)
        mu = coherence(d)
        assert mu == pytest.approx(0.125, abs=1e-12)  # exhaustive measurement
        k = 4
        rng = np.random.default_rng(1003)
        wins = 0
        for t in (1.0, 0.9):
            assert k < (t / (1 + t)) * (1 + 1 / mu)
            for _ in range(50):
                sig = random_signal(rng, d.n_atoms, k, low=0.1)
                f0 = sig.synthesize(d)
                cfg = GreedyConfig(weakness_t=t, max_iterations=k,
                                   residual_tolerance=1e-9)
                tr = run_wqoga(f0, d, cfg, truth=sig)
                if (set(tr.selected) == set(int(i) for i in sig.support)
                        and tr.residual_norms[-1] <= 1e-9):
                    wins += 1
        assert wins == 100


def test_criterion_04_decay_inequality():
    with criterion(4, "residual-decay bound with exhaustively certified "
                      "constants: zero violations (25 instances)", 300):
        rng = np.random.default_rng(1004)
        checked = 0
        for p, n_atoms, count in ((2.0, 14, 13), (4.0, 13, 12)):
            for i in range(count):
                k = 3 + i % 4  # K in 3..6
                d = gaussian_dictionary(rng, 16, n_atoms, p=p)
                sig = random_signal(rng, n_atoms, k, low=0.3)
                f0 = sig.synthesize(d)
                cfg = GreedyConfig(weakness_t=1.0, max_iterations=12 - k,
                                   residual_tolerance=1e-12)
                rep = decay_check(f0, d, sig, cfg, r=0.5, budget_d=12)
                assert rep.holds, (p, i, rep.violations)
                checked += rep.checked_pairs
        assert checked > 0


def test_criterion_05_oracle_equivalences():
    with criterion(5, "oracle equivalences (subset brute force, sampled vs "
                      "exhaustive, incoherence bound, double enumeration)", 120):
        rng = np.random.default_rng(1005)

        # n_of_x vs explicit enumeration of all sub-supports, 200 signals
        for _ in range(200):
            k = int(rng.integers(1, 13))
            coeffs = rng.uniform(-1, 1, size=k)
            coeffs[coeffs == 0.0] = 0.5
            sig = SparseSignal(support=np.arange(k), coeffs=coeffs)
            nu = float(rng.uniform(0, k * 0.8))
            squares = coeffs ** 2
            masks = np.arange(1, 1 << k, dtype=np.uint64)
            bits = ((masks[:, None] >> np.arange(k, dtype=np.uint64)) & 1).astype(float)
            energies = bits @ squares
            sizes = bits.sum(axis=1)
            small = energies <= nu
            brute = int(sizes[small].max()) if np.any(small) else 0
            assert n_of_x(sig, nu) == brute

        # sampled isometry lower bound never exceeds the exhaustive value
        for trial in range(5):
            d = gaussian_dictionary(rng, 8, 10)
            for s in (2, 3):
                exact = rip_constant_exhaustive(d, s).delta
                sampled = rip_lower_bound_sampled(d, s, trials=30,
                                                  seed=1005 + trial).delta
                assert sampled <= exact + 1e-12

        # incoherence constant against the isometry-implied bound at p = 2;
        # the bound needs delta < 1, which tall dictionaries provide
        checked = 0
        while checked < 5:
            d = gaussian_dictionary(rng, 12, 8)
            sig = random_signal(rng, 8, 3)
            depth = 5
            delta = rip_constant_exhaustive(d, depth).delta
            if delta >= 1.0:
                continue
            u = incoherence_constant(sig, d, depth)
            assert u <= riesz_to_unconditionality(delta) + 1e-9
            checked += 1

        # best m-term oracle against an independent full enumeration (cvxpy)
        import cvxpy as cp

        def cvx_sigma(f, d, m, norm):
            best = math.inf
            for size in range(0, m + 1):
                for sup in combinations(range(d.n_atoms), size):
                    if size == 0:
                        resid = f
                        val = (float(np.max(np.abs(
                            (np.abs(d.atoms) ** (d.space.p - 1) *
                             np.sign(d.atoms)).T @ resid)))
                            if norm == "d_norm" else lp_norm(resid, d.space))
                        best = min(best, val)
                        continue
                    basis = d.atoms[:, list(sup)]
                    c = cp.Variable(size)
                    expr = f - basis @ c
                    if norm == "d_norm":
                        funcs = np.abs(d.atoms) ** (d.space.p - 1) * np.sign(d.atoms)
                        objective = cp.norm_inf(funcs.T @ expr)
                    else:
                        objective = cp.pnorm(expr, d.space.p)
                    prob = cp.Problem(cp.Minimize(objective))
                    prob.solve()
                    best = min(best, prob.value)
            return best

        for p in (2.0, 4.0):
            for _ in range(2):
                d = gaussian_dictionary(rng, 6, 8, p=p)
                f = rng.standard_normal(6)
                for m in (1, 2):
                    sigma, support = best_m_term_oracle(f, d, m)
                    assert sigma == pytest.approx(cvx_sigma(f, d, m, "space"),
                                                  abs=1e-6)
                    assert len(support) == m
        d = gaussian_dictionary(rng, 6, 8)
        f = rng.standard_normal(6)
        for m in (1, 2):
            sigma, _ = best_m_term_oracle(f, d, m, norm="d_norm")
            assert sigma == pytest.approx(cvx_sigma(f, d, m, "d_norm"), abs=1e-6)


def test_criterion_06_qoga_dnorm_inequality():
    with criterion(6, "QOGA d-norm residual <= 13.5 sigma_m: zero violations "
                      "(50 instances)", 60):
        rng = np.random.default_rng(1006)
        # 25 Gaussian instances at m = 1 (coherence must be below 1/3)
        done = 0
        while done < 25:
            d = gaussian_dictionary(rng, 128, 10)
            if coherence(d) > 1.0 / 3.0:
                continue
            f0 = rng.standard_normal(128)
            rep = qoga_dnorm_check(f0, d, 1)
            assert not rep.skipped
            assert rep.passed, (rep.final_dnorm, rep.sigma_m)
            done += 1
        # 25 spike + flat-column instances at m = 2 (coherence 1/8)
        base = spikes_and_hadamard(64)
        for _ in range(25):
            cols = np.concatenate([rng.choice(64, 5, replace=False),
                                   64 + rng.choice(64, 5, replace=False)])
            sub = type(base)(atoms=base.atoms[:, cols], space=base.space)
            assert coherence(sub) <= 0.125 + 1e-12
            f0 = rng.standard_normal(64)
            rep = qoga_dnorm_check(f0, sub, 2)
            assert not rep.skipped
            assert rep.passed, (rep.final_dnorm, rep.sigma_m)


def test_criterion_07_mc_recovery_trend():
    with criterion(7, "Monte Carlo recovery frequency >= calibrated threshold; "
                      "monotone in the budget slack", 300):
        cal = CALIBRATION["omp_recovery"]
        base = dict(cal["config"])
        seed = cal["acceptance_seed"]
        res_50 = mc_recovery(McConfig(base_seed=seed, **base))
        assert res_50.frequency >= cal["theta_star"], \
            (res_50.frequency, cal["theta_star"])

        base_01 = dict(base)
        base_01["epsilon"] = 0.1
        res_01 = mc_recovery(McConfig(base_seed=seed, **base_01))
        n = base["trials"]
        sigma = math.hypot(
            math.sqrt(max(res_50.frequency * (1 - res_50.frequency), 1e-4) / n),
            math.sqrt(max(res_01.frequency * (1 - res_01.frequency), 1e-4) / n))
        assert res_50.frequency >= res_01.frequency - 2 * sigma


def test_criterion_08_coefficient_floor_effect():
    with criterion(8, "floored coefficients recover at least as often as "
                      "unfloored (2 sigma slack)", 300):
        base = dict(dim_m=256, n_atoms=512, sparsity_k=20, epsilon=0.5,
                    trials=200, base_seed=20260810)
        f_floor = mc_recovery(McConfig(coefficient_law="uniform_floor",
                                       epsilon1=0.5, **base)).frequency
        f_plain = mc_recovery(McConfig(coefficient_law="uniform_pm1",
                                       **base)).frequency
        sigma = math.hypot(
            math.sqrt(max(f_floor * (1 - f_floor), 1e-4) / 200),
            math.sqrt(max(f_plain * (1 - f_plain), 1e-4) / 200))
        assert f_floor >= f_plain - 2 * sigma


def test_criterion_09_small_coefficient_bound():
    with criterion(9, "small-coefficient count bound: zero violations at "
                      "K=100; exact binomial tail agreement at K=10", 120):
        cfg = McConfig(dim_m=128, n_atoms=128, sparsity_k=100, epsilon=0.5,
                       trials=10 ** 4, base_seed=909)
        assert small_coeff_check(cfg, 0.5) == 1.0

        k, p, trials = 10, 0.4, 10 ** 5
        cfg = McConfig(dim_m=16, n_atoms=16, sparsity_k=k, epsilon=0.5,
                       trials=trials, base_seed=910)
        freq = small_coeff_check(cfg, p)
        thresh = math.floor(2 * p * k)
        tail = sum(math.comb(k, j) * p ** j * (1 - p) ** (k - j)
                   for j in range(thresh + 1, k + 1))
        sigma = math.sqrt(tail * (1 - tail) / trials)
        assert abs((1.0 - freq) - tail) <= 3 * sigma, (1.0 - freq, tail)


def test_criterion_10_determinism(tmp_path):
    with criterion(10, "seeded commands are byte-identical across reruns and "
                       "across --jobs 1 vs --jobs 8", 120):
        def cli(*argv):
            proc = subprocess.run([sys.executable, "-m", "greedylp.cli", *argv],
                                  capture_output=True, text=True, cwd=REPO)
            assert proc.returncode == 0, proc.stderr
            return proc

        def rerun_identical(name, *argv):
            paths = []
            for tag in ("x", "y"):
                out = tmp_path / f"{name}-{tag}"
                cli(*argv, "--out", str(out))
                paths.append(out.read_bytes())
            assert paths[0] == paths[1], f"{name} differs across reruns"

        dict_path = tmp_path / "det-dict.json"
        sig_path = tmp_path / "det-sig.json"
        rerun_identical("gen-dict", "gen-dict", "--dim", "16", "--n", "24",
                        "--p", "2", "--seed", "42")
        cli("gen-dict", "--dim", "16", "--n", "24", "--p", "2", "--seed", "42",
            "--out", str(dict_path))
        rerun_identical("gen-signal", "gen-signal", "--n", "24", "--k", "3",
                        "--seed", "43")
        cli("gen-signal", "--n", "24", "--k", "3", "--seed", "43",
            "--out", str(sig_path))
        rerun_identical("run", "run", "--alg", "wcga", "--dict", str(dict_path),
                        "--signal", str(sig_path))
        rerun_identical("certify", "certify", "--dict", str(dict_path),
                        "--signal", str(sig_path), "--rip-s", "2", "--method",
                        "sampled", "--trials", "50", "--seed", "44")

        outputs = {}
        for jobs in ("1", "8"):
            csv = tmp_path / f"mc-{jobs}.csv"
            agg = tmp_path / f"mc-{jobs}.json"
            cli("mc", "--m", "32", "--n", "64", "--k", "4", "--eps", "0.5",
                "--trials", "16", "--seed", "45", "--jobs", jobs,
                "--csv", str(csv), "--json", str(agg))
            outputs[jobs] = (csv.read_bytes(), agg.read_bytes())
        assert outputs["1"] == outputs["8"], "mc output depends on --jobs"
