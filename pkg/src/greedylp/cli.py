"""Command-line interface.

Subcommands: gen-dict, gen-signal, certify, run, mc, check. Structured
artifacts are JSON (dictionaries, signals, certificates, check reports,
Monte Carlo aggregates), per-trial tables are CSV, pursuit traces are JSON
lines. Every command echoes its resolved configuration to stdout, and all
randomness flows from explicit --seed flags.

Exit codes: 0 success, 1 failed assertion-bearing check, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import experiments
from .analysis import (DEFAULT_PAIR_BUDGET, DEFAULT_SUBSET_BUDGET,
                       CertificateReport, SparseSignal, incoherence_constant,
                       coherence as measure_coherence, nikolskii_constant,
                       rip_constant_exhaustive, rip_lower_bound_sampled)
from .errors import BudgetExceededError
from .experiments import (GreedyConfig, McConfig, decay_check, lebesgue_check,
                          mc_recovery, omp_budget_diagnostic, qoga_dnorm_check,
                          run_trial)
from .greedy import run_wcga, run_womp, run_wqoga
from .space import Dictionary, SpaceSpec, lp_norm, normalize_dictionary


def _echo(command: str, **resolved) -> None:
    print(json.dumps({"command": command, "config": resolved}))


def _write_json(obj: dict, path: str | None) -> None:
    text = json.dumps(obj)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_gen_dict(args) -> int:
    space = SpaceSpec(dim=args.dim, p=args.p)
    if args.law == "gaussian":
        rng = np.random.Generator(np.random.PCG64(args.seed))
        d = normalize_dictionary(rng.standard_normal((args.dim, args.n)), space)
    else:  # identity
        if args.n > args.dim:
            raise ValueError("identity law needs n <= dim")
        d = Dictionary(atoms=np.eye(args.dim)[:, :args.n], space=space)
    d.save(args.out)
    _echo("gen-dict", dim=args.dim, n=args.n, p=args.p, seed=args.seed,
          law=args.law, out=args.out)
    return 0


def cmd_gen_signal(args) -> int:
    rng = np.random.Generator(np.random.PCG64(args.seed))
    support = np.sort(rng.choice(args.n, size=args.k, replace=False))
    if args.law == "uniform":
        coeffs = rng.uniform(-1.0, 1.0, size=args.k)
        while np.any(coeffs == 0.0):
            coeffs[coeffs == 0.0] = rng.uniform(-1.0, 1.0,
                                                size=int(np.sum(coeffs == 0.0)))
    elif args.law == "rademacher":
        coeffs = rng.integers(0, 2, size=args.k) * 2.0 - 1.0
    else:  # floor
        if args.eps1 is None or not 0.0 < args.eps1 < 1.0:
            raise ValueError("floor law needs --eps1 in (0, 1)")
        signs = rng.integers(0, 2, size=args.k) * 2.0 - 1.0
        coeffs = signs * rng.uniform(args.eps1, 1.0, size=args.k)
    SparseSignal(support=support, coeffs=coeffs).save(args.out)
    _echo("gen-signal", n=args.n, k=args.k, seed=args.seed, law=args.law,
          eps1=args.eps1, out=args.out)
    return 0


def cmd_certify(args) -> int:
    if args.method == "sampled" and args.rip_s and args.seed is None:
        raise ValueError("sampled method needs --seed")
    d = Dictionary.load(args.dict)
    skipped: dict = {}
    coh = None
    if d.n_atoms >= 2:
        coh = measure_coherence(d)
    else:
        skipped["coherence"] = "single-atom dictionary"

    rip_budget = args.budget if args.budget else DEFAULT_SUBSET_BUDGET
    pair_budget = args.budget if args.budget else DEFAULT_PAIR_BUDGET
    rips = []
    for s in args.rip_s:
        key = f"rip_S{s}"
        try:
            if args.method == "exhaustive":
                rips.append(rip_constant_exhaustive(d, s, budget=rip_budget))
            else:
                rips.append(rip_lower_bound_sampled(d, s, trials=args.trials,
                                                    seed=args.seed))
        except BudgetExceededError as exc:
            skipped[key] = str(exc)
        except ValueError as exc:
            skipped[key] = str(exc)

    c1_r = c1_value = u_d = u_value = None
    if args.signal:
        sig = SparseSignal.load(args.signal)
        if args.a1_r is not None:
            try:
                c1_r, c1_value = args.a1_r, nikolskii_constant(sig, d, args.a1_r)
            except BudgetExceededError as exc:
                skipped["c1"] = str(exc)
        if args.a2_d is not None:
            try:
                u_d, u_value = args.a2_d, incoherence_constant(
                    sig, d, args.a2_d, budget=pair_budget)
            except BudgetExceededError as exc:
                skipped["u"] = str(exc)

    report = CertificateReport(coherence=coh, rip=tuple(rips), c1_r=c1_r,
                               c1_value=c1_value, u_d=u_d, u_value=u_value,
                               skipped=skipped)
    _echo("certify", dict=args.dict, signal=args.signal, rip_s=args.rip_s,
          method=args.method, trials=args.trials, seed=args.seed,
          a1_r=args.a1_r, a2_d=args.a2_d, budget=args.budget, out=args.out)
    _write_json(report.to_json_dict(), args.out)
    return 0


_ALGORITHMS = {"womp": run_womp, "wcga": run_wcga, "wqoga": run_wqoga}


def cmd_run(args) -> int:
    d = Dictionary.load(args.dict)
    if args.p is not None and args.p != d.space.p:
        raise ValueError(f"--p {args.p} disagrees with dictionary p = {d.space.p}")
    sig = SparseSignal.load(args.signal)
    f0 = sig.synthesize(d)
    max_iter = args.max_iter if args.max_iter else min(d.n_atoms, d.space.dim)
    cfg = GreedyConfig(weakness_t=args.t, max_iterations=max_iter,
                       residual_tolerance=args.tol)
    trace = _ALGORITHMS[args.alg](f0, d, cfg, truth=sig)
    _echo("run", alg=args.alg, dict=args.dict, signal=args.signal, t=args.t,
          max_iter=max_iter, tol=args.tol, out=args.out)
    line = json.dumps(trace.to_json_dict())
    if args.out:
        # truncate, not append: rerunning a seeded command must reproduce the
        # file byte for byte
        with open(args.out, "w") as fh:
            fh.write(line + "\n")
    else:
        print(line)
    return 0


def _mc_worker(packed):
    cfg, trial, nu = packed
    return run_trial(cfg, trial, nu)


def cmd_mc(args) -> int:
    cfg = McConfig(dim_m=args.m, n_atoms=args.n, sparsity_k=args.k,
                   epsilon=args.eps, trials=args.trials, base_seed=args.seed,
                   coefficient_law=args.law, epsilon1=args.eps1,
                   dictionary_law="from_file" if args.dict else "gaussian_normalized",
                   dictionary_path=args.dict)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            records = list(pool.map(_mc_worker,
                                    [(cfg, t, args.nu) for t in range(cfg.trials)],
                                    chunksize=max(1, cfg.trials // (4 * args.jobs))))
        result = mc_recovery(cfg, nu=args.nu, records=records)
    else:
        result = mc_recovery(cfg, nu=args.nu)
    _echo("mc", **result.aggregate_json_dict()["config"], nu=args.nu,
          jobs=args.jobs, csv=args.csv, json=args.json)
    if args.csv:
        result.write_csv(args.csv)
    if args.json:
        _write_json(result.aggregate_json_dict(), args.json)
    else:
        _write_json(result.aggregate_json_dict(), None)
    return 0


def _load_pair(args):
    d = Dictionary.load(args.dict)
    sig = SparseSignal.load(args.signal)
    return d, sig


def cmd_check(args) -> int:
    if args.kind == "decay":
        d, sig = _load_pair(args)
        f0 = sig.synthesize(d)
        max_iter = args.max_iter if args.max_iter else max(1, args.d - sig.k)
        cfg = GreedyConfig(weakness_t=args.t, max_iterations=max_iter,
                           residual_tolerance=args.tol)
        report = decay_check(f0, d, sig, cfg, r=args.r, budget_d=args.d)
        _echo("check", kind="decay", dict=args.dict, signal=args.signal,
              r=args.r, d=args.d, t=args.t, max_iter=max_iter, tol=args.tol)
        _write_json(report.to_json_dict(), args.out)
        return 0 if report.holds else 1

    if args.kind == "lebesgue":
        d, sig = _load_pair(args)
        f0 = sig.synthesize(d)
        eps = 0.0
        if args.noise > 0.0:
            if args.noise_seed is None:
                raise ValueError("--noise needs --noise-seed")
            rng = np.random.Generator(np.random.PCG64(args.noise_seed))
            v = rng.standard_normal(d.space.dim)
            basis = d.atoms[:, sig.support]
            q, _ = np.linalg.qr(basis)
            v -= q @ (q.T @ v)
            v /= lp_norm(v, d.space)
            f0 = f0 + args.noise * v
            eps = args.noise
        cfg = GreedyConfig(weakness_t=args.t, residual_tolerance=args.tol)
        report = lebesgue_check(f0, d, sig, eps, cfg, r=args.r,
                                big_c=args.big_c, budget_d=args.d)
        _echo("check", kind="lebesgue", dict=args.dict, signal=args.signal,
              r=args.r, d=args.d, t=args.t, big_c=args.big_c, noise=args.noise,
              noise_seed=args.noise_seed, bound=args.bound)
        _write_json(report.to_json_dict(), args.out)
        if eps == 0.0:
            return 0 if report.exact_recovery else 1
        if args.bound is not None:
            return 0 if report.ratio <= args.bound else 1
        return 0

    if args.kind == "qoga-dnorm":
        d, sig = _load_pair(args)
        f0 = sig.synthesize(d)
        report = qoga_dnorm_check(f0, d, args.steps)
        _echo("check", kind="qoga-dnorm", dict=args.dict, signal=args.signal,
              steps=args.steps)
        _write_json(report.to_json_dict(), args.out)
        if report.skipped:
            return 0
        return 0 if report.passed else 1

    # omp-budget: exploratory, no hard assertion
    d, sig = _load_pair(args)
    report = omp_budget_diagnostic(d, sig, c_grid=tuple(args.c_grid))
    _echo("check", kind="omp-budget", dict=args.dict, signal=args.signal,
          c_grid=args.c_grid)
    out = report.to_json_dict()
    if math.isinf(out["minimal_c"]):
        out["minimal_c"] = "inf"
    _write_json(out, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="greedylp")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dict", help="generate a dictionary file")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--law", choices=["gaussian", "identity"], default="gaussian")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_dict)

    p = sub.add_parser("gen-signal", help="generate a sparse signal file")
    p.add_argument("--n", type=int, required=True, help="number of atoms indexed")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--law", choices=["uniform", "rademacher", "floor"],
                   default="uniform")
    p.add_argument("--eps1", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_signal)

    p = sub.add_parser("certify", help="measure dictionary/signal constants")
    p.add_argument("--dict", required=True)
    p.add_argument("--signal", default=None)
    p.add_argument("--rip-s", dest="rip_s", type=int, nargs="*", default=[])
    p.add_argument("--method", choices=["exhaustive", "sampled"],
                   default="exhaustive")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--a1-r", dest="a1_r", type=float, default=None)
    p.add_argument("--a2-d", dest="a2_d", type=int, default=None)
    p.add_argument("--budget", type=int, default=None,
                   help="override the per-sweep combinatorial budgets")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("run", help="run one pursuit and write its trace")
    p.add_argument("--alg", choices=sorted(_ALGORITHMS), required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--p", type=float, default=None,
                   help="sanity check against the dictionary's exponent")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("mc", help="Monte Carlo recovery experiment")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--law", choices=list(experiments.COEFFICIENT_LAWS),
                   default="uniform_pm1")
    p.add_argument("--eps1", type=float, default=None)
    p.add_argument("--dict", default=None, help="use a fixed dictionary file")
    p.add_argument("--nu", type=float, default=0.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--csv", default=None)
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("check", help="single-instance guarantee checks")
    p.add_argument("kind", choices=["decay", "lebesgue", "qoga-dnorm", "omp-budget"])
    p.add_argument("--dict", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--d", type=int, default=12, help="certification depth")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--big-c", dest="big_c", type=float, default=3.0)
    p.add_argument("--bound", type=float, default=None)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--noise-seed", dest="noise_seed", type=int, default=None)
    p.add_argument("--steps", type=int, default=1, help="qoga-dnorm step count")
    p.add_argument("--c-grid", dest="c_grid", type=float, nargs="*",
                   default=[0.0, 0.25, 0.5, 1.0, 2.0, 4.0])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_check)
    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, BudgetExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
