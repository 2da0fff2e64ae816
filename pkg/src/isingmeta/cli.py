"""Batch command-line front end.

Subcommands: generate, sample, recover-union, estimate-novel, diagnose,
experiment-union, experiment-novel, score.  Exit codes: 0 on success, 1
for configuration errors (bad flags, bad config file, bad inputs), 2 for
runtime failures or an exceeded solver-failure budget.
"""

import argparse
import json
import sys

import numpy as np

from .core import read_edge_list
from .diagnostics import population_fisher, sample_fisher, save_fisher_json
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ParseError,
    config_from_mapping,
    ingest_samples,
    parse_config_file,
    run_novel_experiment,
    run_union_experiment,
)
from .generate import (
    BernoulliMaskDelta,
    NoDelta,
    load_family,
    mixed_couplings,
    random_max_degree_graph,
    sample_task_family,
    save_family,
)
from .gibbs import gibbs_sample, write_samples_csv
from .recovery import (
    estimate_novel,
    lambda_novel,
    lambda_pooled,
    load_edge_set_json,
    recover_support_union,
    save_recovery_json,
    score,
)
from .solver import SolverConfig


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; those are config errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _parse_delta(text: str):
    if text == "none":
        return NoDelta()
    if text.startswith("bernoulli-mask"):
        _, _, q = text.partition(":")
        return BernoulliMaskDelta(float(q) if q else 0.9)
    raise ConfigError(f"unknown delta spec {text!r} (use 'none' or 'bernoulli-mask:Q')")


def _cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    edges = random_max_degree_graph(args.p, args.d, rng)
    theta_bar = mixed_couplings(args.p, edges, rng, magnitude=args.magnitude)
    spec = _parse_delta(args.delta)
    family = sample_task_family(theta_bar, spec, args.k, rng)
    save_family(family, args.out_dir, extra={"d": args.d, "seed": args.seed})
    print(f"wrote family of {family.k} tasks on {family.p} nodes to {args.out_dir}")
    return 0


def _cmd_sample(args) -> int:
    theta = read_edge_list(args.params, p=args.p)
    rng = np.random.default_rng(args.seed)
    samples = gibbs_sample(theta, args.n, args.sweeps, rng)
    write_samples_csv(samples, args.out, header=args.header)
    print(f"wrote {args.n} samples on {theta.p} nodes to {args.out}")
    return 0


def _load_sets(args):
    if args.manifest:
        return ingest_samples(args.manifest, binary01=args.binary01)
    return ingest_samples(args.samples, binary01=args.binary01)


def _cmd_recover_union(args) -> int:
    sets = _load_sets(args)
    p = sets[0].shape[1]
    k = len(sets)
    if args.lam is not None:
        lam = args.lam
    else:
        n_mean = sum(s.shape[0] for s in sets) // k
        lam = lambda_pooled(p, max(n_mean, 1), k, args.beta)
    result = recover_support_union(
        sets,
        lam,
        SolverConfig(zero_threshold=args.zero_threshold),
        reconcile=args.reconcile,
        min_magnitude=args.min_magnitude,
    )
    save_recovery_json(result, args.out)
    print(
        f"recovered {len(result.edge_set)} edges from {k} tasks "
        f"(lambda={lam:.6g}, converged={result.all_converged}); wrote {args.out}"
    )
    return 0 if result.all_converged else 2


def _cmd_estimate_novel(args) -> int:
    sets = ingest_samples([args.samples], binary01=args.binary01)
    samples = sets[0]
    union = load_edge_set_json(args.union)
    if args.lam is not None:
        lam = args.lam
    elif args.d is None:
        raise ConfigError("give either --lam or --d (for the penalty schedule)")
    else:
        lam = lambda_novel(args.d, samples.shape[0], args.beta)
    result = estimate_novel(
        samples,
        union,
        lam,
        SolverConfig(zero_threshold=args.zero_threshold),
        reconcile=args.reconcile,
        min_magnitude=args.min_magnitude,
    )
    save_recovery_json(result, args.out)
    print(
        f"estimated {len(result.edge_set)} edges inside a union of {len(union)} "
        f"(lambda={lam:.6g}, converged={result.all_converged}); wrote {args.out}"
    )
    return 0 if result.all_converged else 2


def _cmd_diagnose(args) -> int:
    if args.population:
        if not args.family:
            raise ConfigError("population mode needs --family")
        family = load_family(args.family)
        report = population_fisher(family.theta_bar, family.delta_spec, args.node)
    else:
        if not args.params or not (args.samples or args.manifest):
            raise ConfigError("sample mode needs --params and --samples/--manifest")
        theta = read_edge_list(args.params)
        sets = ingest_samples(args.samples if args.samples else args.manifest, binary01=args.binary01)
        report = sample_fisher(theta, sets, args.node)
    save_fisher_json(report, args.out)
    print(
        f"node {args.node}: c_min={report.c_min:.6g}, d_max={report.d_max:.6g}, "
        f"incoherence={report.incoherence:.6g}; wrote {args.out}"
    )
    return 0


def _experiment_config(args) -> ExperimentConfig:
    if args.config:
        config = parse_config_file(args.config)
        if args.seed is not None:
            raise ConfigError("give the seed in the config file or on the flag, not both")
        return config
    if args.seed is None:
        raise ConfigError("--seed is required (or use --config)")
    pairs = {
        "p": args.p,
        "d": args.d,
        "seed": args.seed,
        "trials": args.trials,
        "beta_aux": args.beta_aux,
        "beta_novel": args.beta_novel,
        "gibbs_sweeps": args.gibbs_sweeps,
        "reconcile": args.reconcile,
        "delta_kind": args.delta_kind,
        "delta_q": args.delta_q,
        "union_c": args.union_c,
        "union_source": args.union_source,
        "support_threshold": args.support_threshold,
        "signed_success": args.signed_success,
    }
    if args.k is not None:
        pairs["k"] = args.k
    if args.c_values:
        pairs["c_values"] = args.c_values
    if args.c_star_values:
        pairs["c_star_values"] = args.c_star_values
    return config_from_mapping({k: str(v) for k, v in pairs.items()})


def _run_experiment(args, runner) -> int:
    config = _experiment_config(args)
    rows, summary = runner(config, out_dir=args.out_dir, dump=args.dump)
    for value, rate in summary["success_rate"].items():
        print(f"{summary['grid']}={value}: success rate {rate:.3f}")
    print(f"wrote results.csv and summary.json to {args.out_dir}")
    budget = args.max_solver_failures
    if budget is not None and summary["solver_failures"] > budget:
        print(
            f"solver failure budget exceeded: {summary['solver_failures']} > {budget}",
            file=sys.stderr,
        )
        return 2
    return 0


def _cmd_score(args) -> int:
    estimated = load_edge_set_json(args.estimated)
    truth = load_edge_set_json(args.truth)
    result = score(estimated, truth, signed=args.signed)
    doc = {
        "precision": result.precision,
        "recall": result.recall,
        "f1": result.f1,
        "exact_match": result.exact_match,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _add_io_flags(sub, manifest=True):
    if manifest:
        group = sub.add_mutually_exclusive_group(required=True)
        group.add_argument("--samples", nargs="+", help="sample CSV files, one per task")
        group.add_argument("--manifest", help="manifest file listing sample CSVs")
    sub.add_argument("--binary01", action="store_true", help="map 0/1 input entries to -1/+1")


def _add_experiment_flags(sub):
    sub.add_argument("--config", help="key = value config file (one experiment per file)")
    sub.add_argument("--p", type=int, default=6)
    sub.add_argument("--d", type=int, default=3)
    sub.add_argument("--k", type=int, default=None, help="task count (default ceil(d^3 ln p))")
    sub.add_argument("--seed", type=int, default=None, help="experiment seed (mandatory)")
    sub.add_argument("--trials", type=int, default=100)
    sub.add_argument("--beta-aux", dest="beta_aux", type=float, default=1.0)
    sub.add_argument("--beta-novel", dest="beta_novel", type=float, default=1.0)
    sub.add_argument("--gibbs-sweeps", dest="gibbs_sweeps", type=int, default=10)
    sub.add_argument("--reconcile", choices=("and", "or", "max"), default="max")
    sub.add_argument("--delta-kind", dest="delta_kind", choices=("none", "bernoulli-mask"), default="bernoulli-mask")
    sub.add_argument("--delta-q", dest="delta_q", type=float, default=0.9)
    sub.add_argument("--union-c", dest="union_c", type=int, default=50)
    sub.add_argument("--union-source", dest="union_source", choices=("truth", "estimated"), default="estimated")
    sub.add_argument("--support-threshold", dest="support_threshold", type=float, default=0.25)
    sub.add_argument(
        "--signed", dest="signed_success", action="store_true",
        help="judge union-experiment success on signed neighborhoods",
    )
    sub.add_argument("--c-values", dest="c_values", default=None, help="comma-separated C grid")
    sub.add_argument("--c-star-values", dest="c_star_values", default=None, help="comma-separated C* grid")
    sub.add_argument("--out-dir", required=True)
    sub.add_argument("--dump", action="store_true", help="also dump per-trial recovery JSON")
    sub.add_argument("--max-solver-failures", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isingmeta", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("generate", help="generate a random task family")
    sub.add_argument("--p", type=int, required=True)
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--k", type=int, required=True)
    sub.add_argument("--seed", type=int, required=True)
    sub.add_argument("--delta", default="bernoulli-mask:0.9")
    sub.add_argument("--magnitude", type=float, default=0.5)
    sub.add_argument("--out-dir", required=True)
    sub.set_defaults(func=_cmd_generate)

    sub = subs.add_parser("sample", help="Gibbs-sample a parameter file")
    sub.add_argument("--params", required=True, help="edge-list parameter file")
    sub.add_argument("--p", type=int, default=None)
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--sweeps", type=int, default=10)
    sub.add_argument("--seed", type=int, required=True)
    sub.add_argument("--header", action="store_true")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_sample)

    sub = subs.add_parser("recover-union", help="pooled support-union recovery")
    _add_io_flags(sub)
    sub.add_argument("--lam", type=float, default=None, help="explicit penalty (overrides --beta)")
    sub.add_argument("--beta", type=float, default=1.0)
    sub.add_argument("--reconcile", choices=("and", "or", "max"), default="max")
    sub.add_argument("--zero-threshold", dest="zero_threshold", type=float, default=1e-6)
    sub.add_argument("--min-magnitude", dest="min_magnitude", type=float, default=None)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_recover_union)

    sub = subs.add_parser("estimate-novel", help="support-restricted novel-task fit")
    sub.add_argument("--samples", required=True, help="novel-task sample CSV")
    sub.add_argument("--binary01", action="store_true")
    sub.add_argument("--union", required=True, help="edge-set or recovery JSON")
    sub.add_argument("--d", type=int, default=None, help="degree bound for the penalty schedule")
    sub.add_argument("--lam", type=float, default=None)
    sub.add_argument("--beta", type=float, default=1.0)
    sub.add_argument("--reconcile", choices=("and", "or", "max"), default="max")
    sub.add_argument("--zero-threshold", dest="zero_threshold", type=float, default=1e-6)
    sub.add_argument("--min-magnitude", dest="min_magnitude", type=float, default=None)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_estimate_novel)

    sub = subs.add_parser("diagnose", help="Fisher information report for one node")
    sub.add_argument("--node", type=int, required=True)
    sub.add_argument("--population", action="store_true", help="exact enumeration over a family")
    sub.add_argument("--family", help="family directory (population mode)")
    sub.add_argument("--params", help="edge-list parameter for the evaluation point")
    sub.add_argument("--samples", nargs="+", help="sample CSVs (sample mode)")
    sub.add_argument("--manifest", help="manifest of sample CSVs (sample mode)")
    sub.add_argument("--binary01", action="store_true")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_diagnose)

    sub = subs.add_parser("experiment-union", help="seeded union-recovery sweep")
    _add_experiment_flags(sub)
    sub.set_defaults(func=lambda args: _run_experiment(args, run_union_experiment))

    sub = subs.add_parser("experiment-novel", help="seeded novel-task sweep")
    _add_experiment_flags(sub)
    sub.set_defaults(func=lambda args: _run_experiment(args, run_novel_experiment))

    sub = subs.add_parser("score", help="precision/recall/F1 of an edge set")
    sub.add_argument("--estimated", required=True)
    sub.add_argument("--truth", required=True)
    sub.add_argument("--signed", action="store_true")
    sub.set_defaults(func=_cmd_score)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ConfigError, ParseError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
