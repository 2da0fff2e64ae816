"""Seeded synthetic experiments and external sample ingestion.

The union experiment sweeps the per-task sample budget C: each trial
draws a max-degree-d graph with mixed +/-0.5 couplings, realizes K
masked tasks, Gibbs-samples n = C rows per task, recovers the support
union with the pooled penalty schedule, and succeeds when every node's
unsigned estimated neighborhood equals the truth.  The novel experiment
sweeps C*: a union (ground truth, or re-estimated at C = union_c) gates
a restricted fit of a fresh task with n = ceil(C* d^3 ln d) samples,
judged on signed neighborhoods.

Every trial draws its generator stream from (seed, phase, grid value,
trial index), so results are byte-reproducible and trials are
order-independent.  Wall times are kept out of results.csv so repeated
runs produce identical bytes; they appear in the JSON summary and the
optional per-trial dumps.
"""

import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, fields

import numpy as np

from .generate import (
    MIXED_COUPLING,
    BernoulliMaskDelta,
    DeltaSpec,
    NoDelta,
    mixed_couplings,
    random_max_degree_graph,
    sample_task_family,
)
from .gibbs import gibbs_sample
from .recovery import (
    RECONCILE_RULES,
    RecoveryResult,
    SignedEdgeSet,
    estimate_novel,
    lambda_novel,
    lambda_pooled,
    recover_support_union,
    save_recovery_json,
    score,
)
from .solver import SolverConfig

_UNION_PHASE = 1
_NOVEL_PHASE = 2


class ConfigError(ValueError):
    """Invalid experiment configuration (bad key, value, or combination)."""


class ParseError(ValueError):
    """Malformed input data; message names the file and line."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for one experiment; one config file describes one experiment.

    ``k`` defaults to ceil(d^3 ln p); novel-task sample counts expand as
    ceil(c_star * d^3 ln d).  ``support_threshold`` is the coefficient
    magnitude above which an edge is declared present when judging
    success, half the generated coupling magnitude by default.
    """

    p: int
    d: int
    seed: int
    k: int | None = None
    c_values: tuple[int, ...] = (5, 25, 50, 100, 200)
    c_star_values: tuple[int, ...] = (5, 50, 200)
    union_c: int = 50
    union_source: str = "estimated"
    trials: int = 100
    beta_aux: float = 1.0
    beta_novel: float = 1.0
    gibbs_sweeps: int = 10
    reconcile: str = "max"
    delta_kind: str = "bernoulli-mask"
    delta_q: float = 0.9
    support_threshold: float = MIXED_COUPLING / 2
    signed_success: bool = False  # union-experiment success judged with signs

    def __post_init__(self):
        if self.p < 2 or not 0 <= self.d <= self.p - 1:
            raise ConfigError(f"invalid sizes p={self.p}, d={self.d}")
        if self.trials < 1:
            raise ConfigError(f"trials must be positive, got {self.trials}")
        if self.k is not None and self.k < 1:
            raise ConfigError(f"k must be positive, got {self.k}")
        if self.union_c < 1:
            raise ConfigError(f"union_c must be positive, got {self.union_c}")
        if any(c < 1 for c in self.c_values) or any(c < 1 for c in self.c_star_values):
            raise ConfigError("sweep grid values must be positive")
        if self.gibbs_sweeps < 1:
            raise ConfigError(f"gibbs_sweeps must be positive, got {self.gibbs_sweeps}")
        if self.beta_aux <= 0 or self.beta_novel <= 0:
            raise ConfigError("penalty constants must be positive")
        if self.reconcile not in RECONCILE_RULES:
            raise ConfigError(f"reconcile must be one of {RECONCILE_RULES}, got {self.reconcile!r}")
        if self.union_source not in ("truth", "estimated"):
            raise ConfigError(f"union_source must be 'truth' or 'estimated', got {self.union_source!r}")
        if self.delta_kind not in ("none", "bernoulli-mask"):
            raise ConfigError(f"delta_kind must be 'none' or 'bernoulli-mask', got {self.delta_kind!r}")
        if not 0.0 <= self.delta_q <= 1.0:
            raise ConfigError(f"delta_q must be in [0,1], got {self.delta_q}")
        if self.support_threshold < 0:
            raise ConfigError(f"support_threshold must be nonnegative, got {self.support_threshold}")

    @property
    def resolved_k(self) -> int:
        if self.k is not None:
            return self.k
        return math.ceil(self.d**3 * math.log(self.p))

    def n_novel(self, c_star: int) -> int:
        return math.ceil(c_star * self.d**3 * math.log(self.d))

    def delta_spec(self) -> DeltaSpec:
        if self.delta_kind == "none":
            return NoDelta()
        return BernoulliMaskDelta(self.delta_q)

    def canonical_items(self) -> list[tuple[str, str]]:
        out = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                text = ",".join(str(v) for v in value)
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            out.append((f.name, text))
        return sorted(out)

    def sha256(self) -> str:
        blob = "\n".join(f"{k}={v}" for k, v in self.canonical_items())
        return hashlib.sha256(blob.encode()).hexdigest()


_INT_KEYS = {"p", "d", "seed", "k", "union_c", "trials", "gibbs_sweeps"}
_FLOAT_KEYS = {"beta_aux", "beta_novel", "delta_q", "support_threshold"}
_LIST_KEYS = {"c_values", "c_star_values"}
_STR_KEYS = {"union_source", "reconcile", "delta_kind"}
_BOOL_KEYS = {"signed_success"}


def config_from_mapping(pairs: dict[str, str]) -> ExperimentConfig:
    """Build a config from string key/value pairs (e.g. a parsed file)."""
    kwargs = {}
    for key, raw in pairs.items():
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(raw)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(raw)
            elif key in _LIST_KEYS:
                kwargs[key] = tuple(int(v.strip()) for v in str(raw).split(",") if v.strip())
            elif key in _STR_KEYS:
                kwargs[key] = str(raw).strip()
            elif key in _BOOL_KEYS:
                text = str(raw).strip().lower()
                if text not in ("true", "false", "1", "0"):
                    raise ConfigError(f"bad boolean for {key!r}: {raw!r}")
                kwargs[key] = text in ("true", "1")
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    missing = {"p", "d", "seed"} - set(kwargs)
    if missing:
        raise ConfigError(f"missing required config keys: {sorted(missing)}")
    return ExperimentConfig(**kwargs)


def parse_config_file(path) -> ExperimentConfig:
    """Read a ``key = value`` config file (one experiment per file)."""
    pairs: dict[str, str] = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
            key, _, value = text.partition("=")
            pairs[key.strip()] = value.strip()
    return config_from_mapping(pairs)


@dataclass(frozen=True)
class ResultRow:
    """One trial's outcome; ``grid_value`` is C (union) or C* (novel)."""

    grid_value: int
    trial: int
    n: int
    k: int
    lam: float
    success: bool
    precision: float
    recall: float
    f1: float
    solver_converged: bool
    wall_time: float


def _trial_rng(seed: int, phase: int, grid_value: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, phase, grid_value, trial])


def _draw_common_parameter(config: ExperimentConfig, rng: np.random.Generator):
    edges = random_max_degree_graph(config.p, config.d, rng)
    return mixed_couplings(config.p, edges, rng)


def _unsigned_truth(theta) -> list[set[int]]:
    return [set(theta.neighbors(r)) for r in range(theta.p)]


def _signed_truth(theta) -> list[dict[int, int]]:
    out = []
    for r in range(theta.p):
        out.append({t: (1 if theta.weight(r, t) > 0 else -1) for t in theta.neighbors(r)})
    return out


def _union_trial(
    config: ExperimentConfig, c: int, trial: int, solver_config: SolverConfig
) -> tuple[ResultRow, RecoveryResult]:
    start = time.perf_counter()
    rng = _trial_rng(config.seed, _UNION_PHASE, c, trial)
    theta_bar = _draw_common_parameter(config, rng)
    family = sample_task_family(theta_bar, config.delta_spec(), config.resolved_k, rng)
    sample_sets = [
        gibbs_sample(task, c, config.gibbs_sweeps, rng) for task in family.task_params
    ]
    lam = lambda_pooled(config.p, c, config.resolved_k, config.beta_aux)
    result = recover_support_union(
        sample_sets,
        lam,
        solver_config,
        reconcile=config.reconcile,
        min_magnitude=config.support_threshold,
    )
    if config.signed_success:
        matched = result.neighborhoods(signed=True) == _signed_truth(theta_bar)
    else:
        matched = result.neighborhoods() == _unsigned_truth(theta_bar)
    success = result.all_converged and matched
    sc = score(
        result.edge_set,
        SignedEdgeSet.from_parameter(theta_bar),
        signed=config.signed_success,
    )
    row = ResultRow(
        c,
        trial,
        c,
        config.resolved_k,
        lam,
        success,
        sc.precision,
        sc.recall,
        sc.f1,
        result.all_converged,
        time.perf_counter() - start,
    )
    return row, result


def _novel_trial(
    config: ExperimentConfig, c_star: int, trial: int, solver_config: SolverConfig
) -> tuple[ResultRow, RecoveryResult]:
    start = time.perf_counter()
    rng = _trial_rng(config.seed, _NOVEL_PHASE, c_star, trial)
    theta_bar = _draw_common_parameter(config, rng)
    k = config.resolved_k
    family = sample_task_family(theta_bar, config.delta_spec(), k + 1, rng)
    novel_param = family.task_params[-1]

    union_converged = True
    if config.union_source == "truth":
        union = SignedEdgeSet.from_parameter(theta_bar)
    else:
        aux_sets = [
            gibbs_sample(task, config.union_c, config.gibbs_sweeps, rng)
            for task in family.task_params[:k]
        ]
        lam_union = lambda_pooled(config.p, config.union_c, k, config.beta_aux)
        union_result = recover_support_union(
            aux_sets,
            lam_union,
            solver_config,
            reconcile=config.reconcile,
            min_magnitude=config.support_threshold,
        )
        union = union_result.edge_set
        union_converged = union_result.all_converged

    n_novel = config.n_novel(c_star)
    lam = lambda_novel(config.d, n_novel, config.beta_novel)
    samples = gibbs_sample(novel_param, n_novel, config.gibbs_sweeps, rng)
    result = estimate_novel(
        samples,
        union,
        lam,
        solver_config,
        reconcile=config.reconcile,
        min_magnitude=config.support_threshold,
    )
    converged = union_converged and result.all_converged
    success = converged and result.neighborhoods(signed=True) == _signed_truth(novel_param)
    sc = score(result.edge_set, SignedEdgeSet.from_parameter(novel_param), signed=True)
    row = ResultRow(
        c_star,
        trial,
        n_novel,
        k,
        lam,
        success,
        sc.precision,
        sc.recall,
        sc.f1,
        converged,
        time.perf_counter() - start,
    )
    return row, result


_CSV_COLUMNS = (
    "trial",
    "n",
    "k",
    "lambda",
    "success",
    "precision",
    "recall",
    "f1",
    "solver_converged",
)


def _rows_to_csv(rows: list[ResultRow], grid_name: str) -> str:
    lines = [",".join((grid_name,) + _CSV_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(
                [
                    str(row.grid_value),
                    str(row.trial),
                    str(row.n),
                    str(row.k),
                    repr(row.lam),
                    str(int(row.success)),
                    repr(row.precision),
                    repr(row.recall),
                    repr(row.f1),
                    str(int(row.solver_converged)),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _summarize(
    rows: list[ResultRow], config: ExperimentConfig, experiment: str, grid_name: str
) -> dict:
    by_value: dict[int, list[ResultRow]] = {}
    for row in rows:
        by_value.setdefault(row.grid_value, []).append(row)
    success_rate = {
        str(v): sum(r.success for r in group) / len(group)
        for v, group in sorted(by_value.items())
    }
    mean_f1 = {
        str(v): sum(r.f1 for r in group) / len(group) for v, group in sorted(by_value.items())
    }
    return {
        "experiment": experiment,
        "grid": grid_name,
        "config": dict(config.canonical_items()),
        "config_sha256": config.sha256(),
        "trials_per_point": config.trials,
        "success_rate": success_rate,
        "mean_f1": mean_f1,
        "solver_failures": sum(not r.solver_converged for r in rows),
        "wall_time_seconds": sum(r.wall_time for r in rows),
    }


def _write_outputs(
    rows: list[ResultRow],
    results: list[RecoveryResult],
    summary: dict,
    grid_name: str,
    out_dir,
    dump: bool,
) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "results.csv"), "w") as fh:
        fh.write(_rows_to_csv(rows, grid_name))
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if dump:
        for row, result in zip(rows, results):
            name = f"recovery_{grid_name}{row.grid_value}_trial{row.trial:04d}.json"
            save_recovery_json(result, os.path.join(out_dir, name))


def run_union_experiment(
    config: ExperimentConfig,
    out_dir=None,
    dump: bool = False,
    solver_config: SolverConfig | None = None,
) -> tuple[list[ResultRow], dict]:
    """Sweep C and measure the union-recovery success rate per grid point."""
    solver_config = solver_config or SolverConfig()
    rows: list[ResultRow] = []
    results: list[RecoveryResult] = []
    for c in config.c_values:
        for trial in range(config.trials):
            row, result = _union_trial(config, c, trial, solver_config)
            rows.append(row)
            results.append(result)
    summary = _summarize(rows, config, "union", "c")
    if out_dir is not None:
        _write_outputs(rows, results, summary, "c", out_dir, dump)
    return rows, summary


def run_novel_experiment(
    config: ExperimentConfig,
    out_dir=None,
    dump: bool = False,
    solver_config: SolverConfig | None = None,
) -> tuple[list[ResultRow], dict]:
    """Sweep C* and measure the signed novel-task success rate per grid point."""
    solver_config = solver_config or SolverConfig()
    rows: list[ResultRow] = []
    results: list[RecoveryResult] = []
    for c_star in config.c_star_values:
        for trial in range(config.trials):
            row, result = _novel_trial(config, c_star, trial, solver_config)
            rows.append(row)
            results.append(result)
    summary = _summarize(rows, config, "novel", "c_star")
    if out_dir is not None:
        _write_outputs(rows, results, summary, "c_star", out_dir, dump)
    return rows, summary


def _parse_sample_line(
    tokens: list[str], path, lineno: int, binary01: bool
) -> list[float]:
    row = []
    for tok in tokens:
        try:
            value = float(tok)
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-numeric entry {tok!r}") from None
        if binary01:
            if value not in (0.0, 1.0):
                raise ParseError(
                    f"{path}:{lineno}: entry {tok!r} not in {{0,1}} (binary01 mode)"
                )
            value = 2.0 * value - 1.0
        elif value not in (-1.0, 1.0):
            raise ParseError(f"{path}:{lineno}: entry {tok!r} not in {{-1,+1}}")
        row.append(value)
    return row


def read_samples_csv(path, binary01: bool = False) -> np.ndarray:
    """Read one CSV of spins; a leading non-numeric row is treated as a header."""
    rows: list[list[float]] = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            tokens = [t.strip() for t in text.split(",")]
            if lineno == 1:
                try:
                    float(tokens[0])
                except ValueError:
                    continue  # header row
            row = _parse_sample_line(tokens, path, lineno, binary01)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(
                    f"{path}:{lineno}: ragged row of {len(row)} entries, expected {width}"
                )
            rows.append(row)
    if not rows:
        raise ParseError(f"{path}: no sample rows found")
    return np.asarray(rows)


def ingest_samples(sources, binary01: bool = False) -> list[np.ndarray]:
    """Load one sample matrix per task from CSV files.

    ``sources`` is either a list of CSV paths or the path of a manifest
    file listing one CSV per line (relative paths resolve against the
    manifest's directory).  All matrices must share the same width.
    """
    if isinstance(sources, (str, os.PathLike)):
        base = os.path.dirname(os.fspath(sources))
        with open(sources) as fh:
            paths = [
                os.path.join(base, ln.strip())
                for ln in fh
                if ln.strip() and not ln.strip().startswith("#")
            ]
        if not paths:
            raise ParseError(f"{sources}: empty manifest")
    else:
        paths = list(sources)
        if not paths:
            raise ParseError("no sample files given")
    matrices = [read_samples_csv(path, binary01) for path in paths]
    width = matrices[0].shape[1]
    for path, m in zip(paths, matrices):
        if m.shape[1] != width:
            raise ParseError(
                f"{path}: width {m.shape[1]} does not match first file's width {width}"
            )
    return matrices
