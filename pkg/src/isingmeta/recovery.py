"""Two-step support recovery: pooled union estimation, then restricted
novel-task estimation, plus penalty schedules and scoring.

Step one runs the pooled per-node regressions over all auxiliary tasks
and reads off a signed edge set.  Step two re-fits the novel task with
each node's coefficients restricted to its neighborhood in that edge
set.  Natural logarithms are used in both penalty schedules; the
constant factor beta absorbs any base change.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import IsingParameter
from .solver import (
    DEFAULT_CONFIG,
    SolverConfig,
    SolverReport,
    solve_node_l1,
    solve_node_restricted,
)

RECONCILE_RULES = ("and", "or", "max")


@dataclass(frozen=True)
class SignedEdgeSet:
    """Set of node pairs (s, t), s < t, each carrying a sign in {-1, +1}."""

    p: int
    entries: dict[tuple[int, int], int]

    def __post_init__(self):
        for (s, t), sign in self.entries.items():
            if not 0 <= s < t < self.p:
                raise ValueError(f"pair ({s},{t}) out of range for p={self.p}")
            if sign not in (-1, 1):
                raise ValueError(f"sign of ({s},{t}) must be -1 or +1, got {sign}")

    @classmethod
    def from_parameter(cls, theta: IsingParameter, threshold: float = 0.0) -> "SignedEdgeSet":
        entries = {}
        for s, t in theta.support():
            w = theta.weight(s, t)
            if abs(w) > threshold:
                entries[(s, t)] = 1 if w > 0 else -1
        return cls(theta.p, entries)

    def pairs(self) -> set[tuple[int, int]]:
        return set(self.entries)

    def neighbors(self, r: int) -> set[int]:
        return {t if s == r else s for (s, t) in self.entries if r in (s, t)}

    def signed_neighbors(self, r: int) -> dict[int, int]:
        return {
            (t if s == r else s): sign
            for (s, t), sign in self.entries.items()
            if r in (s, t)
        }

    def __len__(self) -> int:
        return len(self.entries)

    def to_jsonable(self) -> dict:
        edges = sorted(self.entries.items())
        return {"p": self.p, "edges": [[s, t, sign] for (s, t), sign in edges]}

    @classmethod
    def from_jsonable(cls, doc: dict) -> "SignedEdgeSet":
        return cls(int(doc["p"]), {(int(s), int(t)): int(g) for s, t, g in doc["edges"]})


@dataclass(frozen=True)
class RecoveryResult:
    """Per-node solver reports plus the reconciled signed edge set."""

    p: int
    per_node: tuple[SolverReport, ...]
    edge_set: SignedEdgeSet
    lambda_used: float
    reconcile_rule: str
    min_magnitude: float

    @property
    def all_converged(self) -> bool:
        return all(rep.converged for rep in self.per_node)

    def neighborhoods(self, signed: bool = False) -> list[dict[int, int] | set[int]]:
        """Per-node neighborhood reads at the declaration threshold."""
        out = []
        for rep in self.per_node:
            signed_nb = rep.support_nodes(self.min_magnitude)
            out.append(signed_nb if signed else set(signed_nb))
        return out

    def to_jsonable(self) -> dict:
        return {
            "p": self.p,
            "lambda": self.lambda_used,
            "reconcile": self.reconcile_rule,
            "min_magnitude": self.min_magnitude,
            "all_converged": self.all_converged,
            "edge_set": self.edge_set.to_jsonable(),
            "per_node": [
                {
                    "r": rep.estimate.r,
                    "estimate": [float(v) for v in rep.estimate.values],
                    "kkt_residual": rep.kkt_residual,
                    "iterations": rep.iterations,
                    "converged": rep.converged,
                    "objective": rep.objective,
                }
                for rep in self.per_node
            ],
        }


def save_recovery_json(result: RecoveryResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(result.to_jsonable(), fh, indent=2)
        fh.write("\n")


def load_edge_set_json(path) -> SignedEdgeSet:
    """Read a SignedEdgeSet from its own JSON or from a RecoveryResult JSON."""
    with open(path) as fh:
        doc = json.load(fh)
    if "edge_set" in doc:
        doc = doc["edge_set"]
    return SignedEdgeSet.from_jsonable(doc)


def lambda_pooled(p: int, n: int, k: int, beta: float = 1.0) -> float:
    """Pooled-regression penalty schedule beta * sqrt(ln p / (n k))."""
    if p < 2:
        raise ValueError(f"need p >= 2, got {p}")
    if n < 1 or k < 1:
        raise ValueError(f"need n >= 1 and k >= 1, got n={n}, k={k}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return beta * math.sqrt(math.log(p) / (n * k))


def lambda_novel(d: int, n_novel: int, beta: float = 1.0) -> float:
    """Restricted-regression penalty schedule beta * sqrt(ln d / n).

    Rejects d < 2, where ln d degenerates to zero or below.
    """
    if d < 2:
        raise ValueError(f"need d >= 2 (ln d must be positive), got {d}")
    if n_novel < 1:
        raise ValueError(f"need n >= 1, got {n_novel}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return beta * math.sqrt(math.log(d) / n_novel)


def edge_inclusion_threshold(c_min: float, d: int, lam: float) -> float:
    """Coupling magnitude (10 / c_min) sqrt(d) lam above which an edge is
    guaranteed to be picked up when the recovery conditions hold."""
    if c_min <= 0:
        raise ValueError(f"c_min must be positive, got {c_min}")
    return (10.0 / c_min) * math.sqrt(d) * lam


def _reconcile_edges(
    reports: list[SolverReport], p: int, rule: str, threshold: float
) -> SignedEdgeSet:
    """Combine the two endpoint regressions of every pair into one edge set.

    ``and`` keeps a pair only when both endpoint regressions select it;
    ``or`` when either does; ``max`` reads presence and sign from the
    larger-magnitude coefficient (identical membership to ``or`` under a
    common threshold).  Signs always come from the larger-magnitude
    endpoint coefficient.
    """
    if rule not in RECONCILE_RULES:
        raise ValueError(f"reconcile rule must be one of {RECONCILE_RULES}, got {rule!r}")
    values = np.zeros((p, p))
    for rep in reports:
        r = rep.estimate.r
        for j, t in enumerate(rep.estimate.covariate_nodes()):
            values[r, t] = rep.estimate.values[j]
    entries = {}
    for s in range(p):
        for t in range(s + 1, p):
            c_st, c_ts = values[s, t], values[t, s]
            sel_s, sel_t = abs(c_st) > threshold, abs(c_ts) > threshold
            if rule == "and":
                keep = sel_s and sel_t
            else:
                keep = sel_s or sel_t
            if keep:
                winner = c_st if abs(c_st) >= abs(c_ts) else c_ts
                entries[(s, t)] = 1 if winner > 0 else -1
    return SignedEdgeSet(p, entries)


def recover_support_union(
    sample_sets: list[np.ndarray],
    lam: float,
    config: SolverConfig | None = None,
    reconcile: str = "max",
    min_magnitude: float | None = None,
) -> RecoveryResult:
    """Estimate the shared edge set by pooled per-node regressions.

    ``min_magnitude`` is the declaration threshold for reading supports
    off the estimates; it defaults to the solver's ``zero_threshold``.
    Non-convergent node solves are kept in the result (flagged) and the
    edge set is still emitted.
    """
    config = config or DEFAULT_CONFIG
    threshold = config.zero_threshold if min_magnitude is None else min_magnitude
    p = np.asarray(sample_sets[0]).shape[1]
    reports = [solve_node_l1(r, sample_sets, lam, config) for r in range(p)]
    edges = _reconcile_edges(reports, p, reconcile, threshold)
    return RecoveryResult(p, tuple(reports), edges, lam, reconcile, threshold)


def estimate_novel(
    samples: np.ndarray,
    union: SignedEdgeSet,
    lam: float,
    config: SolverConfig | None = None,
    reconcile: str = "max",
    min_magnitude: float | None = None,
) -> RecoveryResult:
    """Fit the novel task with supports restricted to the union edge set."""
    config = config or DEFAULT_CONFIG
    threshold = config.zero_threshold if min_magnitude is None else min_magnitude
    x = np.asarray(samples)
    if x.ndim != 2 or x.shape[1] != union.p:
        raise ValueError(
            f"sample matrix has shape {x.shape}, expected (n, {union.p})"
        )
    p = union.p
    reports = [
        solve_node_restricted(r, x, union.neighbors(r), lam, config) for r in range(p)
    ]
    edges = _reconcile_edges(reports, p, reconcile, threshold)
    return RecoveryResult(p, tuple(reports), edges, lam, reconcile, threshold)


@dataclass(frozen=True)
class ScoreResult:
    precision: float
    recall: float
    f1: float
    exact_match: bool


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall (0 when both are 0)."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score(estimated: SignedEdgeSet, truth: SignedEdgeSet, signed: bool = False) -> ScoreResult:
    """Precision/recall/F1 of an estimated edge set against the truth.

    A pair counts as correct when present in both sets, additionally with
    matching sign when ``signed`` is set.  Empty sets follow the
    convention precision = recall = 1 when the other side is also empty
    (vacuously perfect), and 0/1 respectively otherwise.
    """
    if estimated.p != truth.p:
        raise ValueError(f"node counts differ: {estimated.p} vs {truth.p}")
    if signed:
        correct = sum(
            1
            for pair, sign in estimated.entries.items()
            if truth.entries.get(pair) == sign
        )
    else:
        correct = len(estimated.pairs() & truth.pairs())
    n_est, n_true = len(estimated), len(truth)
    precision = correct / n_est if n_est else (1.0 if n_true == 0 else 0.0)
    recall = correct / n_true if n_true else 1.0
    exact = estimated.entries == truth.entries if signed else estimated.pairs() == truth.pairs()
    return ScoreResult(precision, recall, f1_score(precision, recall), exact)
