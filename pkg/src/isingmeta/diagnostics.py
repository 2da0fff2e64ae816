"""Fisher-information diagnostics for the recovery conditions.

For a reference node r, the Fisher matrix is the eta-weighted second
moment of the covariates,

    Q = E[ eta(X) X_{-r} X_{-r}^T ],    eta(x) = 1 / cosh^2(local field),

with eta evaluated at the shared parameter.  The module computes Q both
empirically from samples and exactly by enumeration under a task family
(finite-support perturbations, or a Bernoulli mask expanded to its atom
list), together with the eigenvalue bounds and the incoherence norm that
govern support recovery, and the pooled-score bias whose vanishing makes
the task family well-centered around the shared parameter.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    IsingParameter,
    exact_joint_distribution,
    spin_configurations,
    validate_spins,
    variance_weights,
)
from .generate import BernoulliMaskDelta, DeltaSpec, FiniteSupportDelta, NoDelta

_POPULATION_MAX_P = 14


class SingularMatrixError(ValueError):
    """Raised when Q_SS is numerically singular; carries the condition estimate."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class BracketingError(ValueError):
    """Raised when a root bracket does not change sign."""


@dataclass(frozen=True)
class FisherReport:
    """Fisher matrix for one node plus the derived condition numbers.

    ``s_nodes`` are the neighbor node ids used for the S/S^c split;
    ``c_min`` is the smallest eigenvalue of Q_SS (infinite when S is
    empty), ``d_max`` the largest eigenvalue of the covariate second
    moment, and ``incoherence`` the max row sum of |Q_{S^c S} Q_SS^{-1}|.
    """

    r: int
    q: np.ndarray = field(repr=False)
    second_moment: np.ndarray = field(repr=False)
    s_nodes: tuple[int, ...]
    c_min: float
    d_max: float
    incoherence: float
    source: str

    @property
    def p(self) -> int:
        return self.q.shape[0] + 1

    def covariate_positions(self, nodes) -> list[int]:
        return [t if t < self.r else t - 1 for t in nodes]

    def to_jsonable(self) -> dict:
        return {
            "r": self.r,
            "source": self.source,
            "s_nodes": list(self.s_nodes),
            "c_min": self.c_min,
            "d_max": self.d_max,
            "incoherence": self.incoherence,
            "q": [[float(v) for v in row] for row in self.q],
            "second_moment": [[float(v) for v in row] for row in self.second_moment],
        }


def save_fisher_json(report: FisherReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_jsonable(), fh, indent=2)
        fh.write("\n")


def _certified_eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition with an explicit residual certificate."""
    vals, vecs = np.linalg.eigh(m)
    residual = np.abs(m @ vecs - vecs * vals).max()
    scale = max(1.0, float(np.abs(m).max()))
    if residual > 1e-8 * scale:
        raise ArithmeticError(f"eigendecomposition residual {residual:.2e} too large")
    return vals, vecs


def _check_q(q: np.ndarray) -> np.ndarray:
    if np.abs(q - q.T).max() > 1e-10:
        raise ArithmeticError("Fisher matrix lost symmetry")
    vals = _certified_eigh(q)[0]
    if vals.min() < -1e-10:
        raise ArithmeticError(f"Fisher matrix has eigenvalue {vals.min():.2e} < 0")
    return q


def _build_report(
    r: int,
    q: np.ndarray,
    second_moment: np.ndarray,
    s_nodes: tuple[int, ...],
    source: str,
) -> FisherReport:
    _check_q(q)
    report = FisherReport(r, q, second_moment, s_nodes, math.nan, math.nan, math.nan, source)
    c_min, d_max = dependency_check(report)
    try:
        incoh = incoherence_check(report)
    except SingularMatrixError:
        incoh = math.inf  # recorded as degenerate; the explicit check raises
    return FisherReport(r, q, second_moment, s_nodes, c_min, d_max, incoh, source)


def sample_fisher(
    theta_eval: IsingParameter,
    sample_sets: list[np.ndarray],
    r: int,
    support_nodes: list[int] | None = None,
) -> FisherReport:
    """Empirical Fisher matrix: the eta-weighted covariate second moment,
    averaged with equal task weights.

    Equals the analytic Hessian of the pooled node loss at ``theta_eval``.
    ``support_nodes`` overrides the S split (default: neighbors of r in
    ``theta_eval``).
    """
    p = theta_eval.p
    if not 0 <= r < p:
        raise ValueError(f"node {r} out of range for p={p}")
    if not sample_sets:
        raise ValueError("need at least one sample set")
    q = np.zeros((p - 1, p - 1))
    m2 = np.zeros((p - 1, p - 1))
    for x in sample_sets:
        x = validate_spins(x, p)
        eta = variance_weights(theta_eval, r, x)
        x_nr = np.delete(x, r, axis=1)
        q += (x_nr * eta[:, None]).T @ x_nr / x.shape[0]
        m2 += x_nr.T @ x_nr / x.shape[0]
    q /= len(sample_sets)
    m2 /= len(sample_sets)
    q = 0.5 * (q + q.T)
    m2 = 0.5 * (m2 + m2.T)
    s_nodes = tuple(support_nodes) if support_nodes is not None else tuple(theta_eval.neighbors(r))
    return _build_report(r, q, m2, s_nodes, "sample")


def _delta_atoms(theta_bar: IsingParameter, delta_spec: DeltaSpec) -> list[tuple[np.ndarray, float]]:
    if isinstance(delta_spec, (NoDelta, FiniteSupportDelta)):
        delta_spec.validate(theta_bar)
        return delta_spec.atoms(theta_bar)
    if isinstance(delta_spec, BernoulliMaskDelta):
        return delta_spec.atoms(theta_bar)
    raise ValueError(
        f"population quantities need an enumerable perturbation law, got {type(delta_spec).__name__}"
    )


def population_fisher(
    theta_bar: IsingParameter,
    delta_spec: DeltaSpec,
    r: int,
    support_nodes: list[int] | None = None,
) -> FisherReport:
    """Exact Fisher matrix by enumeration over the task family.

    Averages, over the perturbation atoms, the exact expectation under
    each task model of eta(X; theta_bar) X_{-r} X_{-r}^T.  Requires
    p <= 14 and an enumerable perturbation law.
    """
    p = theta_bar.p
    if p > _POPULATION_MAX_P:
        raise ValueError(f"population enumeration capped at p <= {_POPULATION_MAX_P}, got {p}")
    if not 0 <= r < p:
        raise ValueError(f"node {r} out of range for p={p}")
    configs = spin_configurations(p)
    x_nr = np.delete(configs, r, axis=1)
    eta_bar = variance_weights(theta_bar, r, configs)
    q = np.zeros((p - 1, p - 1))
    m2 = np.zeros((p - 1, p - 1))
    for delta, prob_atom in _delta_atoms(theta_bar, delta_spec):
        task = IsingParameter(p, theta_bar.weights + delta)
        probs = exact_joint_distribution(task)
        q += prob_atom * ((x_nr * (probs * eta_bar)[:, None]).T @ x_nr)
        m2 += prob_atom * ((x_nr * probs[:, None]).T @ x_nr)
    q = 0.5 * (q + q.T)
    m2 = 0.5 * (m2 + m2.T)
    s_nodes = tuple(support_nodes) if support_nodes is not None else tuple(theta_bar.neighbors(r))
    return _build_report(r, q, m2, s_nodes, "population")


def dependency_check(report: FisherReport) -> tuple[float, float]:
    """Smallest eigenvalue of Q_SS and largest eigenvalue of the second moment.

    C_min is +inf by convention when the neighbor set is empty (the bound
    is vacuous there).
    """
    s_pos = report.covariate_positions(report.s_nodes)
    if s_pos:
        q_ss = report.q[np.ix_(s_pos, s_pos)]
        c_min = float(_certified_eigh(q_ss)[0].min())
    else:
        c_min = math.inf
    d_max = float(_certified_eigh(report.second_moment)[0].max())
    return c_min, d_max


def incoherence_check(report: FisherReport) -> float:
    """Max absolute row sum of Q_{S^c S} (Q_SS)^{-1}.

    Zero when S^c is empty; raises :class:`SingularMatrixError` when Q_SS
    is numerically singular.
    """
    s_pos = report.covariate_positions(report.s_nodes)
    sc_pos = [j for j in range(report.q.shape[0]) if j not in s_pos]
    if not sc_pos or not s_pos:
        return 0.0
    q_ss = report.q[np.ix_(s_pos, s_pos)]
    vals = _certified_eigh(q_ss)[0]
    if vals.min() <= 0 or vals.max() / vals.min() > 1e12:
        cond = math.inf if vals.min() <= 0 else float(vals.max() / vals.min())
        raise SingularMatrixError(
            f"Q_SS is numerically singular (condition estimate {cond:.3e})", cond
        )
    q_cs = report.q[np.ix_(sc_pos, s_pos)]
    m = q_cs @ np.linalg.inv(q_ss)
    return float(np.abs(m).sum(axis=1).max())


def pooled_score_bias(
    theta_bar: IsingParameter, delta_spec: DeltaSpec, r: int
) -> np.ndarray:
    """Expected pooled-loss gradient at the shared parameter, exactly.

    Coordinate u is the atom-probability average over task models of

        E_task[ x_u ( tanh(field_bar(x)) - tanh(field_task(x)) ) ],

    the bias of the pooled estimating equation when every task is scored
    at theta_bar instead of its own parameter.  Vanishes identically when
    the perturbation is degenerate at zero.
    """
    p = theta_bar.p
    if p > _POPULATION_MAX_P:
        raise ValueError(f"population enumeration capped at p <= {_POPULATION_MAX_P}, got {p}")
    if not 0 <= r < p:
        raise ValueError(f"node {r} out of range for p={p}")
    configs = spin_configurations(p)
    others = [t for t in range(p) if t != r]
    field_bar = configs @ theta_bar.to_matrix()[:, r]
    out = np.zeros(p - 1)
    for delta, prob_atom in _delta_atoms(theta_bar, delta_spec):
        task = IsingParameter(p, theta_bar.weights + delta)
        probs = exact_joint_distribution(task)
        field_task = configs @ task.to_matrix()[:, r]
        gap = np.tanh(field_bar) - np.tanh(field_task)
        out += prob_atom * ((configs[:, others] * (probs * gap)[:, None]).sum(axis=0))
    return out


def pooled_score_bias_norm(
    theta_bar: IsingParameter, delta_spec: DeltaSpec, r: int
) -> float:
    """Max-norm of :func:`pooled_score_bias`."""
    return float(np.abs(pooled_score_bias(theta_bar, delta_spec, r)).max())


def triangle_two_edge_family(
    a: float, base: float = 1.0
) -> tuple[IsingParameter, FiniteSupportDelta]:
    """Three-node family: a shared triangle of weight ``base`` whose tasks
    each drop one edge and set the remaining two to ``a``.

    The three atoms (one per dropped edge) have equal probability 1/3.
    """
    theta_bar = IsingParameter(3, np.full(3, float(base)))
    atoms = []
    for dropped in range(3):
        delta = np.full(3, a - base)
        delta[dropped] = -base
        atoms.append(delta)
    return theta_bar, FiniteSupportDelta(tuple(atoms), (1 / 3, 1 / 3, 1 / 3))


def find_zero_bias_coupling(
    family: Callable[[float], tuple[IsingParameter, DeltaSpec]],
    bracket: tuple[float, float],
    r: int,
    coord: int = 0,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> float:
    """Bisect for the coupling value where the pooled-score bias vanishes.

    ``family`` maps a coupling value to (theta_bar, delta_spec); the
    search runs on the signed ``coord`` entry of the bias vector and
    stops once its magnitude drops to ``tol``.  Raises
    :class:`BracketingError` when the bracket endpoints share a sign.
    """

    def signed(a: float) -> float:
        theta_bar, spec = family(a)
        return float(pooled_score_bias(theta_bar, spec, r)[coord])

    lo, hi = float(bracket[0]), float(bracket[1])
    f_lo, f_hi = signed(lo), signed(hi)
    if abs(f_lo) <= tol:
        return lo
    if abs(f_hi) <= tol:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise BracketingError(
            f"no sign change on [{lo}, {hi}]: f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g}"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = signed(mid)
        if abs(f_mid) <= tol:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    raise ArithmeticError(f"bisection did not reach |bias| <= {tol} in {max_iter} steps")
