"""Exact Ising-model mathematics on +/-1 spins.

The joint distribution over x in {-1,+1}^p is

    P(x) = exp( sum_{s<t} w_st x_s x_t ) / Z,

with one term per unordered node pair and Z the normalizing sum over all
2^p configurations.  This module holds the parameter container, the exact
(enumerated) joint distribution for small p, the per-node conditional
probability, the per-node logistic loss with its analytic gradient, and
the logistic variance weight used by the Fisher diagnostics.

Nodes are 0-indexed throughout the Python API.  The plain-text edge-list
file format is 1-indexed (see :func:`write_edge_list`).
"""

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

# enumerating 2^p configurations is the binding memory/time constraint
MAX_ENUMERATION_NODES = 20
_ENUM_CHUNK = 1 << 16


def pair_count(p: int) -> int:
    """Number of unordered node pairs, p*(p-1)/2."""
    return p * (p - 1) // 2


def pair_index(p: int, s: int, t: int) -> int:
    """Position of pair (s, t), s < t, in the lexicographic pair ordering.

    The ordering is (0,1), (0,2), ..., (0,p-1), (1,2), ... so that a
    weight vector serializes the strict upper triangle row by row.
    """
    if not 0 <= s < t < p:
        raise ValueError(f"pair ({s},{t}) out of range for p={p} (need 0 <= s < t < p)")
    return s * p - s * (s + 1) // 2 + (t - s - 1)


def pair_from_index(p: int, idx: int) -> tuple[int, int]:
    """Inverse of :func:`pair_index`."""
    if not 0 <= idx < pair_count(p):
        raise ValueError(f"pair index {idx} out of range for p={p}")
    s = 0
    row = p - 1
    while idx >= row:
        idx -= row
        s += 1
        row -= 1
    return s, s + 1 + idx


def iter_pairs(p: int) -> Iterator[tuple[int, int]]:
    """Yield all node pairs (s, t), s < t, in index order."""
    for s in range(p):
        for t in range(s + 1, p):
            yield s, t


@dataclass(frozen=True)
class IsingParameter:
    """Symmetric pairwise coupling vector over the p*(p-1)/2 node pairs.

    ``weights[pair_index(p, s, t)]`` is the coupling between nodes s and t.
    Instances are treated as immutable; all weights must be finite.
    """

    p: int
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"need at least 2 nodes, got p={self.p}")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (pair_count(self.p),):
            raise ValueError(
                f"weights must have length p*(p-1)/2 = {pair_count(self.p)}, got shape {w.shape}"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must all be finite")
        object.__setattr__(self, "weights", w)

    @classmethod
    def zeros(cls, p: int) -> "IsingParameter":
        return cls(p, np.zeros(pair_count(p)))

    @classmethod
    def from_edges(cls, p: int, edges: Iterable[tuple[int, int, float]]) -> "IsingParameter":
        """Build from (s, t, weight) triples; unlisted pairs are zero."""
        w = np.zeros(pair_count(p))
        for s, t, val in edges:
            if s > t:
                s, t = t, s
            w[pair_index(p, s, t)] = val
        return cls(p, w)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "IsingParameter":
        """Build from a symmetric coupling matrix (diagonal ignored)."""
        m = np.asarray(m, dtype=np.float64)
        p = m.shape[0]
        if m.shape != (p, p):
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if not np.allclose(m, m.T, atol=1e-12, rtol=0.0):
            raise ValueError("coupling matrix must be symmetric")
        iu = np.triu_indices(p, k=1)
        return cls(p, m[iu].copy())

    def weight(self, s: int, t: int) -> float:
        if s > t:
            s, t = t, s
        return float(self.weights[pair_index(self.p, s, t)])

    def to_matrix(self) -> np.ndarray:
        """Dense symmetric coupling matrix with zero diagonal."""
        m = np.zeros((self.p, self.p))
        iu = np.triu_indices(self.p, k=1)
        m[iu] = self.weights
        return m + m.T

    def support(self) -> list[tuple[int, int]]:
        """Pairs with a nonzero coupling, in index order."""
        nz = np.flatnonzero(self.weights)
        return [pair_from_index(self.p, int(i)) for i in nz]

    def neighbors(self, r: int) -> list[int]:
        """Nodes coupled to r with a nonzero weight, ascending."""
        row = self.to_matrix()[r]
        return [int(t) for t in np.flatnonzero(row)]

    def node_view(self, r: int) -> "NodeView":
        """Couplings of node r to the other nodes, in ascending node order."""
        if not 0 <= r < self.p:
            raise ValueError(f"node {r} out of range for p={self.p}")
        row = self.to_matrix()[r]
        return NodeView(r, np.delete(row, r))

    def __add__(self, other: "IsingParameter") -> "IsingParameter":
        if other.p != self.p:
            raise ValueError(f"node counts differ: {self.p} vs {other.p}")
        return IsingParameter(self.p, self.weights + other.weights)


@dataclass(frozen=True)
class NodeView:
    """Per-node regression parameter: couplings of node r to V \\ {r}.

    ``values[j]`` couples r to the j-th remaining node in ascending order,
    i.e. node j for j < r and node j+1 for j >= r.
    """

    r: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise ValueError(f"values must be a nonempty vector, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must all be finite")
        if not 0 <= self.r <= v.size:
            raise ValueError(f"node {self.r} inconsistent with {v.size} covariates")
        object.__setattr__(self, "values", v)

    @property
    def p(self) -> int:
        return self.values.size + 1

    def covariate_nodes(self) -> list[int]:
        """Node ids of the covariates, ascending (r excluded)."""
        return [j for j in range(self.p) if j != self.r]


def validate_spins(x, p: int | None = None) -> np.ndarray:
    """Validate a +/-1 spin array and return it as float64.

    Accepts a single configuration (1-d) or a sample matrix (2-d, one row
    per sample).  Raises ``ValueError`` on any entry outside {-1, +1}.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim not in (1, 2) or arr.size == 0:
        raise ValueError(f"expected a nonempty 1-d or 2-d spin array, got shape {arr.shape}")
    if not np.all(np.abs(arr) == 1.0):
        bad = arr[np.abs(arr) != 1.0]
        raise ValueError(f"spin entries must be -1 or +1, found {bad.flat[0]!r}")
    if p is not None and arr.shape[-1] != p:
        raise ValueError(f"expected {p} spins per configuration, got {arr.shape[-1]}")
    return arr


def spin_configurations(p: int) -> np.ndarray:
    """All 2^p configurations as a (2^p, p) matrix of +/-1 floats.

    Configuration i has node j at +1 exactly when bit j of i is set, so
    row 0 is all -1 and row 2^p - 1 is all +1.
    """
    if p > MAX_ENUMERATION_NODES:
        raise ValueError(
            f"enumeration over {p} nodes exceeds the cap of {MAX_ENUMERATION_NODES}"
        )
    idx = np.arange(1 << p, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(p)) & 1
    return bits.astype(np.float64) * 2.0 - 1.0


def configuration_index(x: np.ndarray) -> np.ndarray:
    """Row indices of configurations under the :func:`spin_configurations` order."""
    arr = validate_spins(x)
    bits = ((arr + 1.0) / 2.0).astype(np.int64)
    powers = 1 << np.arange(arr.shape[-1], dtype=np.int64)
    return bits @ powers


def exact_joint_distribution(theta: IsingParameter) -> np.ndarray:
    """Exact probability table over all 2^p configurations.

    Enumerates exp(sum_{s<t} w_st x_s x_t) for every configuration and
    normalizes by the enumerated sum; row order follows
    :func:`spin_configurations`.  Requires p <= 20.
    """
    p = theta.p
    if p > MAX_ENUMERATION_NODES:
        raise ValueError(
            f"cannot enumerate 2^{p} configurations (cap is p <= {MAX_ENUMERATION_NODES})"
        )
    m = theta.to_matrix()
    total = 1 << p
    energies = np.empty(total)
    # chunked so the configuration matrix never holds all 2^p rows at once
    for start in range(0, total, _ENUM_CHUNK):
        stop = min(start + _ENUM_CHUNK, total)
        idx = np.arange(start, stop, dtype=np.int64)
        x = (((idx[:, None] >> np.arange(p)) & 1) * 2 - 1).astype(np.float64)
        energies[start:stop] = 0.5 * np.einsum("ij,jk,ik->i", x, m, x)
    energies -= energies.max()
    table = np.exp(energies)
    table /= table.sum()
    return table


def sample_exact(theta: IsingParameter, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. configurations from the enumerated joint (p <= 20)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    probs = exact_joint_distribution(theta)
    idx = rng.choice(probs.size, size=n, p=probs)
    return spin_configurations(theta.p)[idx]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def local_field(theta: IsingParameter, r: int, x: np.ndarray) -> np.ndarray:
    """sum_{t != r} w_rt x_t for one configuration or a batch of rows."""
    arr = validate_spins(x, theta.p)
    col = theta.to_matrix()[:, r]  # zero diagonal, so x_r drops out
    return arr @ col


def conditional_prob(theta: IsingParameter, r: int, x) -> float:
    """P(X_r = x_r | x_{-r}) = sigma(2 x_r sum_{t != r} w_rt x_t)."""
    arr = validate_spins(x, theta.p)
    if arr.ndim != 1:
        raise ValueError("conditional_prob expects a single configuration")
    if not 0 <= r < theta.p:
        raise ValueError(f"node {r} out of range for p={theta.p}")
    omega = float(local_field(theta, r, arr))
    return float(_sigmoid(2.0 * arr[r] * omega))


def _design(view: NodeView, samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a validated sample matrix into (response, covariates) for node r."""
    x = validate_spins(samples, view.p)
    if x.ndim != 2:
        raise ValueError("expected a 2-d sample matrix")
    y = x[:, view.r]
    a = np.delete(x, view.r, axis=1)
    return y, a


def node_loss(view: NodeView, samples: np.ndarray) -> float:
    """Mean negative log conditional likelihood of node r over the samples.

    With omega_i = sum_{t != r} w_rt x_it, each term is
    -log sigma(2 x_ir omega_i) = log(1 + exp(-2 x_ir omega_i)).
    Zero couplings give exactly log 2.
    """
    y, a = _design(view, samples)
    z = 2.0 * y * (a @ view.values)
    return float(np.mean(np.logaddexp(0.0, -z)))


def node_loss_gradient(view: NodeView, samples: np.ndarray) -> np.ndarray:
    """Analytic gradient of :func:`node_loss`.

    Coordinate u is -(1/n) sum_i x_iu (x_ir - tanh(omega_i)); every
    per-sample term has magnitude at most 2, so the max-norm never
    exceeds 2.
    """
    y, a = _design(view, samples)
    omega = a @ view.values
    return -(a.T @ (y - np.tanh(omega))) / y.size


def variance_weight(u, theta: IsingParameter, r: int) -> float:
    """Logistic variance 4 e^z / (e^z + 1)^2 at z = 2 u_r sum_{t!=r} w_rt u_t.

    Equals 4 c (1 - c) for c the conditional probability of either spin at
    node r, and 1 exactly when the local field vanishes.
    """
    arr = validate_spins(u, theta.p)
    if arr.ndim != 1:
        raise ValueError("variance_weight expects a single configuration")
    if not 0 <= r < theta.p:
        raise ValueError(f"node {r} out of range for p={theta.p}")
    z = 2.0 * arr[r] * float(local_field(theta, r, arr))
    # the weight is even in z; evaluate on the negative branch for stability
    ez = np.exp(-abs(z))
    return float(4.0 * ez / (1.0 + ez) ** 2)


def variance_weights(theta: IsingParameter, r: int, samples: np.ndarray) -> np.ndarray:
    """Vectorized :func:`variance_weight` over the rows of a sample matrix."""
    x = validate_spins(samples, theta.p)
    omega = x @ theta.to_matrix()[:, r]
    # even in the field, and independent of x_r
    return 1.0 / np.cosh(omega) ** 2


def write_edge_list(theta: IsingParameter, path) -> None:
    """Write couplings as text lines ``s t weight`` with 1-indexed nodes.

    Pairs with zero weight are omitted; a ``# p = N`` comment records the
    node count so isolated trailing nodes round-trip.
    """
    lines = [f"# p = {theta.p}\n"]
    for s, t in iter_pairs(theta.p):
        w = theta.weight(s, t)
        if w != 0.0:
            lines.append(f"{s + 1} {t + 1} {w!r}\n")
    with open(path, "w") as fh:
        fh.writelines(lines)


def read_edge_list(path, p: int | None = None) -> IsingParameter:
    """Read the :func:`write_edge_list` format.

    ``p`` may be given explicitly; otherwise it is taken from the header
    comment, falling back to the largest node index seen.
    """
    edges: list[tuple[int, int, float]] = []
    header_p = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                parts = text.lstrip("#").replace("=", " ").split()
                if len(parts) == 2 and parts[0] == "p":
                    header_p = int(parts[1])
                continue
            parts = text.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 's t weight', got {text!r}")
            s, t, w = int(parts[0]), int(parts[1]), float(parts[2])
            if s < 1 or t < 1 or s == t:
                raise ValueError(f"{path}:{lineno}: invalid 1-indexed pair ({s},{t})")
            edges.append((s - 1, t - 1, w))
    if p is None:
        p = header_p if header_p is not None else max((max(s, t) for s, t, _ in edges), default=1) + 1
    return IsingParameter.from_edges(p, edges)
