"""Random graphs, random couplings, and families of related Ising tasks.

A task family consists of a deterministic shared parameter ``theta_bar``
and K task parameters ``theta_bar + delta_k`` where the ``delta_k`` are
i.i.d. draws from a perturbation law whose support never leaves
``supp(theta_bar)``.  Three perturbation laws are provided: the identity
(no perturbation), an entrywise Bernoulli keep/drop mask, and an explicit
finite list of atoms.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .core import IsingParameter, pair_count, pair_index, read_edge_list, write_edge_list

MIXED_COUPLING = 0.5


class GenerationError(RuntimeError):
    """Raised when rejection sampling exhausts its retry budget."""


def random_max_degree_graph(
    p: int, d: int, rng: np.random.Generator, max_attempts: int = 10_000
) -> list[tuple[int, int]]:
    """Random edge set with maximum node degree at most d.

    Each pair is included independently with probability d/(p-1); the draw
    is rejected and redone until the degree bound holds.
    """
    if not 0 <= d <= p - 1:
        raise ValueError(f"need 0 <= d <= p-1, got d={d}, p={p}")
    prob = d / (p - 1)
    for _ in range(max_attempts):
        mask = rng.random(pair_count(p)) < prob
        degrees = np.zeros(p, dtype=np.int64)
        edges = []
        for idx in np.flatnonzero(mask):
            s, t = _pair_cache(p)[idx]
            degrees[s] += 1
            degrees[t] += 1
            edges.append((s, t))
        if degrees.max(initial=0) <= d:
            return edges
    raise GenerationError(
        f"no graph with max degree {d} on {p} nodes after {max_attempts} attempts"
    )


_PAIR_CACHE: dict[int, list[tuple[int, int]]] = {}


def _pair_cache(p: int) -> list[tuple[int, int]]:
    if p not in _PAIR_CACHE:
        _PAIR_CACHE[p] = [(s, t) for s in range(p) for t in range(s + 1, p)]
    return _PAIR_CACHE[p]


def mixed_couplings(
    p: int,
    edges: list[tuple[int, int]],
    rng: np.random.Generator,
    magnitude: float = MIXED_COUPLING,
) -> IsingParameter:
    """Assign each edge the value +magnitude or -magnitude with equal probability."""
    w = np.zeros(pair_count(p))
    for s, t in edges:
        if s > t:
            s, t = t, s
        sign = 1.0 if rng.random() < 0.5 else -1.0
        w[pair_index(p, s, t)] = sign * magnitude
    return IsingParameter(p, w)


@dataclass(frozen=True)
class NoDelta:
    """Every task uses the shared parameter unchanged."""

    kind = "none"

    def validate(self, theta_bar: IsingParameter) -> None:
        pass

    def draw(self, theta_bar: IsingParameter, rng: np.random.Generator) -> IsingParameter:
        return IsingParameter.zeros(theta_bar.p)

    def atoms(self, theta_bar: IsingParameter) -> list[tuple[np.ndarray, float]]:
        return [(np.zeros(pair_count(theta_bar.p)), 1.0)]


@dataclass(frozen=True)
class BernoulliMaskDelta:
    """Each supported coupling is kept with probability q, else zeroed.

    The draw is the additive perturbation theta_bar * (mask - 1), so the
    task parameter theta_bar + delta equals theta_bar entrywise times the
    0/1 mask.
    """

    q: float
    kind = "bernoulli-mask"

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"keep probability must be in [0,1], got {self.q}")

    def validate(self, theta_bar: IsingParameter) -> None:
        pass

    def draw(self, theta_bar: IsingParameter, rng: np.random.Generator) -> IsingParameter:
        return bernoulli_mask_delta(theta_bar, self.q, rng)

    def atoms(
        self, theta_bar: IsingParameter, max_support: int = 12
    ) -> list[tuple[np.ndarray, float]]:
        """Expand the mask into its finite atom list (2^|support| entries)."""
        support_idx = np.flatnonzero(theta_bar.weights)
        if support_idx.size > max_support:
            raise ValueError(
                f"mask expansion needs |support| <= {max_support}, got {support_idx.size}"
            )
        out = []
        for bits in range(1 << support_idx.size):
            delta = np.zeros_like(theta_bar.weights)
            kept = 0
            for j, idx in enumerate(support_idx):
                if (bits >> j) & 1:
                    kept += 1
                else:
                    delta[idx] = -theta_bar.weights[idx]
            prob = self.q**kept * (1.0 - self.q) ** (support_idx.size - kept)
            if prob > 0.0:
                out.append((delta, prob))
        return out


@dataclass(frozen=True)
class FiniteSupportDelta:
    """Explicit finite perturbation law: a list of (delta vector, probability)."""

    atoms_weights: tuple[np.ndarray, ...] = field(repr=False)
    probs: tuple[float, ...]
    kind = "finite-support"

    def __post_init__(self):
        if len(self.atoms_weights) != len(self.probs) or not self.atoms_weights:
            raise ValueError("need one probability per atom and at least one atom")
        if any(q < 0 for q in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError(f"atom probabilities must be nonnegative and sum to 1, got {self.probs}")
        object.__setattr__(
            self,
            "atoms_weights",
            tuple(np.asarray(a, dtype=np.float64) for a in self.atoms_weights),
        )

    def validate(self, theta_bar: IsingParameter) -> None:
        m = pair_count(theta_bar.p)
        support = theta_bar.weights != 0.0
        for i, a in enumerate(self.atoms_weights):
            if a.shape != (m,):
                raise ValueError(f"atom {i} has shape {a.shape}, expected ({m},)")
            if np.any(a[~support] != 0.0):
                raise ValueError(f"atom {i} is supported outside supp(theta_bar)")

    def draw(self, theta_bar: IsingParameter, rng: np.random.Generator) -> IsingParameter:
        i = rng.choice(len(self.atoms_weights), p=np.asarray(self.probs))
        return IsingParameter(theta_bar.p, self.atoms_weights[int(i)])

    def atoms(self, theta_bar: IsingParameter) -> list[tuple[np.ndarray, float]]:
        return [(a.copy(), q) for a, q in zip(self.atoms_weights, self.probs)]


DeltaSpec = NoDelta | BernoulliMaskDelta | FiniteSupportDelta


def bernoulli_mask_delta(
    theta_bar: IsingParameter, q: float, rng: np.random.Generator
) -> IsingParameter:
    """One additive mask draw: 0 with probability q, else -theta_bar entrywise."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"keep probability must be in [0,1], got {q}")
    keep = rng.random(pair_count(theta_bar.p)) < q
    delta = np.where(keep, 0.0, -theta_bar.weights)
    delta[theta_bar.weights == 0.0] = 0.0
    return IsingParameter(theta_bar.p, delta)


@dataclass(frozen=True)
class TaskFamily:
    """Shared parameter, its perturbation law, and the realized task parameters."""

    theta_bar: IsingParameter
    delta_spec: DeltaSpec
    task_params: tuple[IsingParameter, ...]

    def __post_init__(self):
        support = self.theta_bar.weights != 0.0
        for k, task in enumerate(self.task_params):
            if task.p != self.theta_bar.p:
                raise ValueError(f"task {k} has p={task.p}, expected {self.theta_bar.p}")
            if np.any(task.weights[~support] != 0.0):
                raise ValueError(f"task {k} is supported outside supp(theta_bar)")

    @property
    def k(self) -> int:
        return len(self.task_params)

    @property
    def p(self) -> int:
        return self.theta_bar.p


def sample_task_family(
    theta_bar: IsingParameter,
    delta_spec: DeltaSpec,
    k: int,
    rng: np.random.Generator,
) -> TaskFamily:
    """Draw k independent task parameters theta_bar + delta."""
    if k < 1:
        raise ValueError(f"need at least one task, got k={k}")
    delta_spec.validate(theta_bar)
    tasks = tuple(theta_bar + delta_spec.draw(theta_bar, rng) for _ in range(k))
    return TaskFamily(theta_bar, delta_spec, tasks)


def _format_value(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def save_family(family: TaskFamily, directory, extra: dict | None = None) -> None:
    """Write a family as a key-value config, edge lists, and a task manifest.

    Layout: ``family.cfg`` (p, k, delta spec, file pointers, plus any extra
    keys such as d or seed), ``theta_bar.txt``, ``tasks.manifest`` naming one
    edge-list file per task.
    """
    os.makedirs(directory, exist_ok=True)
    write_edge_list(family.theta_bar, os.path.join(directory, "theta_bar.txt"))
    names = []
    for i, task in enumerate(family.task_params):
        name = f"task_{i:03d}.txt"
        write_edge_list(task, os.path.join(directory, name))
        names.append(name)
    with open(os.path.join(directory, "tasks.manifest"), "w") as fh:
        fh.write("".join(n + "\n" for n in names))

    pairs = {
        "p": family.p,
        "k": family.k,
        "theta_bar": "theta_bar.txt",
        "tasks": "tasks.manifest",
        "delta_kind": family.delta_spec.kind,
    }
    if isinstance(family.delta_spec, BernoulliMaskDelta):
        pairs["delta_q"] = family.delta_spec.q
    elif isinstance(family.delta_spec, FiniteSupportDelta):
        atom_names = []
        for i, atom in enumerate(family.delta_spec.atoms_weights):
            name = f"delta_atom_{i:03d}.txt"
            write_edge_list(IsingParameter(family.p, atom), os.path.join(directory, name))
            atom_names.append(name)
        pairs["delta_atoms"] = ",".join(atom_names)
        pairs["delta_probs"] = ",".join(repr(q) for q in family.delta_spec.probs)
    if extra:
        pairs.update(extra)
    with open(os.path.join(directory, "family.cfg"), "w") as fh:
        for key, value in pairs.items():
            fh.write(f"{key} = {_format_value(value)}\n")


def load_family(directory) -> TaskFamily:
    """Read a directory written by :func:`save_family`."""
    cfg_path = os.path.join(directory, "family.cfg")
    pairs: dict[str, str] = {}
    with open(cfg_path) as fh:
        for line in fh:
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            key, _, value = text.partition("=")
            pairs[key.strip()] = value.strip()
    p = int(pairs["p"])
    theta_bar = read_edge_list(os.path.join(directory, pairs["theta_bar"]), p=p)
    with open(os.path.join(directory, pairs["tasks"])) as fh:
        task_files = [ln.strip() for ln in fh if ln.strip()]
    tasks = tuple(read_edge_list(os.path.join(directory, f), p=p) for f in task_files)
    kind = pairs.get("delta_kind", "none")
    if kind == "none":
        spec: DeltaSpec = NoDelta()
    elif kind == "bernoulli-mask":
        spec = BernoulliMaskDelta(float(pairs["delta_q"]))
    elif kind == "finite-support":
        atom_files = pairs["delta_atoms"].split(",")
        probs = tuple(float(v) for v in pairs["delta_probs"].split(","))
        atoms = tuple(
            read_edge_list(os.path.join(directory, f), p=p).weights for f in atom_files
        )
        spec = FiniteSupportDelta(atoms, probs)
    else:
        raise ValueError(f"unknown delta_kind {kind!r} in {cfg_path}")
    return TaskFamily(theta_bar, spec, tasks)
