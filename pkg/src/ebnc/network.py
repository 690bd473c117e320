"""Finite-state Bayesian networks: structure, CPTs and the joint factorization.

Parents of every node are kept in ascending node-index order, and CPT rows
are laid out row-major over that parent list (the first parent varies
slowest).  State 0 of every variable is the reference state.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CptShapeMismatch,
    CycleDetected,
    InvalidConfiguration,
    NetworkError,
    PartialConfiguration,
    ProbabilityOutOfInterior,
    RowNotNormalized,
)

EPS = 1e-12
ROW_TOL = 1e-12


@dataclass(frozen=True)
class Variable:
    name: str
    state_labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(s) for s in self.state_labels)
        object.__setattr__(self, "state_labels", labels)
        if len(labels) < 2:
            raise NetworkError(f"variable {self.name!r} needs at least 2 states")
        if len(set(labels)) != len(labels):
            raise NetworkError(f"variable {self.name!r} has duplicate state labels")

    @property
    def state_count(self) -> int:
        return len(self.state_labels)

    @classmethod
    def binary(cls, name: str) -> "Variable":
        return cls(name, ("0", "1"))


def _topological_order(n: int, parents: Sequence[Sequence[int]], allowed=None) -> list[int]:
    """Kahn's algorithm with a min-heap so ties go to the lowest index."""
    nodes = range(n) if allowed is None else sorted(allowed)
    node_set = set(nodes)
    indeg = {i: sum(1 for p in parents[i] if p in node_set) for i in nodes}
    children: dict[int, list[int]] = {i: [] for i in nodes}
    for i in nodes:
        for p in parents[i]:
            if p in node_set:
                children[p].append(i)
    heap = [i for i in nodes if indeg[i] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        i = heapq.heappop(heap)
        out.append(i)
        for c in children[i]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    if len(out) != len(node_set):
        raise CycleDetected("edge relation contains a directed cycle")
    return out


class BayesianNetwork:
    """An immutable discrete Bayesian network.

    Parameters
    ----------
    variables : sequence of Variable
    edges : iterable of (parent index, child index)
    cpts : one array per node with shape (q_i, r_i), where q_i is the
        product of the parent state counts.
    """

    def __init__(self, variables: Sequence[Variable], edges: Iterable[tuple[int, int]], cpts):
        self.variables: tuple[Variable, ...] = tuple(variables)
        n = len(self.variables)
        names = [v.name for v in self.variables]
        if len(set(names)) != n:
            raise NetworkError("variable names must be unique")

        edge_set = set()
        for p, c in edges:
            p, c = int(p), int(c)
            if not (0 <= p < n and 0 <= c < n):
                raise NetworkError(f"edge ({p}, {c}) out of range")
            if p == c:
                raise CycleDetected(f"self-loop on {names[p]!r}")
            edge_set.add((p, c))
        self.edges: frozenset[tuple[int, int]] = frozenset(edge_set)
        self.parents: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(p for p, c in edge_set if c == i)) for i in range(n)
        )
        self.children: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(c for p, c in edge_set if p == i)) for i in range(n)
        )
        self.topological_order: tuple[int, ...] = tuple(_topological_order(n, self.parents))

        cpts = list(cpts)
        if len(cpts) != n:
            raise CptShapeMismatch(f"expected {n} CPTs, got {len(cpts)}")
        tables = []
        for i, raw in enumerate(cpts):
            table = np.array(raw, dtype=float)
            if table.ndim == 1:
                table = table[None, :]
            expected = (self.parent_config_count(i), self.state_count(i))
            if table.shape != expected:
                raise CptShapeMismatch(
                    f"CPT of {names[i]!r} has shape {table.shape}, expected {expected}"
                )
            sums = table.sum(axis=1)
            bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOL)
            if bad.size:
                raise RowNotNormalized(
                    f"CPT of {names[i]!r}, row {bad[0]} sums to {sums[bad[0]]!r}"
                )
            if np.any(table < EPS) or np.any(table > 1.0 - EPS):
                raise ProbabilityOutOfInterior(
                    f"CPT of {names[i]!r} has an entry outside [{EPS}, 1 - {EPS}]"
                )
            table.setflags(write=False)
            tables.append(table)
        self.cpts: tuple[np.ndarray, ...] = tuple(tables)
        self._log_cpts = tuple(np.log(t) for t in tables)
        for t in self._log_cpts:
            t.setflags(write=False)

    # -- structure -------------------------------------------------------

    def __len__(self) -> int:
        return len(self.variables)

    def __repr__(self) -> str:
        names = [v.name for v in self.variables]
        arcs = ", ".join(f"{names[p]}->{names[c]}" for p, c in sorted(self.edges))
        return f"BayesianNetwork([{', '.join(names)}], edges=[{arcs}])"

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def index(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise KeyError(name)

    def state_count(self, i: int) -> int:
        return self.variables[i].state_count

    def state_counts(self) -> list[int]:
        return [v.state_count for v in self.variables]

    def parent_config_count(self, i: int) -> int:
        return int(np.prod([self.state_count(p) for p in self.parents[i]], dtype=np.int64))

    def log_cpt(self, i: int) -> np.ndarray:
        return self._log_cpts[i]

    def descendants(self, i: int) -> set[int]:
        seen: set[int] = set()
        stack = list(self.children[i])
        while stack:
            c = stack.pop()
            if c not in seen:
                seen.add(c)
                stack.extend(self.children[c])
        return seen

    def parent_row(self, i: int, states) -> np.ndarray | int:
        """CPT row index of node ``i`` for full state assignment(s).

        ``states`` is indexed by node along its last axis.
        """
        states = np.asarray(states)
        row = np.zeros(states.shape[:-1], dtype=np.int64)
        for p in self.parents[i]:
            row = row * self.state_count(p) + states[..., p]
        return row if row.ndim else int(row)

    def with_cpts(self, cpts) -> "BayesianNetwork":
        return BayesianNetwork(self.variables, self.edges, cpts)

    def is_topological(self, ordering: Sequence[int]) -> bool:
        pos = {v: k for k, v in enumerate(ordering)}
        if sorted(pos) != list(range(len(self))):
            return False
        return all(pos[p] < pos[c] for p, c in self.edges)


def build_network(variables, edges, cpts) -> BayesianNetwork:
    """Validate and assemble a network; see :class:`BayesianNetwork`."""
    return BayesianNetwork(variables, edges, cpts)


def uniform_cpts(variables: Sequence[Variable], edges: Iterable[tuple[int, int]]) -> list[np.ndarray]:
    edges = list(edges)
    out = []
    for i, v in enumerate(variables):
        q = int(np.prod([variables[p].state_count for p, c in edges if c == i], dtype=np.int64))
        out.append(np.full((q, v.state_count), 1.0 / v.state_count))
    return out


def random_cpts(
    variables: Sequence[Variable],
    edges: Iterable[tuple[int, int]],
    rng: np.random.Generator,
    low: float = 0.1,
    high: float = 0.9,
) -> list[np.ndarray]:
    """Interior CPTs: entries drawn from U[low, high] then row-normalized."""
    edges = list(edges)
    out = []
    for i, v in enumerate(variables):
        q = int(np.prod([variables[p].state_count for p, c in edges if c == i], dtype=np.int64))
        t = rng.uniform(low, high, size=(q, v.state_count))
        out.append(t / t.sum(axis=1, keepdims=True))
    return out


def _check_total(net: BayesianNetwork, z) -> np.ndarray:
    z = np.asarray(z)
    if z.ndim != 1 or z.shape[0] != len(net):
        raise PartialConfiguration(
            f"configuration must assign all {len(net)} variables, got {z.shape}"
        )
    if any(s is None for s in z.tolist()):
        raise PartialConfiguration("configuration leaves a variable unassigned")
    z = z.astype(np.int64)
    for i, s in enumerate(z):
        if not 0 <= s < net.state_count(i):
            raise InvalidConfiguration(
                f"state {s} out of range for {net.variables[i].name!r}"
            )
    return z


def log_joint_probability(net: BayesianNetwork, z) -> float:
    z = _check_total(net, z)
    return float(sum(net.log_cpt(i)[net.parent_row(i, z), z[i]] for i in range(len(net))))


def joint_probability(net: BayesianNetwork, z) -> float:
    """Product of one CPT lookup per node for a total configuration ``z``."""
    z = _check_total(net, z)
    p = 1.0
    for i in range(len(net)):
        p *= net.cpts[i][net.parent_row(i, z), z[i]]
    return float(p)


def all_configurations(state_counts: Sequence[int]) -> np.ndarray:
    """Every joint state assignment, row-major (first variable slowest)."""
    if not state_counts:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(*(range(r) for r in state_counts))), dtype=np.int64)


def ordering_y_late(net: BayesianNetwork, y: int) -> tuple[list[int], int]:
    """Topological order placing ``y`` as late as possible.

    Returns the ordering and the number of nodes before ``y``.  Exactly the
    non-descendants of ``y`` precede it; ties break by ascending index.
    """
    if not 0 <= y < len(net):
        raise NetworkError(f"node index {y} out of range")
    desc = net.descendants(y)
    before = [i for i in range(len(net)) if i != y and i not in desc]
    head = _topological_order(len(net), net.parents, allowed=before)
    tail = _topological_order(len(net), net.parents, allowed=desc)
    return head + [y] + tail, len(head)


def is_y_late_ordering(net: BayesianNetwork, y: int, ordering: Sequence[int]) -> bool:
    """True when ``ordering`` is topological and every node after ``y`` descends from it."""
    if not net.is_topological(ordering):
        return False
    k = list(ordering).index(y)
    return set(ordering[k + 1:]) == net.descendants(y)
