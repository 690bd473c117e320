"""Canonical inner-network structures for embedded classifiers.

Each builder takes the class variable and the input variables and returns an
:class:`~ebnc.inference.Ebnc` whose inner network puts the class at index 0
and the inputs at 1..n in the given order.  CPTs are uniform unless ``rng``
is supplied, in which case they are drawn from the interior.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .inference import Ebnc
from .network import BayesianNetwork, Variable, random_cpts, uniform_cpts


def _build(y: Variable, inputs: Sequence[Variable], edges, rng=None) -> Ebnc:
    variables = [y, *inputs]
    cpts = uniform_cpts(variables, edges) if rng is None else random_cpts(variables, edges, rng)
    return Ebnc(BayesianNetwork(variables, edges, cpts), 0)


def trivial(y: Variable, inputs: Sequence[Variable], rng=None) -> Ebnc:
    """Every input is a parent of the class; nothing else."""
    return _build(y, inputs, [(i, 0) for i in range(1, len(inputs) + 1)], rng)


def naive_bayes(y: Variable, inputs: Sequence[Variable], rng=None) -> Ebnc:
    return _build(y, inputs, [(0, i) for i in range(1, len(inputs) + 1)], rng)


def markov_chain(y: Variable, inputs: Sequence[Variable], rng=None) -> Ebnc:
    """Class is a root; inputs form a chain, each also a child of the class."""
    edges = [(0, i) for i in range(1, len(inputs) + 1)]
    edges += [(i - 1, i) for i in range(2, len(inputs) + 1)]
    return _build(y, inputs, edges, rng)


GENERATORS: dict[str, Callable[..., Ebnc]] = {
    "trivial": trivial,
    "naive": naive_bayes,
    "chain": markov_chain,
}


def binary_inputs(n: int, prefix: str = "X") -> list[Variable]:
    return [Variable.binary(f"{prefix}{i}") for i in range(1, n + 1)]


def figure_network(rng=None) -> Ebnc:
    """Six binary nodes: Y <- {X1, X2}; X4 <- {X1, X3, Y}; X5 <- {X2, X3, Y}."""
    names = ["Y", "X1", "X2", "X3", "X4", "X5"]
    variables = [Variable.binary(n) for n in names]
    y, x1, x2, x3, x4, x5 = range(6)
    edges = [(x1, y), (x2, y), (x1, x4), (x3, x4), (y, x4), (x2, x5), (x3, x5), (y, x5)]
    cpts = uniform_cpts(variables, edges) if rng is None else random_cpts(variables, edges, rng)
    return Ebnc(BayesianNetwork(variables, edges, cpts), y)


def random_ebnc(rng: np.random.Generator, n_vars: int, edge_prob: float = 0.5, max_states: int = 2) -> Ebnc:
    """A random DAG over ``n_vars`` nodes with a randomly chosen class node."""
    counts = rng.integers(2, max_states + 1, size=n_vars)
    variables = [Variable(f"V{i}", tuple(str(s) for s in range(counts[i]))) for i in range(n_vars)]
    perm = rng.permutation(n_vars)
    edges = [
        (int(perm[a]), int(perm[b]))
        for a in range(n_vars)
        for b in range(a + 1, n_vars)
        if rng.random() < edge_prob
    ]
    net = BayesianNetwork(variables, edges, random_cpts(variables, edges, rng))
    return Ebnc(net, int(rng.integers(n_vars)))
