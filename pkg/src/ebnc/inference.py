"""Conditional distribution of an embedded classifier, computed in log-odds space."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapExceeded, InvalidConfiguration, NetworkError, PartialConfiguration
from .network import BayesianNetwork, all_configurations, is_y_late_ordering, ordering_y_late

DEFAULT_CAP = 2**20


@dataclass(frozen=True)
class Ebnc:
    """Local distribution for ``y`` given the other nodes of ``inner``.

    ``inputs`` lists the inner-network nodes playing the role of the outer
    parents, in the order used for input configurations.  Defaults to all
    non-class nodes by ascending index.
    """

    inner: BayesianNetwork
    y: int
    inputs: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        n = len(self.inner)
        if not 0 <= self.y < n:
            raise NetworkError(f"class index {self.y} out of range")
        inputs = self.inputs
        if inputs is None:
            inputs = tuple(i for i in range(n) if i != self.y)
        inputs = tuple(int(i) for i in inputs)
        if sorted(inputs) != [i for i in range(n) if i != self.y]:
            raise NetworkError("inputs must be exactly the non-class nodes of the inner network")
        object.__setattr__(self, "inputs", inputs)

    @property
    def y_name(self) -> str:
        return self.inner.variables[self.y].name

    @property
    def input_names(self) -> list[str]:
        return [self.inner.variables[i].name for i in self.inputs]

    @property
    def r_y(self) -> int:
        return self.inner.state_count(self.y)

    @property
    def input_state_counts(self) -> list[int]:
        return [self.inner.state_count(i) for i in self.inputs]

    @property
    def q_y(self) -> int:
        return int(np.prod(self.input_state_counts, dtype=np.int64))

    def with_cpts(self, cpts) -> "Ebnc":
        return Ebnc(self.inner.with_cpts(cpts), self.y, self.inputs)


def config_index(state_counts: Sequence[int], x) -> np.ndarray | int:
    """Row-major index of input configuration(s) ``x`` (last axis = inputs)."""
    x = np.asarray(x, dtype=np.int64)
    idx = np.zeros(x.shape[:-1], dtype=np.int64)
    for j, r in enumerate(state_counts):
        idx = idx * r + x[..., j]
    return idx if idx.ndim else int(idx)


def _check_inputs(e: Ebnc, x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != len(e.inputs) or any(v is None for v in x.tolist()):
        raise PartialConfiguration(f"x must assign all {len(e.inputs)} inputs")
    x = x.astype(np.int64)
    for v, r in zip(x, e.input_state_counts):
        if not 0 <= v < r:
            raise InvalidConfiguration(f"input state {v} out of range")
    return x


def _log_odds_batch(e: Ebnc, xs: np.ndarray, ordering=None) -> np.ndarray:
    net = e.inner
    if ordering is None:
        ordering, n_h = ordering_y_late(net, e.y)
    else:
        ordering = list(ordering)
        if not is_y_late_ordering(net, e.y, ordering):
            raise NetworkError("ordering is not a valid y-late topological order")
        n_h = ordering.index(e.y)
    m = xs.shape[0]
    states = np.zeros((m, len(net)), dtype=np.int64)
    states[:, list(e.inputs)] = xs
    after = ordering[n_h + 1:]

    rows_y = net.parent_row(e.y, states)
    log_y = net.log_cpt(e.y)
    lam = log_y[rows_y, 1:] - log_y[rows_y, :1]

    # nodes preceding y never see it as a parent and drop out of the ratio
    states[:, e.y] = 0
    ref = {c: net.log_cpt(c)[net.parent_row(c, states), states[:, c]] for c in after}
    for k in range(1, e.r_y):
        states[:, e.y] = k
        for c in after:
            lam[:, k - 1] += net.log_cpt(c)[net.parent_row(c, states), states[:, c]] - ref[c]
    return lam


def log_odds(e: Ebnc, x, ordering=None) -> np.ndarray:
    """Posterior log odds of each non-reference class state against state 0."""
    x = _check_inputs(e, x)
    return _log_odds_batch(e, x[None, :], ordering)[0]


def softmax(lam) -> np.ndarray:
    """Probabilities from log odds against an implicit reference entry of 0."""
    lam = np.asarray(lam, dtype=float)
    full = np.concatenate([np.zeros(lam.shape[:-1] + (1,)), lam], axis=-1)
    full -= full.max(axis=-1, keepdims=True)
    w = np.exp(full)
    return w / w.sum(axis=-1, keepdims=True)


def log_softmax(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    full = np.concatenate([np.zeros(lam.shape[:-1] + (1,)), lam], axis=-1)
    mx = full.max(axis=-1, keepdims=True)
    return full - mx - np.log(np.exp(full - mx).sum(axis=-1, keepdims=True))


def conditional_distribution(e: Ebnc, x) -> np.ndarray:
    return softmax(log_odds(e, x))


def classify(e: Ebnc, x) -> int:
    # np.argmax returns the first maximum, i.e. the lowest state index on ties
    return int(np.argmax(conditional_distribution(e, x)))


@dataclass(frozen=True)
class LogOddsTable:
    """One row of log odds per input configuration, row-major over inputs."""

    values: np.ndarray
    input_state_counts: tuple[int, ...]

    @property
    def q_y(self) -> int:
        return self.values.shape[0]

    def row(self, x) -> np.ndarray:
        return self.values[config_index(self.input_state_counts, x)]

    def probabilities(self) -> np.ndarray:
        return softmax(self.values)


def full_log_odds_table(e: Ebnc, cap: int = DEFAULT_CAP) -> LogOddsTable:
    if e.q_y > cap:
        raise CapExceeded(f"{e.q_y} input configurations exceed the cap of {cap}")
    xs = all_configurations(e.input_state_counts)
    return LogOddsTable(_log_odds_batch(e, xs), tuple(e.input_state_counts))


def log_odds_many(e: Ebnc, xs) -> np.ndarray:
    """Vectorized :func:`log_odds` over rows of ``xs``."""
    xs = np.asarray(xs, dtype=np.int64)
    if xs.ndim == 1:
        xs = xs[None, :]
    return _log_odds_batch(e, xs)
