"""Complete datasets: CSV reading/writing and ancestral sampling."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import MissingValue, SchemaMismatch, UnknownLabel
from .network import BayesianNetwork, Variable


@dataclass(frozen=True)
class Dataset:
    """``rows[l, j]`` is the state index of ``variables[j]`` in case ``l``."""

    variables: tuple[Variable, ...]
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).reshape(-1, len(self.variables))
        for j, v in enumerate(self.variables):
            col = rows[:, j]
            if col.size and (col.min() < 0 or col.max() >= v.state_count):
                raise SchemaMismatch(f"column {v.name!r} has a state index out of range")
        rows.setflags(write=False)
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.names.index(name)
        except ValueError:
            raise SchemaMismatch(f"dataset has no column {name!r}") from None
        return self.rows[:, j]

    def variable(self, name: str) -> Variable:
        return self.variables[self.names.index(name)]

    def columns(self, names: Sequence[str]) -> np.ndarray:
        if not names:
            return np.zeros((self.n, 0), dtype=np.int64)
        return np.column_stack([self.column(nm) for nm in names])

    def check_variable(self, var: Variable):
        mine = self.variable(var.name) if var.name in self.names else None
        if mine is None:
            raise SchemaMismatch(f"dataset has no column {var.name!r}")
        if mine.state_labels != var.state_labels:
            raise SchemaMismatch(
                f"column {var.name!r} has states {mine.state_labels}, model expects {var.state_labels}"
            )


def read_dataset(path, variables: Sequence[Variable]) -> Dataset:
    """Read a CSV whose header names the variables and whose cells are state labels."""
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_dataset(fh.read(), variables, source=str(path))


def parse_dataset(text: str, variables: Sequence[Variable], source: str = "<data>") -> Dataset:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise SchemaMismatch(f"{source}: missing header row")
    header = [h.strip() for h in header]
    by_name = {v.name: v for v in variables}
    unknown = [h for h in header if h not in by_name]
    if unknown:
        raise SchemaMismatch(f"{source}: unknown column(s) {unknown}")
    if len(set(header)) != len(header):
        raise SchemaMismatch(f"{source}: duplicate column names")
    cols = [by_name[h] for h in header]
    lookup = [{lab: s for s, lab in enumerate(v.state_labels)} for v in cols]
    rows = []
    for lineno, raw in enumerate(reader, start=2):
        if not raw or all(not c.strip() for c in raw):
            continue
        if len(raw) != len(cols):
            raise MissingValue(f"{source}: row {lineno} has {len(raw)} cells, expected {len(cols)}")
        out = []
        for cell, var, lk in zip(raw, cols, lookup):
            cell = cell.strip()
            if cell == "":
                raise MissingValue(f"{source}: row {lineno}, column {var.name!r} is empty")
            if cell not in lk:
                raise UnknownLabel(f"{source}: row {lineno}, column {var.name!r}: unknown label {cell!r}")
            out.append(lk[cell])
        rows.append(out)
    return Dataset(tuple(cols), np.array(rows, dtype=np.int64).reshape(-1, len(cols)))


def format_dataset(data: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(data.names)
    for row in data.rows:
        w.writerow([v.state_labels[s] for v, s in zip(data.variables, row)])
    return buf.getvalue()


def write_dataset(data: Dataset, path) -> None:
    Path(path).write_text(format_dataset(data), encoding="utf-8")


def sample_dataset(net: BayesianNetwork, n: int, seed: int = 0) -> Dataset:
    """Draw ``n`` i.i.d. cases ancestrally, in the network's topological order."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    rows = np.zeros((n, len(net)), dtype=np.int64)
    for i in net.topological_order:
        probs = net.cpts[i][net.parent_row(i, rows)] if n else np.zeros((0, net.state_count(i)))
        cum = np.cumsum(probs, axis=1)
        u = rng.random(n)[:, None]
        rows[:, i] = np.minimum((u >= cum).sum(axis=1), net.state_count(i) - 1)
    return Dataset(net.variables, rows)
