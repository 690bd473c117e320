"""Plain-text network format.

::

    # comment
    variables
    Y: no,yes
    X1: lo,hi
    edges
    X1 -> Y
    cpt X1
    0.3 0.7
    cpt Y
    0.9 0.1        # X1=lo
    0.2 0.8        # X1=hi

CPT rows run row-major over the node's parents in declaration order (the
first-declared parent varies slowest).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError
from .network import BayesianNetwork, Variable


def parse_network(text: str, source: str = "<network>") -> BayesianNetwork:
    section = None
    variables: list[Variable] = []
    names: dict[str, int] = {}
    edges: list[tuple[int, int]] = []
    cpt_rows: dict[int, list[list[float]]] = {}
    current = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()
        if line == "variables":
            section = "variables"
            continue
        if line == "edges":
            section = "edges"
            continue
        if head[0] == "cpt":
            if len(head) != 2 or head[1] not in names:
                raise ParseError(f"{source}:{lineno}: bad cpt header {line!r}")
            section, current = "cpt", names[head[1]]
            if current in cpt_rows:
                raise ParseError(f"{source}:{lineno}: duplicate cpt block for {head[1]!r}")
            cpt_rows[current] = []
            continue

        if section == "variables":
            if ":" not in line:
                raise ParseError(f"{source}:{lineno}: expected 'name: label1,label2,...'")
            name, labels = (s.strip() for s in line.split(":", 1))
            if name in names:
                raise ParseError(f"{source}:{lineno}: duplicate variable {name!r}")
            names[name] = len(variables)
            variables.append(Variable(name, tuple(s.strip() for s in labels.split(","))))
        elif section == "edges":
            if "->" not in line:
                raise ParseError(f"{source}:{lineno}: expected 'parent -> child'")
            p, c = (s.strip() for s in line.split("->", 1))
            if p not in names or c not in names:
                raise ParseError(f"{source}:{lineno}: unknown variable in edge {line!r}")
            edges.append((names[p], names[c]))
        elif section == "cpt":
            try:
                cpt_rows[current].append([float(v) for v in head])
            except ValueError:
                raise ParseError(f"{source}:{lineno}: non-numeric CPT entry") from None
        else:
            raise ParseError(f"{source}:{lineno}: content outside any block")

    missing = [v.name for i, v in enumerate(variables) if i not in cpt_rows]
    if missing:
        raise ParseError(f"{source}: no cpt block for {missing}")
    cpts = [np.array(cpt_rows[i], dtype=float) for i in range(len(variables))]
    return BayesianNetwork(variables, edges, cpts)


def read_network(path) -> BayesianNetwork:
    return parse_network(Path(path).read_text(encoding="utf-8"), source=str(path))


def format_network(net: BayesianNetwork) -> str:
    lines = ["variables"]
    for v in net.variables:
        lines.append(f"{v.name}: {','.join(v.state_labels)}")
    lines.append("edges")
    for p, c in sorted(net.edges, key=lambda e: (e[1], e[0])):
        lines.append(f"{net.variables[p].name} -> {net.variables[c].name}")
    for i, v in enumerate(net.variables):
        lines.append(f"cpt {v.name}")
        for row in net.cpts[i]:
            lines.append(" ".join(repr(float(p)) for p in row))
    return "\n".join(lines) + "\n"


def write_network(net: BayesianNetwork, path) -> None:
    Path(path).write_text(format_network(net), encoding="utf-8")
