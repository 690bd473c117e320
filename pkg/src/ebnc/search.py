"""Choosing among candidate classifiers for one class variable, including feature subsets.

Only the class-local term of the score is compared: with mutually
independent inputs that are parents of the class in every candidate, the
input marginals contribute identically and cancel.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .data import Dataset
from .errors import CapExceeded, EbncError, NetworkError
from .inference import Ebnc
from .network import BayesianNetwork, Variable
from .scoring import bic_score, laplace_score
from .structures import GENERATORS

DEFAULT_CANDIDATE_CAP = 10_000


@dataclass(frozen=True)
class FixedStructure:
    """A user-supplied inner network; contributes one candidate over its own inputs."""

    name: str
    network: BayesianNetwork
    y_name: str

    def inputs(self) -> list[str]:
        return [n for n in self.network.names if n != self.y_name]


@dataclass
class CandidateFamily:
    y: Variable
    inputs: list[Variable]
    structures: list = field(default_factory=lambda: ["trivial", "naive"])
    subset_search: bool = True

    def generators(self) -> list[tuple[str, Callable | FixedStructure]]:
        out = []
        for s in self.structures:
            if isinstance(s, FixedStructure):
                out.append((s.name, s))
            elif isinstance(s, str):
                if s not in GENERATORS:
                    raise ValueError(f"unknown structure generator {s!r}")
                out.append((s, GENERATORS[s]))
            else:
                name, fn = s
                out.append((name, fn))
        return out


@dataclass(frozen=True)
class Candidate:
    id: str
    structure: str
    subset: tuple[str, ...]
    ebnc: Ebnc


def _subsets(n: int, search: bool):
    if not search:
        yield tuple(range(n))
        return
    for size in range(n + 1):
        yield from itertools.combinations(range(n), size)


def enumerate_candidates(family: CandidateFamily, cap: int = DEFAULT_CANDIDATE_CAP) -> list[Candidate]:
    """Subsets by size then lexicographically (input order); generators in declared order."""
    gens = family.generators()
    n = len(family.inputs)
    n_generated = sum(1 for _, g in gens if not isinstance(g, FixedStructure))
    n_fixed = len(gens) - n_generated
    count = n_generated * (2**n if family.subset_search else 1) + n_fixed
    if count > cap:
        raise CapExceeded(f"{count} candidates exceed the cap of {cap}")

    names = [v.name for v in family.inputs]
    out = []
    for subset in _subsets(n, family.subset_search):
        chosen = tuple(names[i] for i in subset)
        for gname, gen in gens:
            if isinstance(gen, FixedStructure):
                continue
            e = gen(family.y, [family.inputs[i] for i in subset])
            out.append(Candidate(f"{gname}[{','.join(chosen)}]", gname, chosen, e))
    for gname, gen in gens:
        if isinstance(gen, FixedStructure):
            net = gen.network
            if gen.y_name not in net.names:
                raise NetworkError(f"structure {gname!r} has no class variable {gen.y_name!r}")
            e = Ebnc(net, net.index(gen.y_name))
            chosen = tuple(e.input_names)
            out.append(Candidate(f"{gname}[{','.join(chosen)}]", gname, chosen, e))
    return out


@dataclass(frozen=True)
class RankedCandidate:
    id: str
    structure: str
    subset: tuple[str, ...]
    score: float
    dimension: int


@dataclass
class SelectionResult:
    ranked: list[RankedCandidate]
    method: str
    excluded: list[str] = field(default_factory=list)

    @property
    def winner(self) -> RankedCandidate:
        return self.ranked[0]

    def records(self) -> list[str]:
        out = [f"{i}\t{c.id}\t{c.structure}\t{{{','.join(c.subset)}}}\t{c.score:.9g}\t{c.dimension}"
               for i, c in enumerate(self.ranked, start=1)]
        out.extend(f"excluded\t{cid}" for cid in self.excluded)
        out.append(f"winner\t{self.winner.id}")
        return out

    def to_text(self) -> str:
        lines = [f"method = {self.method} (class-local scores)",
                 f"{'rank':>4}  {'candidate':<32} {'structure':<10} {'subset':<24} {'score':>16} {'d':>4}"]
        for i, c in enumerate(self.ranked, start=1):
            subset = "{" + ",".join(c.subset) + "}"
            lines.append(f"{i:>4}  {c.id:<32} {c.structure:<10} {subset:<24} {c.score:>16.9g} {c.dimension:>4}")
        for cid in self.excluded:
            lines.append(f"excluded: {cid} (negative Hessian not positive definite)")
        lines.append(f"winner = {self.winner.id}")
        return "\n".join(lines) + "\n"


def select(family: CandidateFamily, data: Dataset, score_method: str = "bic", seed: int = 0,
           restarts: int = 5, prior=None, cap: int = DEFAULT_CANDIDATE_CAP) -> SelectionResult:
    """Score every candidate's class-local term and rank them.

    Ties go to the smaller dimension, then the candidate id.
    """
    candidates = enumerate_candidates(family, cap)
    scored, excluded = [], []
    for c in candidates:
        if score_method == "bic":
            res = bic_score(c.ebnc, data, restarts=restarts, seed=seed)
        elif score_method == "laplace":
            res = laplace_score(c.ebnc, data, prior=prior, restarts=restarts, seed=seed)
        else:
            raise ValueError(f"unknown score method {score_method!r}")
        if res.excluded or not math.isfinite(res.total):
            excluded.append(c.id)
            continue
        node = res.per_node[0]
        scored.append(RankedCandidate(c.id, c.structure, c.subset, res.total, node.dimension))
    if not scored:
        raise EbncError("every candidate was excluded")
    scored.sort(key=lambda c: (-c.score, c.dimension, c.id))
    return SelectionResult(scored, score_method, excluded)
