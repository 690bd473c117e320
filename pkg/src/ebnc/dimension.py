"""Model dimension and a non-redundant parameterization of an embedded classifier.

Two independent routes are provided:

* :func:`dimension_global` writes every log odds as an integer combination of
  log CPT ratios (the kappa parameters) and takes the exact rank of the full
  coefficient matrix.  Works for any state counts.
* :func:`dimension_blockwise` (binary variables only) switches the inputs on
  one at a time, which splits the Jacobian into one small block per input.

Both report a basis ``phi`` with ``phi = R @ source_params`` (``R`` in reduced
row echelon form) and an integer ``lambda_map`` with ``lambda = lambda_map @ phi``.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import CapExceeded, NonBinaryVariable, TriangularizationFailed
from .exact import rank, rref
from .inference import DEFAULT_CAP, Ebnc
from .network import BayesianNetwork, all_configurations, ordering_y_late


def _fmt_assign(net: BayesianNetwork, nodes: Sequence[int], states: Sequence[int]) -> str:
    return ",".join(
        f"{net.variables[v].name}={net.variables[v].state_labels[s]}" for v, s in zip(nodes, states)
    )


def _row_of(net: BayesianNetwork, node: int, assignment: dict[int, int]) -> int:
    row = 0
    for p in net.parents[node]:
        row = row * net.state_count(p) + assignment[p]
    return row


def structure_signature(e: Ebnc) -> tuple:
    """Everything a basis depends on: structure, state labels, class and input order."""
    net = e.inner
    return (
        tuple((v.name, v.state_labels) for v in net.variables),
        tuple(sorted(net.edges)),
        e.y,
        e.inputs,
    )


# ---------------------------------------------------------------------------
# global method


@dataclass(frozen=True)
class KappaParam:
    node: int                      # y itself or a child of y
    k: int                         # class state (>= 1) of the numerator
    state: int                     # state of ``node`` (for the y term equals k)
    context: tuple[int, ...]       # parent nodes other than y
    context_states: tuple[int, ...]
    name: str


@dataclass(frozen=True)
class KappaSystem:
    """``lambda = matrix @ kappa`` with rows ordered (configuration, class state)."""

    params: tuple[KappaParam, ...]
    matrix: np.ndarray

    @property
    def param_names(self) -> list[str]:
        return [p.name for p in self.params]


def build_kappa_system(e: Ebnc, cap: int = DEFAULT_CAP) -> KappaSystem:
    net, y, r_y = e.inner, e.y, e.r_y
    n_rows = (r_y - 1) * e.q_y
    if n_rows > cap:
        raise CapExceeded(f"{n_rows} log-odds rows exceed the cap of {cap}")

    ylabel = net.variables[y].state_labels
    params: list[KappaParam] = []
    index: dict[tuple, int] = {}

    pa_y = net.parents[y]
    for cfg in itertools.product(*(range(net.state_count(p)) for p in pa_y)):
        for k in range(1, r_y):
            ctx = _fmt_assign(net, pa_y, cfg)
            name = f"kappa({net.variables[y].name}={ylabel[k]}" + (f"|{ctx})" if ctx else ")")
            index[(y, k, k, cfg)] = len(params)
            params.append(KappaParam(y, k, k, tuple(pa_y), tuple(cfg), name))

    for c in net.children[y]:
        ctx_nodes = tuple(p for p in net.parents[c] if p != y)
        for cfg in itertools.product(*(range(net.state_count(p)) for p in ctx_nodes)):
            for j in range(net.state_count(c)):
                for k in range(1, r_y):
                    ctx = _fmt_assign(net, ctx_nodes, cfg)
                    own = _fmt_assign(net, [c], [j])
                    cond = (ctx + ";" if ctx else "") + f"{net.variables[y].name}={ylabel[k]}"
                    index[(c, k, j, cfg)] = len(params)
                    params.append(KappaParam(c, k, j, ctx_nodes, tuple(cfg), f"kappa({own}|{cond})"))

    xs = all_configurations(e.input_state_counts)
    states = np.zeros((xs.shape[0], len(net)), dtype=np.int64)
    states[:, list(e.inputs)] = xs
    matrix = np.zeros((n_rows, len(params)), dtype=np.int64)
    for row_x, st in enumerate(states):
        for k in range(1, r_y):
            r = row_x * (r_y - 1) + (k - 1)
            matrix[r, index[(y, k, k, tuple(int(st[p]) for p in pa_y))]] += 1
            for c in net.children[y]:
                ctx = tuple(int(st[p]) for p in net.parents[c] if p != y)
                matrix[r, index[(c, k, int(st[c]), ctx)]] += 1
    return KappaSystem(tuple(params), matrix)


def kappa_values(e: Ebnc, system: KappaSystem) -> np.ndarray:
    """Numeric kappa vector at the CPTs of ``e``."""
    net, y = e.inner, e.y
    out = np.empty(len(system.params))
    for t, p in enumerate(system.params):
        assign = dict(zip(p.context, p.context_states))
        logt = net.log_cpt(p.node)
        if p.node == y:
            row = _row_of(net, y, assign)
            out[t] = logt[row, p.k] - logt[row, 0]
        else:
            assign[y] = p.k
            num = logt[_row_of(net, p.node, assign), p.state]
            assign[y] = 0
            out[t] = num - logt[_row_of(net, p.node, assign), p.state]
    return out


@dataclass
class DimensionReport:
    """Dimension ``d`` plus a basis expressed over the source parameters.

    ``basis[j][t]`` is the coefficient of ``param_names[t]`` in ``phi_j``.
    ``lambda_map`` has one row per log-odds entry (configuration-major).
    """

    dimension: int
    basis: list[list[Fraction]]
    param_names: list[str]
    method: str
    lambda_map: np.ndarray | None = None
    block_ranks: list[int] | None = None
    certified: bool = True
    extras: dict = field(default_factory=dict)

    def basis_matrix(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.basis]).reshape(
            self.dimension, len(self.param_names)
        )

    def to_text(self) -> str:
        lines = [f"method = {self.method}", f"d = {self.dimension}"]
        if not self.certified:
            lines.append("note = upper bound (a child of the class has fewer states than the class)")
        if self.block_ranks is not None:
            lines.append("block ranks = " + " + ".join(str(r) for r in self.block_ranks))
        for j, row in enumerate(self.basis, start=1):
            terms = []
            for coef, name in zip(row, self.param_names):
                if coef == 0:
                    continue
                sign = "-" if coef < 0 else "+"
                mag = abs(coef)
                terms.append((sign, f"{mag}*{name}"))
            if not terms:
                body = "0"
            else:
                body = ("-" if terms[0][0] == "-" else "") + terms[0][1]
                body += "".join(f" {s} {t}" for s, t in terms[1:])
            lines.append(f"phi_{j} = {body}")
        return "\n".join(lines) + "\n"


def _basis_from_rref(matrix: np.ndarray) -> tuple[list[list[Fraction]], list[int]]:
    if matrix.size == 0:
        return [], []
    return rref(matrix.tolist())


def kappa_map_is_open(e: Ebnc) -> bool:
    """Whether CPTs -> kappa has an open image, so the kappa rank is the dimension.

    For a child with ``r_c`` states the kappa block of one parent context has
    ``(r_y - 1) * r_c`` coordinates but only ``r_y * (r_c - 1)`` free CPT
    entries behind it; the image is open exactly when ``r_c >= r_y``.
    """
    return all(e.inner.state_count(c) >= e.r_y for c in e.inner.children[e.y])


def dimension_global(e: Ebnc, cap: int = DEFAULT_CAP) -> DimensionReport:
    """Exact rank of the kappa -> lambda coefficient matrix.

    When :func:`kappa_map_is_open` fails the rank is only an upper bound on
    the dimension and the report is marked ``certified=False``.
    """
    system = build_kappa_system(e, cap)
    basis, pivots = _basis_from_rref(system.matrix)
    certified = kappa_map_is_open(e)
    if not certified:
        warnings.warn(
            "a child of the class has fewer states than the class; "
            "the kappa rank is an upper bound on the dimension",
            stacklevel=2,
        )
    return DimensionReport(
        dimension=len(pivots),
        basis=basis,
        param_names=system.param_names,
        method="global",
        lambda_map=system.matrix[:, pivots].copy(),
        certified=certified,
        extras={"system": system, "signature": structure_signature(e), "r_y": e.r_y},
    )


# ---------------------------------------------------------------------------
# blockwise method (binary variables)


@dataclass(frozen=True)
class Term:
    """One summand of the log odds: the class CPT ratio or one child's ratio."""

    node: int                 # y for the class term, otherwise the child
    variables: tuple[int, ...]  # input nodes the term depends on

    def value(self, net: BayesianNetwork, y: int, assign: dict[int, int]) -> float:
        logt = net.log_cpt(self.node)
        if self.node == y:
            row = _row_of(net, y, assign)
            return logt[row, 1] - logt[row, 0]
        a = dict(assign)
        a[y] = 1
        num = logt[_row_of(net, self.node, a), a[self.node]]
        a[y] = 0
        return num - logt[_row_of(net, self.node, a), a[self.node]]


@dataclass(frozen=True)
class EtaParam:
    block: int                # input node switched on (-1 for the intercept)
    term: Term | None
    context: tuple[int, ...]  # earlier input nodes of the term
    context_states: tuple[int, ...]
    name: str


@dataclass(frozen=True)
class Block:
    """Linear map from the eta parameters of one input to its psi coefficients.

    ``guards`` are the earlier inputs whose indicator products select each
    psi coefficient; ``psi_configs[a]`` is their state tuple for row ``a``.
    """

    node: int
    etas: tuple[EtaParam, ...]
    guards: tuple[int, ...]
    psi_configs: tuple[tuple[int, ...], ...]
    psi_names: tuple[str, ...]
    jacobian: np.ndarray

    @property
    def rank(self) -> int:
        return rank(self.jacobian.tolist()) if self.jacobian.size else 0


@dataclass(frozen=True)
class EtaPsiBlocks:
    order: tuple[int, ...]    # turn-on order of the inputs
    terms: tuple[Term, ...]
    blocks: tuple[Block, ...]  # intercept block first, then one per input in order

    @property
    def eta_params(self) -> list[EtaParam]:
        return [p for b in self.blocks for p in b.etas]


def _require_binary(e: Ebnc):
    for v in e.inner.variables:
        if v.state_count != 2:
            raise NonBinaryVariable(
                f"variable {v.name!r} has {v.state_count} states; the blockwise method needs binary variables"
            )


def _terms(e: Ebnc) -> list[Term]:
    net, y = e.inner, e.y
    terms = [Term(y, tuple(net.parents[y]))]
    for c in net.children[y]:
        terms.append(Term(c, tuple(sorted({c, *(p for p in net.parents[c] if p != y)}))))
    return terms


def turn_on_order(e: Ebnc) -> list[int]:
    """Inputs in the network's topological order (ties by index)."""
    ordering, _ = ordering_y_late(e.inner, e.y)
    return [v for v in ordering if v != e.y]


def build_eta_psi(e: Ebnc, cap: int = DEFAULT_CAP) -> EtaPsiBlocks:
    _require_binary(e)
    net, y = e.inner, e.y
    order = turn_on_order(e)
    pos = {v: k for k, v in enumerate(order)}
    terms = _terms(e)
    name = lambda v: net.variables[v].name  # noqa: E731

    intercept_eta = EtaParam(-1, None, (), (), "eta_0")
    blocks = [Block(-1, (intercept_eta,), (), ((),), ("psi_0",), np.ones((1, 1), dtype=np.int64))]

    for i in order:
        involved = [t for t in terms if i in t.variables]
        earlier = {t: tuple(sorted((v for v in t.variables if pos[v] < pos[i]), key=pos.get)) for t in involved}
        guards = tuple(sorted({v for t in involved for v in earlier[t]}, key=pos.get))
        if 2 ** len(guards) > cap:
            raise CapExceeded(f"block for {name(i)!r} has {2 ** len(guards)} rows, cap is {cap}")
        etas = []
        for t in involved:
            ctx = earlier[t]
            for cfg in itertools.product((0, 1), repeat=len(ctx)):
                label = "y" if t.node == y else f"{name(t.node)}"
                cond = _fmt_assign(net, ctx, cfg)
                etas.append(EtaParam(i, t, ctx, cfg, f"eta_{name(i)}({label}" + (f"|{cond})" if cond else ")")))
        psi_configs = tuple(itertools.product((0, 1), repeat=len(guards)))
        jac = np.zeros((len(psi_configs), len(etas)), dtype=np.int64)
        for a, cfg in enumerate(psi_configs):
            assign = dict(zip(guards, cfg))
            for b, eta in enumerate(etas):
                if all(assign[v] == s for v, s in zip(eta.context, eta.context_states)):
                    jac[a, b] = 1
        psi_names = tuple(
            f"psi_{name(i)}" + (f"({_fmt_assign(net, guards, cfg)})" if guards else "") for cfg in psi_configs
        )
        blocks.append(Block(i, tuple(etas), guards, psi_configs, psi_names, jac))
    return EtaPsiBlocks(tuple(order), tuple(terms), tuple(blocks))


def eta_values(e: Ebnc, blocks: EtaPsiBlocks) -> np.ndarray:
    """Numeric eta vector (intercept first) at the CPTs of ``e``."""
    net, y = e.inner, e.y
    zero = {v: 0 for v in e.inputs}
    out = []
    for blk in blocks.blocks:
        for eta in blk.etas:
            if eta.term is None:
                out.append(sum(t.value(net, y, zero) for t in blocks.terms))
                continue
            assign = dict(zero)
            assign.update(zip(eta.context, eta.context_states))
            assign[eta.block] = 1
            on = eta.term.value(net, y, assign)
            assign[eta.block] = 0
            out.append(on - eta.term.value(net, y, assign))
    return np.array(out)


def psi_values(blocks: EtaPsiBlocks, eta: np.ndarray) -> list[np.ndarray]:
    out, start = [], 0
    for blk in blocks.blocks:
        n = len(blk.etas)
        out.append(blk.jacobian @ eta[start:start + n])
        start += n
    return out


def expand_log_odds(e: Ebnc, blocks: EtaPsiBlocks, psi: list[np.ndarray], x) -> float:
    """Evaluate the indicator expansion ``psi_0 + sum_i I(x_i on) psi_i(guards)``."""
    assign = dict(zip(e.inputs, (int(v) for v in x)))
    total = float(psi[0][0])
    for blk, vals in zip(blocks.blocks[1:], psi[1:]):
        if assign[blk.node] == 1:
            a = blk.psi_configs.index(tuple(assign[v] for v in blk.guards))
            total += float(vals[a])
    return total


def dimension_blockwise(e: Ebnc, cap: int = DEFAULT_CAP) -> DimensionReport:
    blocks = build_eta_psi(e, cap)
    n_eta = len(blocks.eta_params)
    basis: list[list[Fraction]] = []
    block_ranks, pivot_cols = [], []
    start = 0
    for blk in blocks.blocks:
        rows, piv = _basis_from_rref(blk.jacobian)
        for r in rows:
            basis.append([Fraction(0)] * start + list(r) + [Fraction(0)] * (n_eta - start - len(r)))
        block_ranks.append(len(piv))
        pivot_cols.append(blk.jacobian[:, piv])
        start += len(blk.etas)
    d = len(basis)

    lam_map = None
    if e.q_y <= cap:
        xs = all_configurations(e.input_state_counts)
        lam_map = np.zeros((xs.shape[0], d), dtype=np.int64)
        lam_map[:, 0] = 1
        col = block_ranks[0]
        node_pos = {v: j for j, v in enumerate(e.inputs)}
        for blk, cols, rk in zip(blocks.blocks[1:], pivot_cols[1:], block_ranks[1:]):
            if rk:
                on = xs[:, node_pos[blk.node]] == 1
                guard_idx = np.zeros(xs.shape[0], dtype=np.int64)
                for g in blk.guards:
                    guard_idx = guard_idx * 2 + xs[:, node_pos[g]]
                lam_map[on, col:col + rk] = cols[guard_idx[on]]
            col += rk
    return DimensionReport(
        dimension=d,
        basis=basis,
        param_names=[p.name for p in blocks.eta_params],
        method="blockwise",
        lambda_map=lam_map,
        block_ranks=block_ranks,
        extras={"blocks": blocks, "signature": structure_signature(e), "r_y": e.r_y},
    )


def source_values(e: Ebnc, report: DimensionReport) -> np.ndarray:
    if report.method == "global":
        return kappa_values(e, report.extras["system"])
    return eta_values(e, report.extras["blocks"])


def phi_values(e: Ebnc, report: DimensionReport) -> np.ndarray:
    """Basis coordinates of the CPT setting carried by ``e``."""
    if report.dimension == 0:
        return np.zeros(0)
    return report.basis_matrix() @ source_values(e, report)


def compute_dimension(e: Ebnc, method: str = "global", cap: int = DEFAULT_CAP) -> DimensionReport:
    if method == "global":
        return dimension_global(e, cap)
    if method == "blockwise":
        return dimension_blockwise(e, cap)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# openness of the theta -> eta map


@dataclass(frozen=True)
class OpennessReport:
    omega_names: tuple[str, ...]
    paired: tuple[tuple[str, str], ...]
    witness: tuple[tuple[str, str], ...]   # (eta, omega) pivots in triangular order


def check_theta_eta_open(e: Ebnc) -> OpennessReport:
    """Build the omega parameters and certify the two openness conditions.

    (a) distinct omegas read disjoint CPT rows, except pairs that differ only
    in the child's own state;  (b) the omega -> eta Jacobian peels into
    triangular form with unit diagonal.  The intercept eta is written as the
    sum of the all-reference omegas.
    """
    blocks = build_eta_psi(e)
    net, y = e.inner, e.y
    zero = {v: 0 for v in e.inputs}

    omegas: list[tuple[Term, tuple[int, ...]]] = []
    omega_index: dict[tuple, int] = {}
    for t in blocks.terms:
        for cfg in itertools.product((0, 1), repeat=len(t.variables)):
            omega_index[(t, cfg)] = len(omegas)
            omegas.append((t, cfg))

    def oname(t: Term, cfg):
        label = "y" if t.node == y else net.variables[t.node].name
        body = _fmt_assign(net, t.variables, cfg)
        return f"omega({label}" + (f"|{body})" if body else ")")

    names = tuple(oname(t, c) for t, c in omegas)

    # (a) CPT rows read by each omega
    reads: dict[frozenset, list[int]] = {}
    for idx, (t, cfg) in enumerate(omegas):
        assign = dict(zip(t.variables, cfg))
        if t.node == y:
            key = frozenset({(y, _row_of(net, y, assign))})
        else:
            a = dict(assign)
            a[y] = 0
            r0 = _row_of(net, t.node, a)
            a[y] = 1
            key = frozenset({(t.node, r0), (t.node, _row_of(net, t.node, a))})
        reads.setdefault(key, []).append(idx)
    paired = []
    for members in reads.values():
        if len(members) == 1:
            continue
        if len(members) != 2:
            raise TriangularizationFailed("more than two omegas share CPT rows")
        (t1, c1), (t2, c2) = omegas[members[0]], omegas[members[1]]
        k = t1.variables.index(t1.node) if t1.node in t1.variables else None
        same_child = t1 == t2 and t1.node != y and k is not None
        if not same_child or [s for j, s in enumerate(c1) if j != k] != [s for j, s in enumerate(c2) if j != k]:
            raise TriangularizationFailed("omegas sharing CPT rows are not a complementary pair")
        paired.append((names[members[0]], names[members[1]]))

    # (b) omega -> eta incidence, then peel columns with a single live entry
    etas = blocks.eta_params
    jac = np.zeros((len(etas), len(omegas)), dtype=np.int64)
    for r, eta in enumerate(etas):
        if eta.term is None:
            for t in blocks.terms:
                jac[r, omega_index[(t, tuple(0 for _ in t.variables))]] += 1
            continue
        assign = dict(zero)
        assign.update(zip(eta.context, eta.context_states))
        for s, sign in ((1, 1), (0, -1)):
            assign[eta.block] = s
            cfg = tuple(assign[v] for v in eta.term.variables)
            jac[r, omega_index[(eta.term, cfg)]] += sign

    live_rows = set(range(len(etas)))
    used_cols: set[int] = set()
    witness = []
    while live_rows:
        progress = False
        for c in range(len(omegas)):
            if c in used_cols:
                continue
            hits = [r for r in live_rows if jac[r, c] != 0]
            if len(hits) == 1 and abs(jac[hits[0], c]) == 1:
                r = hits[0]
                witness.append((etas[r].name, names[c]))
                live_rows.discard(r)
                used_cols.add(c)
                progress = True
        if not progress:
            raise TriangularizationFailed(
                f"{len(live_rows)} eta rows cannot be peeled into triangular form"
            )
    return OpennessReport(names, tuple(paired), tuple(witness))
