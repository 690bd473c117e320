"""Command-line interface: ``ebnc {dim,classify,fit,score,learn,sample,verify}``.

Scores printed by ``score`` and ``learn`` are class-local: they cover only
the local term of the class variable, never the full joint.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, format_dataset, read_dataset, sample_dataset
from .dimension import check_theta_eta_open, dimension_blockwise, dimension_global
from .errors import EbncError, NonBinaryVariable, SchemaMismatch
from .inference import DEFAULT_CAP, Ebnc, full_log_odds_table, log_odds_many, softmax
from .netfile import read_network
from .network import BayesianNetwork, Variable
from .oracle import RankProbe, numeric_jacobian_rank, posterior_table
from .scoring import GaussianPrior, bic_score, fit_ml, laplace_score
from .search import CandidateFamily, FixedStructure, select
from .structures import GENERATORS

log = logging.getLogger("ebnc")

COMMANDS = ("dim", "classify", "fit", "score", "learn", "sample", "verify")


@dataclass
class RunConfig:
    command: str
    network: str | None = None
    data: str | None = None
    out: str | None = None
    y: str = "Y"
    seed: int = 0
    method: str = "bic"
    restarts: int = 5
    inner: str | None = None
    subset_search: bool = True
    cap: int = DEFAULT_CAP
    verify: bool = False
    n: int = 0
    output_format: str = "text"
    extra: dict = field(default_factory=dict)


def _g(x: float) -> str:
    return f"{x:.9g}"


def _infer_schema(path) -> list[Variable]:
    """Variables from a CSV alone: labels sorted, so the smallest label is the reference."""
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        seen = [set() for _ in header]
        for row in reader:
            for s, cell in zip(seen, row):
                if cell.strip():
                    s.add(cell.strip())
    out = []
    for name, labels in zip(header, seen):
        labels = sorted(labels)
        if len(labels) < 2:
            raise SchemaMismatch(f"column {name!r} shows fewer than 2 states; supply --network for its schema")
        out.append(Variable(name, tuple(labels)))
    return out


def _load(cfg: RunConfig) -> tuple[BayesianNetwork | None, Dataset | None]:
    net = read_network(cfg.network) if cfg.network else None
    data = None
    if cfg.data:
        schema = list(net.variables) if net is not None else _infer_schema(cfg.data)
        data = read_dataset(cfg.data, schema)
    return net, data


def _ebnc_from_network(net: BayesianNetwork, y: str) -> Ebnc:
    if y not in net.names:
        raise SchemaMismatch(f"network has no class variable {y!r}")
    return Ebnc(net, net.index(y))


def _local_model(cfg: RunConfig, net, data: Dataset) -> Ebnc:
    """The classifier to fit or score: ``--inner`` wins, otherwise the network itself."""
    kind = cfg.inner
    if kind is None:
        if net is None:
            kind = "trivial"
        else:
            return _ebnc_from_network(net, cfg.y)
    if kind.startswith("file:"):
        return _ebnc_from_network(read_network(kind[5:]), cfg.y)
    if kind not in GENERATORS:
        raise SchemaMismatch(f"unknown inner structure {kind!r}")
    if cfg.y not in data.names:
        raise SchemaMismatch(f"dataset has no class column {cfg.y!r}")
    inputs = [v for v in data.variables if v.name != cfg.y]
    return GENERATORS[kind](data.variable(cfg.y), inputs)


def cmd_dim(cfg: RunConfig, out) -> int:
    net, _ = _load(cfg)
    e = _ebnc_from_network(net, cfg.y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = dimension_global(e, cfg.cap)
    print(g.to_text(), end="", file=out)
    try:
        b = dimension_blockwise(e, cfg.cap)
    except NonBinaryVariable as exc:
        print(f"method = blockwise\nnot applicable: {exc}", file=out)
        b = None
    else:
        print(b.to_text(), end="", file=out)
    ok = True
    if b is not None:
        ok = g.dimension == b.dimension
        print(f"agreement = {'yes' if ok else 'NO'} (d = {g.dimension} from both methods)" if ok
              else f"agreement = NO (global {g.dimension}, blockwise {b.dimension})", file=out)
    if cfg.verify:
        r = numeric_jacobian_rank(e, RankProbe(seed=cfg.seed), cfg.cap)
        match = r == g.dimension
        print(f"numeric rank = {r} ({'matches' if match else 'DIFFERS'})", file=out)
        ok = ok and match
    return 0 if ok else 3


def cmd_classify(cfg: RunConfig, out) -> int:
    net, data = _load(cfg)
    e = _ebnc_from_network(net, cfg.y)
    xs = data.columns(e.input_names)
    probs = softmax(log_odds_many(e, xs)) if data.n else np.zeros((0, e.r_y))
    labels = e.inner.variables[e.y].state_labels
    print("row\tpredicted\t" + "\t".join(f"p({lab})" for lab in labels), file=out)
    for i, p in enumerate(probs, start=1):
        print(f"{i}\t{labels[int(np.argmax(p))]}\t" + "\t".join(_g(v) for v in p), file=out)
    return 0


def cmd_fit(cfg: RunConfig, out) -> int:
    net, data = _load(cfg)
    e = _local_model(cfg, net, data)
    basis = dimension_global(e, cfg.cap)
    fit = fit_ml(e, basis, data, cfg.restarts, cfg.seed)
    lines = [f"# class = {e.y_name}", f"# inputs = {','.join(e.input_names)}",
             f"# d = {basis.dimension}", f"# log_likelihood = {_g(fit.log_likelihood_at_opt)}",
             f"# converged = {'yes' if any(fit.converged) else 'no'}"]
    lines += [f"phi_{j}\t{_g(v)}" for j, v in enumerate(fit.phi_hat, start=1)]
    text = "\n".join(lines) + "\n"
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="", file=out)
    return 0


def cmd_score(cfg: RunConfig, out) -> int:
    net, data = _load(cfg)
    e = _local_model(cfg, net, data)
    if cfg.method == "bic":
        res = bic_score(e, data, restarts=cfg.restarts, seed=cfg.seed)
    else:
        res = laplace_score(e, data, prior=GaussianPrior(), restarts=cfg.restarts, seed=cfg.seed)
    if cfg.output_format == "records":
        print("\n".join(res.records()), file=out)
    else:
        print(res.to_text(), end="", file=out)
    return 0


def cmd_learn(cfg: RunConfig, out) -> int:
    net, data = _load(cfg)
    if cfg.y not in data.names:
        raise SchemaMismatch(f"dataset has no class column {cfg.y!r}")
    structures = []
    for kind in (cfg.inner or "trivial,naive").split(","):
        kind = kind.strip()
        if kind.startswith("file:"):
            structures.append(FixedStructure(kind, read_network(kind[5:]), cfg.y))
        else:
            structures.append(kind)
    family = CandidateFamily(
        data.variable(cfg.y),
        [v for v in data.variables if v.name != cfg.y],
        structures,
        cfg.subset_search,
    )
    res = select(family, data, cfg.method, seed=cfg.seed, restarts=cfg.restarts)
    if cfg.output_format == "records":
        print("\n".join(res.records()), file=out)
    else:
        print(res.to_text(), end="", file=out)
    return 0


def cmd_sample(cfg: RunConfig, out) -> int:
    net, _ = _load(cfg)
    text = format_dataset(sample_dataset(net, cfg.n, cfg.seed))
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="", file=out)
    return 0


def cmd_verify(cfg: RunConfig, out) -> int:
    net, _ = _load(cfg)
    e = _ebnc_from_network(net, cfg.y)
    ok = True
    table = full_log_odds_table(e, cfg.cap).probabilities()
    err = float(np.max(np.abs(table - posterior_table(e))))
    good = err <= 1e-10
    ok &= good
    print(f"inference vs enumeration: max abs error {err:.3g} [{'ok' if good else 'FAIL'}]", file=out)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = dimension_global(e, cfg.cap)
    r = numeric_jacobian_rank(e, RankProbe(seed=cfg.seed), cfg.cap)
    dims = [("global", g.dimension)]
    try:
        dims.append(("blockwise", dimension_blockwise(e, cfg.cap).dimension))
        w = check_theta_eta_open(e)
        print(f"triangular witness: {len(w.witness)} pivots [ok]", file=out)
    except NonBinaryVariable:
        pass
    for name, d in dims:
        good = d == r
        ok &= good
        print(f"{name} d = {d} vs numeric rank {r} [{'ok' if good else 'FAIL'}]", file=out)
    return 0 if ok else 3


HANDLERS = {
    "dim": cmd_dim,
    "classify": cmd_classify,
    "fit": cmd_fit,
    "score": cmd_score,
    "learn": cmd_learn,
    "sample": cmd_sample,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ebnc", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--network", help="network file")
    p.add_argument("--data", help="CSV dataset with a header row")
    p.add_argument("--out", help="output file (sample, fit)")
    p.add_argument("--y", default="Y", help="class variable name (default: Y)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("bic", "laplace"), default="bic")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--inner", help="trivial|naive|chain|file:PATH (learn accepts a comma list)")
    p.add_argument("--subset-search", choices=("on", "off"), default="on")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="row cap for log-odds tables")
    p.add_argument("--verify", action="store_true", help="also run the numeric-rank oracle (dim)")
    p.add_argument("-n", type=int, default=0, help="number of cases to sample")
    p.add_argument("--format", dest="output_format", choices=("text", "records"), default="text")
    return p


def _setup_logging():
    level = os.environ.get("EBNC_LOG", "").lower()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel({"debug": logging.DEBUG, "info": logging.INFO}.get(level, logging.WARNING))


def run(cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    seed = cfg.seed
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return HANDLERS[cfg.command](cfg, out)


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        network=args.network,
        data=args.data,
        out=args.out,
        y=args.y,
        seed=args.seed,
        method=args.method,
        restarts=args.restarts,
        inner=args.inner,
        subset_search=args.subset_search == "on",
        cap=args.cap,
        verify=args.verify,
        n=args.n,
        output_format=args.output_format,
    )
    try:
        return run(cfg)
    except EbncError as exc:
        print(f"ebnc {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"ebnc {cfg.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
