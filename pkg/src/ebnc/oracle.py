"""Brute-force reference computations used to cross-check the fast paths.

Nothing here reuses the log-odds machinery: posteriors come from summing
the joint distribution over every configuration, and Jacobians from finite
differences of those posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import CapExceeded, InvalidAlpha, TooLarge
from .inference import DEFAULT_CAP, Ebnc
from .network import BayesianNetwork, all_configurations

MAX_BINARY_EQUIVALENT = 20


def _log_joint_all(net: BayesianNetwork, configs: np.ndarray, log_cpts) -> np.ndarray:
    out = np.zeros(configs.shape[0])
    for i in range(len(net)):
        row = np.zeros(configs.shape[0], dtype=np.int64)
        for p in net.parents[i]:
            row = row * net.state_count(p) + configs[:, p]
        out += log_cpts[i][row, configs[:, i]]
    return out


def _check_size(net: BayesianNetwork):
    bits = sum(np.log2(r) for r in net.state_counts())
    if bits > MAX_BINARY_EQUIVALENT + 1e-9:
        raise TooLarge(f"network has {bits:.1f} binary-equivalent variables, limit is {MAX_BINARY_EQUIVALENT}")


def exhaustive_posterior(inner: BayesianNetwork, y: int, x: dict[int, int]) -> np.ndarray:
    """``p(y | x)`` by summing the joint over every configuration.

    ``x`` maps node index to state; nodes not in ``x`` (other than ``y``) are
    summed out.
    """
    _check_size(inner)
    configs = all_configurations(inner.state_counts())
    mask = np.ones(configs.shape[0], dtype=bool)
    for node, s in x.items():
        mask &= configs[:, node] == s
    configs = configs[mask]
    joint = np.exp(_log_joint_all(inner, configs, [np.log(t) for t in inner.cpts]))
    post = np.bincount(configs[:, y], weights=joint, minlength=inner.state_count(y))
    return post / post.sum()


def posterior_table(e: Ebnc, cpts=None) -> np.ndarray:
    """``p(y | x)`` for every input configuration, shape ``(q_y, r_y)``."""
    net = e.inner
    _check_size(net)
    tables = net.cpts if cpts is None else cpts
    log_cpts = [np.log(t) for t in tables]
    counts = net.state_counts()
    configs = all_configurations(counts)
    lj = _log_joint_all(net, configs, log_cpts)
    x_idx = np.zeros(configs.shape[0], dtype=np.int64)
    for v in e.inputs:
        x_idx = x_idx * counts[v] + configs[:, v]
    joint = np.zeros((e.q_y, e.r_y))
    np.add.at(joint, (x_idx, configs[:, e.y]), np.exp(lj))
    return joint / joint.sum(axis=1, keepdims=True)


def oracle_log_odds_table(e: Ebnc, cpts=None) -> np.ndarray:
    post = posterior_table(e, cpts)
    return np.log(post[:, 1:]) - np.log(post[:, :1])


@dataclass
class RankProbe:
    """Random interior CPT points at which the numeric Jacobian rank is measured."""

    n_points: int = 5
    seed: int = 0
    tolerance: float = 1e-6
    step: float = 1e-6
    low: float = 0.1
    high: float = 0.9
    per_point_ranks: list[int] = field(default_factory=list)
    singular_values: list[np.ndarray] = field(default_factory=list)

    @property
    def rank(self) -> int:
        return max(self.per_point_ranks) if self.per_point_ranks else 0


def _random_point(net: BayesianNetwork, rng, low, high):
    out = []
    for i in range(len(net)):
        t = rng.uniform(low, high, size=(net.parent_config_count(i), net.state_count(i)))
        out.append(t / t.sum(axis=1, keepdims=True))
    return out


def theta_jacobian(e: Ebnc, cpts, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the full log-odds table w.r.t. free CPT entries.

    The free coordinates are the first ``r_i - 1`` entries of every CPT row;
    the last entry absorbs each perturbation.
    """
    cols = []
    for i, t in enumerate(cpts):
        for row in range(t.shape[0]):
            for s in range(t.shape[1] - 1):
                plus = [c.copy() for c in cpts]
                minus = [c.copy() for c in cpts]
                plus[i][row, s] += step
                plus[i][row, -1] -= step
                minus[i][row, s] -= step
                minus[i][row, -1] += step
                diff = oracle_log_odds_table(e, plus) - oracle_log_odds_table(e, minus)
                cols.append(diff.ravel() / (2 * step))
    return np.column_stack(cols)


def numeric_jacobian_rank(e: Ebnc, probe: RankProbe | None = None, cap: int = DEFAULT_CAP) -> int:
    """Max over probe points of the numerical rank of the CPT -> log-odds Jacobian."""
    probe = RankProbe() if probe is None else probe
    if (e.r_y - 1) * e.q_y > cap:
        raise CapExceeded(f"log-odds table exceeds the cap of {cap} rows")
    rng = np.random.default_rng(probe.seed)
    probe.per_point_ranks.clear()
    probe.singular_values.clear()
    for _ in range(probe.n_points):
        point = _random_point(e.inner, rng, probe.low, probe.high)
        jac = theta_jacobian(e, point, probe.step)
        sv = np.linalg.svd(jac, compute_uv=False)
        probe.singular_values.append(sv)
        r = int(np.sum(sv > probe.tolerance * sv[0])) if sv.size and sv[0] > 0 else 0
        probe.per_point_ranks.append(r)
    return probe.rank


def exact_trivial_marginal(counts, alpha) -> float:
    """Log Dirichlet-multinomial marginal likelihood, summed over parent configurations.

    ``counts`` has shape ``(q, r)``; ``alpha`` broadcasts against it.
    """
    counts = np.atleast_2d(np.asarray(counts, dtype=float))
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), counts.shape)
    if np.any(~np.isfinite(alpha)) or np.any(alpha <= 0):
        raise InvalidAlpha("Dirichlet pseudo-counts must be positive")
    a0 = alpha.sum(axis=1)
    n0 = counts.sum(axis=1)
    per_row = gammaln(a0) - gammaln(a0 + n0) + (gammaln(alpha + counts) - gammaln(alpha)).sum(axis=1)
    return float(per_row.sum())
