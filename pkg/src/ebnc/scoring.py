"""Fitting embedded classifiers in basis coordinates and scoring them.

The log odds are linear in the basis coordinates ``phi`` (``lambda =
lambda_map @ phi``), so each local likelihood is a softmax-linear model:

    L(phi) = sum_l log softmax(lambda(x_l))[y_l]

``L`` is the *log* likelihood throughout.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .data import Dataset
from .dimension import DimensionReport, compute_dimension, structure_signature
from .errors import BasisMismatch, ConvergenceWarning, DataError, NetworkError
from .inference import Ebnc, config_index, log_softmax, softmax

log = logging.getLogger(__name__)

GRAD_TOL = 1e-6
MAX_ITER = 10_000
HESSIAN_STEP = 1e-4
ROUNDING = 8 * np.finfo(float).eps


# ---------------------------------------------------------------------------
# sufficient statistics


@dataclass(frozen=True)
class LocalStats:
    """Class counts per observed input configuration plus their design rows.

    ``design[m]`` maps phi to the log-odds vector of configuration
    ``configs[m]``; shape ``(n_obs, r_y - 1, d)``.
    """

    configs: np.ndarray
    counts: np.ndarray
    design: np.ndarray

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def local_stats(e: Ebnc, basis: DimensionReport, data: Dataset) -> LocalStats:
    if basis.extras.get("signature") != structure_signature(e):
        raise BasisMismatch("basis was computed for a different classifier structure")
    if basis.lambda_map is None or basis.lambda_map.shape != ((e.r_y - 1) * e.q_y, basis.dimension):
        raise BasisMismatch("basis carries no usable lambda map for this classifier")
    data.check_variable(e.inner.variables[e.y])
    for i in e.inputs:
        data.check_variable(e.inner.variables[i])
    y = data.column(e.y_name)
    xs = data.columns(e.input_names)
    idx = config_index(e.input_state_counts, xs) if xs.shape[1] else np.zeros(data.n, dtype=np.int64)
    idx = np.atleast_1d(idx)
    configs, inverse = np.unique(idx, return_inverse=True)
    counts = np.zeros((configs.size, e.r_y))
    np.add.at(counts, (inverse, y), 1.0)
    design = basis.lambda_map.reshape(e.q_y, e.r_y - 1, basis.dimension)[configs].astype(float)
    return LocalStats(configs, counts, design)


def _loglik(stats: LocalStats, phi) -> float:
    lam = stats.design @ phi
    return float(np.sum(stats.counts * log_softmax(lam)))


def _grad(stats: LocalStats, phi) -> np.ndarray:
    lam = stats.design @ phi
    p = softmax(lam)
    resid = stats.counts[:, 1:] - stats.counts.sum(axis=1, keepdims=True) * p[:, 1:]
    return np.einsum("mk,mkd->d", resid, stats.design)


def _softmax_information(design: np.ndarray, weights: np.ndarray, phi) -> np.ndarray:
    """``sum_m w_m D_m^T (diag(q) - q q^T) D_m`` with ``q`` the non-reference probabilities."""
    q = softmax(design @ phi)[:, 1:]
    cov = q[:, :, None] * np.eye(q.shape[1]) - q[:, :, None] * q[:, None, :]
    return np.einsum("m,mkd,mkl,mle->de", weights, design, cov, design)


def _information(stats: LocalStats, phi) -> np.ndarray:
    """Negative Hessian of the local log-likelihood (used only to precondition ascent)."""
    return _softmax_information(stats.design, stats.counts.sum(axis=1), phi)


def _check_phi(phi, basis: DimensionReport) -> np.ndarray:
    phi = np.asarray(phi, dtype=float).reshape(-1)
    if phi.shape[0] != basis.dimension:
        raise BasisMismatch(f"phi has length {phi.shape[0]}, basis dimension is {basis.dimension}")
    if not np.all(np.isfinite(phi)):
        raise ValueError("phi must be finite")
    return phi


def local_log_likelihood(phi, e: Ebnc, basis: DimensionReport, data: Dataset) -> float:
    """``sum_l log p(y_l | x_l, phi)`` with log odds rebuilt from ``phi``."""
    phi = _check_phi(phi, basis)
    return _loglik(local_stats(e, basis, data), phi)


def local_log_likelihood_gradient(phi, e: Ebnc, basis: DimensionReport, data: Dataset) -> np.ndarray:
    phi = _check_phi(phi, basis)
    return _grad(local_stats(e, basis, data), phi)


def predictive_table(phi, basis: DimensionReport, e: Ebnc) -> np.ndarray:
    """``p(y | x, phi)`` for every input configuration, shape ``(q_y, r_y)``."""
    lam = (basis.lambda_map @ _check_phi(phi, basis)).reshape(e.q_y, e.r_y - 1)
    return softmax(lam)


# ---------------------------------------------------------------------------
# priors


@dataclass(frozen=True)
class GaussianPrior:
    """Independent N(mean, sd^2) on every basis coordinate."""

    sd: float = 10.0
    mean: float = 0.0

    def log_density(self, phi, basis: DimensionReport | None = None) -> float:
        z = (np.asarray(phi, dtype=float) - self.mean) / self.sd
        return float(-0.5 * np.sum(z * z) - z.size * (math.log(self.sd) + 0.5 * math.log(2 * math.pi)))

    def gradient(self, phi, basis: DimensionReport | None = None) -> np.ndarray:
        return -(np.asarray(phi, dtype=float) - self.mean) / self.sd**2

    def curvature(self, phi, basis: DimensionReport | None = None) -> np.ndarray:
        return np.eye(np.size(phi)) / self.sd**2


@dataclass(frozen=True)
class DirichletLogOddsPrior:
    """Dirichlet(alpha) on each conditional distribution, expressed in log-odds space.

    Only defined for bases whose lambda map is a square unimodular matrix
    (the trivial classifier under the global basis), where the density of
    phi equals the density of the log odds.
    """

    alpha: tuple[float, ...] | float = 1.0

    def _alpha(self, r: int) -> np.ndarray:
        a = np.broadcast_to(np.asarray(self.alpha, dtype=float), (r,))
        if np.any(a <= 0):
            raise ValueError("alpha must be positive")
        return a

    @staticmethod
    def _lam(phi, basis: DimensionReport) -> np.ndarray:
        m = basis.lambda_map
        if m is None or m.shape[0] != m.shape[1] or abs(round(np.linalg.det(m))) != 1:
            raise BasisMismatch("Dirichlet log-odds prior needs a square unimodular lambda map")
        return m @ phi

    def log_density(self, phi, basis: DimensionReport) -> float:
        lam = self._lam(phi, basis)
        r = basis.extras["r_y"] if "r_y" in basis.extras else 2
        a = self._alpha(r)
        lp = log_softmax(lam.reshape(-1, r - 1))
        norm = gammaln(a.sum()) - gammaln(a).sum()
        return float(np.sum(lp * a) + norm * lp.shape[0])

    def gradient(self, phi, basis: DimensionReport) -> np.ndarray:
        lam = self._lam(phi, basis)
        r = basis.extras["r_y"] if "r_y" in basis.extras else 2
        a = self._alpha(r)
        p = softmax(lam.reshape(-1, r - 1))
        g_lam = (a[1:] - a.sum() * p[:, 1:]).ravel()
        return basis.lambda_map.T @ g_lam

    def curvature(self, phi, basis: DimensionReport) -> np.ndarray:
        self._lam(phi, basis)
        r = basis.extras["r_y"] if "r_y" in basis.extras else 2
        design = basis.lambda_map.reshape(-1, r - 1, basis.dimension).astype(float)
        return _softmax_information(design, np.full(design.shape[0], self._alpha(r).sum()), phi)


# ---------------------------------------------------------------------------
# optimization


@dataclass
class RestartResult:
    start: np.ndarray
    phi: np.ndarray
    objective: float
    log_likelihood: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)


@dataclass
class FittedEbnc:
    e: Ebnc
    basis: DimensionReport
    phi_hat: np.ndarray
    log_likelihood_at_opt: float
    objective_at_opt: float
    restarts_used: int
    converged: list[bool]
    runs: list[RestartResult]

    @property
    def best_run(self) -> RestartResult:
        return max(self.runs, key=lambda r: r.objective)

    def predictive_table(self) -> np.ndarray:
        return predictive_table(self.phi_hat, self.basis, self.e)


def _ascend(f, grad, phi0, tol=GRAD_TOL, max_iter=MAX_ITER, curvature=None) -> RestartResult:
    """Gradient ascent with Armijo backtracking; accepted steps never lower ``f``
    by more than floating-point rounding of its value.

    With ``curvature`` (a positive semidefinite estimate of ``-f''``) the
    search direction is preconditioned and the trial step is 1; without it
    the trial step is Barzilai-Borwein.
    """
    phi = np.array(phi0, dtype=float)
    val, g = f(phi), grad(phi)
    history = [val]
    trial = 1.0 / max(1.0, float(np.max(np.abs(g), initial=0.0)))
    it = 0
    while it < max_iter:
        gn = float(np.max(np.abs(g), initial=0.0))
        if gn < tol:
            return RestartResult(np.array(phi0, dtype=float), phi, val, math.nan, it, True, history)
        direction = g
        if curvature is not None:
            direction = _preconditioned(curvature(phi), g)
            trial = 1.0
        slope = float(g @ direction)
        step = trial
        accepted = False
        while step > 1e-300:
            cand = phi + step * direction
            cv = f(cand)
            if cv >= val + 1e-4 * step * slope:
                cg = grad(cand)
                accepted = True
                break
            if cv >= val - ROUNDING * max(1.0, abs(val)):
                # f cannot resolve the change: accept only if the gradient shrinks
                cg = grad(cand)
                if float(np.max(np.abs(cg))) < gn:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
        s, yv = cand - phi, cg - g
        curv = -float(s @ yv)
        trial = float(s @ s) / curv if curv > 0 else 2.0 * step
        phi, val, g = cand, cv, cg
        history.append(val)
        it += 1
    gn = float(np.max(np.abs(g), initial=0.0))
    return RestartResult(np.array(phi0, dtype=float), phi, val, math.nan, it, gn < tol, history)


def _preconditioned(info: np.ndarray, g: np.ndarray) -> np.ndarray:
    ridge = 1e-12 * max(1.0, float(np.max(np.diag(info), initial=0.0)))
    try:
        chol = np.linalg.cholesky(info + ridge * np.eye(g.size))
    except np.linalg.LinAlgError:
        return g
    return np.linalg.solve(chol.T, np.linalg.solve(chol, g))


def _fit(e, basis, data, restarts, seed, prior=None) -> FittedEbnc:
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    stats = local_stats(e, basis, data)
    d = basis.dimension
    if prior is None:
        f = lambda p: _loglik(stats, p)  # noqa: E731
        grad = lambda p: _grad(stats, p)  # noqa: E731
        curvature = lambda p: _information(stats, p)  # noqa: E731
    else:
        f = lambda p: _loglik(stats, p) + prior.log_density(p, basis)  # noqa: E731
        grad = lambda p: _grad(stats, p) + prior.gradient(p, basis)  # noqa: E731
        if hasattr(prior, "curvature"):
            curvature = lambda p: _information(stats, p) + prior.curvature(p, basis)  # noqa: E731
        else:
            curvature = lambda p: _information(stats, p)  # noqa: E731

    rng = np.random.default_rng(seed)
    starts = [np.zeros(d)] + [rng.uniform(-1.0, 1.0, size=d) for _ in range(restarts)]
    runs = []
    for k, start in enumerate(starts):
        run = _ascend(f, grad, start, curvature=curvature)
        run.log_likelihood = _loglik(stats, run.phi)
        log.debug("restart %d: objective %.9g after %d iterations (converged=%s)", k, run.objective, run.iterations, run.converged)
        runs.append(run)
    # max by value, ties to the earliest restart
    best = max(range(len(runs)), key=lambda k: (runs[k].objective, -k))
    if not any(r.converged for r in runs):
        warnings.warn(
            f"no restart reached gradient sup-norm < {GRAD_TOL} within {MAX_ITER} iterations",
            ConvergenceWarning,
            stacklevel=3,
        )
    b = runs[best]
    return FittedEbnc(e, basis, b.phi, b.log_likelihood, b.objective, len(runs), [r.converged for r in runs], runs)


def fit_ml(e: Ebnc, basis: DimensionReport, data: Dataset, restarts: int = 5, seed: int = 0) -> FittedEbnc:
    """Maximum-likelihood phi: zero start plus ``restarts`` uniform[-1, 1] starts."""
    return _fit(e, basis, data, restarts, seed)


def fit_map(e: Ebnc, basis: DimensionReport, data: Dataset, prior=None, restarts: int = 5, seed: int = 0) -> FittedEbnc:
    return _fit(e, basis, data, restarts, seed, GaussianPrior() if prior is None else prior)


# ---------------------------------------------------------------------------
# scores


@dataclass
class NodeScore:
    node: str
    log_likelihood: float
    dimension: int
    penalty: float | None = None        # BIC: d/2 log N
    log_det: float | None = None        # Laplace: log |A|
    log_prior: float | None = None      # Laplace: log p(phi_map)
    value: float = math.nan             # contribution to the total, prior excluded
    flags: tuple[str, ...] = ()
    fit: FittedEbnc | None = None


@dataclass
class ScoreResult:
    method: str
    n: int
    per_node: list[NodeScore]
    total: float
    excluded: bool = False

    def records(self) -> list[str]:
        """Machine-readable lines: node, L, d, penalty or log|A|, flags; then the total."""
        out = []
        for s in self.per_node:
            extra = s.penalty if self.method == "bic" else s.log_det
            extra_txt = "NA" if extra is None or not np.isfinite(extra) else f"{extra:.9g}"
            flags = ",".join(s.flags) if s.flags else "-"
            out.append(f"{s.node}\t{s.log_likelihood:.9g}\t{s.dimension}\t{extra_txt}\t{flags}")
        out.append(f"total\t{self.total:.9g}")
        return out

    def to_text(self) -> str:
        lines = [f"method = {self.method}", f"N = {self.n}"]
        for s in self.per_node:
            if self.method == "bic":
                lines.append(
                    f"{s.node}: L = {s.log_likelihood:.9g}, d = {s.dimension}, "
                    f"penalty = {s.penalty:.9g}, score = {s.value:.9g}"
                )
            else:
                ld = "NA" if s.log_det is None or not np.isfinite(s.log_det) else f"{s.log_det:.9g}"
                lines.append(
                    f"{s.node}: L = {s.log_likelihood:.9g}, d = {s.dimension}, log|A| = {ld}, "
                    f"log prior = {s.log_prior:.9g}, score = {s.value:.9g}"
                    + (f" [{', '.join(s.flags)}]" if s.flags else "")
                )
        lines.append(f"total = {self.total:.9g}" + (" (excluded)" if self.excluded else ""))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EbncNetwork:
    """A Bayesian network whose every local distribution is an embedded classifier.

    Each local classifier's class variable is the node; its inputs are the
    node's parents in the outer network.
    """

    locals: tuple[Ebnc, ...]

    def __post_init__(self):
        object.__setattr__(self, "locals", tuple(self.locals))
        names = [e.y_name for e in self.locals]
        if len(set(names)) != len(names):
            raise NetworkError("each node may carry only one local classifier")
        parents = {e.y_name: set(e.input_names) for e in self.locals}
        for p in set().union(*parents.values()) if parents else ():
            if p not in parents:
                raise NetworkError(f"parent {p!r} has no local model")
        # outer graph must be acyclic
        state = {}

        def visit(v):
            if state.get(v) == 1:
                raise NetworkError("outer network contains a cycle")
            if state.get(v) == 2:
                return
            state[v] = 1
            for p in parents[v]:
                visit(p)
            state[v] = 2

        for v in parents:
            visit(v)


def _as_locals(model) -> list[Ebnc]:
    if isinstance(model, Ebnc):
        return [model]
    if isinstance(model, EbncNetwork):
        return list(model.locals)
    return list(model)


def _bases_for(locals_, bases, dimension_method):
    out = []
    for k, e in enumerate(locals_):
        b = None if bases is None else bases[k]
        if b is None:
            b = compute_dimension(e, dimension_method)
        b.extras.setdefault("r_y", e.r_y)
        out.append(b)
    return out


def _distinct_runs(fit: FittedEbnc, tol: float = 1e-4) -> list[RestartResult]:
    kept: list[RestartResult] = []
    for r in sorted(fit.runs, key=lambda r: -r.objective):
        if all(np.max(np.abs(r.phi - k.phi), initial=0.0) > tol for k in kept):
            kept.append(r)
    return kept


def bic_score(model, data: Dataset, restarts: int = 5, seed: int = 0, bases=None,
              dimension_method: str = "global", combine: str = "best") -> ScoreResult:
    """Per node ``L(phi_ml) - d/2 log N``, summed; nodes are fitted independently."""
    if data.n == 0:
        raise DataError("cannot score an empty dataset")
    locals_ = _as_locals(model)
    bases = _bases_for(locals_, bases, dimension_method)
    logn = math.log(data.n)
    nodes = []
    for k, (e, b) in enumerate(zip(locals_, bases)):
        fit = fit_ml(e, b, data, restarts, seed=[seed, k])
        pen = 0.5 * b.dimension * logn
        if combine == "sum":
            value = float(logsumexp([r.log_likelihood - pen for r in _distinct_runs(fit)]))
        else:
            value = fit.log_likelihood_at_opt - pen
        flags = () if any(fit.converged) else ("not_converged",)
        nodes.append(NodeScore(e.y_name, fit.log_likelihood_at_opt, b.dimension, penalty=pen,
                               value=value, flags=flags, fit=fit))
    return ScoreResult("bic", data.n, nodes, float(sum(s.value for s in nodes)))


def negative_hessian(stats: LocalStats, phi: np.ndarray, step: float = HESSIAN_STEP) -> np.ndarray:
    """``-d^2 L / dphi^2`` by central differences of the analytic gradient, symmetrized."""
    d = phi.size
    h = np.zeros((d, d))
    for j in range(d):
        hj = step * max(1.0, abs(phi[j]))
        e = np.zeros(d)
        e[j] = hj
        h[:, j] = (_grad(stats, phi + e) - _grad(stats, phi - e)) / (2 * hj)
    return -0.5 * (h + h.T)


def laplace_score(model, data: Dataset, prior=None, restarts: int = 5, seed: int = 0, bases=None,
                  dimension_method: str = "global", combine: str = "best") -> ScoreResult:
    """``log p(phi_map) + sum_i [L_i + d_i/2 log 2pi - 1/2 log|A_i|]``.

    A node whose ``A_i`` is not positive definite is flagged and the whole
    model is marked excluded (its total becomes ``-inf``).
    """
    if data.n == 0:
        raise DataError("cannot score an empty dataset")
    prior = GaussianPrior() if prior is None else prior
    locals_ = _as_locals(model)
    bases = _bases_for(locals_, bases, dimension_method)
    nodes = []
    excluded = False
    for k, (e, b) in enumerate(zip(locals_, bases)):
        fit = fit_map(e, b, data, prior, restarts, seed=[seed, k])
        stats = local_stats(e, b, data)
        runs = _distinct_runs(fit) if combine == "sum" else [fit.best_run]
        values, logdets, lps, flags = [], [], [], []
        for r in runs:
            a = negative_hessian(stats, r.phi)
            try:
                chol = np.linalg.cholesky(a)
                logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
            except np.linalg.LinAlgError:
                logdet = math.nan
            lp = prior.log_density(r.phi, b)
            values.append(r.log_likelihood + 0.5 * b.dimension * math.log(2 * math.pi) - 0.5 * logdet + lp)
            logdets.append(logdet)
            lps.append(lp)
        if not np.isfinite(logdets[0]):
            flags.append("hessian_not_pd")
            excluded = True
        if not any(fit.converged):
            flags.append("not_converged")
        finite = [v for v in values if np.isfinite(v)]
        combined = float(logsumexp(finite)) if finite else -math.inf
        # report the prior separately so the total is sum(value) + sum(log_prior)
        best_lp = lps[0]
        nodes.append(NodeScore(e.y_name, fit.best_run.log_likelihood, b.dimension, log_det=logdets[0],
                               log_prior=best_lp, value=combined - best_lp, flags=tuple(flags), fit=fit))
    total = -math.inf if excluded else float(sum(s.value + s.log_prior for s in nodes))
    return ScoreResult("laplace", data.n, nodes, total, excluded=excluded)


def score(model, data: Dataset, method: str = "bic", **kw) -> ScoreResult:
    if method == "bic":
        return bic_score(model, data, **{k: v for k, v in kw.items() if k != "prior"})
    if method == "laplace":
        return laplace_score(model, data, **kw)
    raise ValueError(f"unknown score method {method!r}")
