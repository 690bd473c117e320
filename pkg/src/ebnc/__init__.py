"""Embedded Bayesian network classifiers."""

from .data import Dataset, parse_dataset, read_dataset, sample_dataset, write_dataset
from .dimension import (
    DimensionReport,
    build_eta_psi,
    build_kappa_system,
    check_theta_eta_open,
    dimension_blockwise,
    dimension_global,
    phi_values,
)
from .inference import (
    Ebnc,
    LogOddsTable,
    classify,
    conditional_distribution,
    full_log_odds_table,
    log_odds,
    softmax,
)
from .netfile import format_network, parse_network, read_network, write_network
from .network import BayesianNetwork, Variable, build_network, joint_probability, ordering_y_late
from .oracle import RankProbe, exact_trivial_marginal, exhaustive_posterior, numeric_jacobian_rank
from .scoring import (
    DirichletLogOddsPrior,
    EbncNetwork,
    GaussianPrior,
    ScoreResult,
    bic_score,
    fit_map,
    fit_ml,
    laplace_score,
    local_log_likelihood,
    local_log_likelihood_gradient,
)
from .search import CandidateFamily, SelectionResult, enumerate_candidates, select

__all__ = [name for name in dir() if not name.startswith("_")]
