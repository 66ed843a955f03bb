"""Bayesian structure learning for Gaussian DAG models with a known ordering.

Exact DAG-Wishart posterior scoring and sampling, hybrid stochastic graph
search, penalized-likelihood baselines, and reproducible simulation
harnesses.
"""

__version__ = "0.1.0"

from .baselines import (
    GridSpec,
    Method,
    Metrics,
    SolutionPath,
    bic_score,
    cscs_fit,
    lasso_dag_fit,
    path_fit_and_select,
    quantile_lambdas,
    structure_metrics,
)
from .dag import (
    CholeskyParam,
    Dag,
    PerturbCase,
    compose,
    enumerate_all_dags,
    modified_cholesky,
    perturb,
    support_dag,
)
from .diagnostics import AssumptionReport, AsymptoticConfig, assumption_diagnostics
from .errors import (
    ConfigError,
    DagWishartError,
    DegenerateWeights,
    DimensionMismatch,
    EmptyPool,
    ImproperPosterior,
    InfeasibleEdgeCount,
    InvalidShape,
    NotConverged,
    NotPositiveDefinite,
    NumericalError,
    SupportViolation,
    TooFewRows,
    TooLarge,
)
from .experiments import (
    EnumerationReport,
    ExperimentConfig,
    ResultTable,
    exact_enumeration_study,
    run_search_pipeline,
    run_sim_ratio,
    run_sim_selection,
    stream,
)
from .linalg import log_det_pd, principal_submatrix, schur_conditional
from .search import (
    CandidatePool,
    Scorer,
    cv_candidates,
    hill_climb,
    select_best,
    shotgun_search,
    threshold_path,
)
from .synth import TrueModel, default_hyper, gen_true_model, sample_data
from .wishart import (
    DagWishartHyper,
    DataStats,
    NonLocalConfig,
    dag_wishart_factor_logpdf,
    gaussian_loglik,
    log_norm_const,
    log_posterior_ratio,
    log_prior_dag,
    log_score,
    log_unnorm_density,
    mc_marginal_loglik,
    nonlocal_log_prior,
    nonlocal_mc_score,
    sample_dag_wishart,
    sample_posterior,
)
