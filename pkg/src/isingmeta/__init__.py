"""Meta-learning for Ising model structure estimation.

Pooled l1-regularized logistic regressions recover the support union of
a family of related Ising models; a support-restricted regression then
estimates a novel task from far fewer samples.  The package also ships
exact small-model oracles (enumeration), a Gibbs sampler, recovery
diagnostics (Fisher eigenvalue and incoherence conditions, pooled-score
bias), and a seeded synthetic experiment harness with a batch CLI.
"""

from .core import (
    IsingParameter,
    NodeView,
    conditional_prob,
    exact_joint_distribution,
    node_loss,
    node_loss_gradient,
    pair_count,
    pair_from_index,
    pair_index,
    read_edge_list,
    sample_exact,
    spin_configurations,
    validate_spins,
    variance_weight,
    write_edge_list,
)
from .diagnostics import (
    BracketingError,
    FisherReport,
    SingularMatrixError,
    dependency_check,
    find_zero_bias_coupling,
    incoherence_check,
    pooled_score_bias,
    pooled_score_bias_norm,
    population_fisher,
    sample_fisher,
    triangle_two_edge_family,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    ParseError,
    ResultRow,
    ingest_samples,
    parse_config_file,
    run_novel_experiment,
    run_union_experiment,
)
from .generate import (
    BernoulliMaskDelta,
    FiniteSupportDelta,
    GenerationError,
    NoDelta,
    TaskFamily,
    bernoulli_mask_delta,
    load_family,
    mixed_couplings,
    random_max_degree_graph,
    sample_task_family,
    save_family,
)
from .gibbs import gibbs_sample, write_samples_csv
from .recovery import (
    RecoveryResult,
    ScoreResult,
    SignedEdgeSet,
    edge_inclusion_threshold,
    estimate_novel,
    f1_score,
    lambda_novel,
    lambda_pooled,
    recover_support_union,
    score,
)
from .solver import (
    SolverConfig,
    SolverReport,
    kkt_residual,
    pooled_node_loss,
    pooled_node_loss_gradient,
    solve_node_l1,
    solve_node_restricted,
)

__version__ = "0.1.0"
