"""Causal DAG recovery from covariance matrices via pivoted incremental
Cholesky factorization, with latent-variable detection under equal error
variance."""

__version__ = "0.1.0"

from .cdcf import CdcfConfig, RecoveryResult, cdcf, extract_adjacency, select_pivot
from .graph import (
    CyclicGraphError,
    IdentifiabilityReport,
    LayerDecomposition,
    WeightedDag,
    identifiability_report,
    layer_decomposition,
    order_matches_layers,
    topological_order,
)
from .latent import (
    LatentConfig,
    LatentOptState,
    LatentRecoveryResult,
    OptimizerConfig,
    build_cs,
    cdcf_plus,
    covariance_update,
    detect_latent_position,
    estimate_noise_std,
    latent_loss,
    latent_loss_grad,
    solve_latent,
)
from .linalg import (
    CholState,
    NonPositiveDefiniteError,
    cholesky_extend,
    full_cholesky,
    inverse_extend,
    rank1_update,
    tri_solve_transposed,
)
from .metrics import (
    StructureScore,
    best_shd_over_latent_relabeling,
    confusion_scores,
    max_weight_error,
    shd,
)
from .simulate import (
    CovMatrix,
    NoiseSpec,
    assign_weights,
    empirical_covariance,
    gen_er,
    gen_sf,
    population_covariance,
    sample_sem,
)

__all__ = [
    "CdcfConfig", "RecoveryResult", "cdcf", "extract_adjacency", "select_pivot",
    "CyclicGraphError", "IdentifiabilityReport", "LayerDecomposition", "WeightedDag",
    "identifiability_report", "layer_decomposition", "order_matches_layers", "topological_order",
    "LatentConfig", "LatentOptState", "LatentRecoveryResult", "OptimizerConfig",
    "build_cs", "cdcf_plus", "covariance_update", "detect_latent_position",
    "estimate_noise_std", "latent_loss", "latent_loss_grad", "solve_latent",
    "CholState", "NonPositiveDefiniteError", "cholesky_extend", "full_cholesky",
    "inverse_extend", "rank1_update", "tri_solve_transposed",
    "StructureScore", "best_shd_over_latent_relabeling", "confusion_scores",
    "max_weight_error", "shd",
    "CovMatrix", "NoiseSpec", "assign_weights", "empirical_covariance",
    "gen_er", "gen_sf", "population_covariance", "sample_sem",
    "__version__",
]
