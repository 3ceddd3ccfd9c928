"""Class label autoencoder for zero-shot learning.

A numpy library implementing the full pipeline: a Bartels-Stewart
Sylvester solver for encoder training, multi-semantic class-structure
graphs fused under simplex weights, unseen-class label prediction, and
iterative structure evolution, plus file formats, a synthetic benchmark
generator, and evaluation utilities.
"""

from .dataset import SemanticSpace, ZslDataset
from .errors import (
    CapacityError,
    ClaError,
    ConvergenceError,
    DimensionError,
    FileFormatError,
    NumericError,
    ParseError,
    SingularMatrixError,
    TrainingError,
    ValidationError,
)
from .evaluation import (
    EvaluationReport,
    cross_validate_lambda,
    per_class_top_n,
    report_to_json,
    report_to_text,
)
from .io import (
    DatasetManifest,
    load_dataset,
    load_manifest,
    load_matrix,
    load_model,
    save_dataset,
    save_manifest,
    save_matrix,
    save_model,
)
from .linalg import (
    SchurFactorization,
    covariance,
    real_schur,
    ridge_solve,
    solve_sylvester,
    solve_sylvester_oracle,
)
from .model import (
    ClaModel,
    EvolutionState,
    build_training_sources,
    evolve,
    fit_dataset,
    fit_seen,
    one_hot_labels,
    optimize_beta,
    predict_labels,
    predict_scores,
    reconstruction_diagnostics,
    seen_objective,
    train_a_s,
    update_gamma,
)
from .simplex import minimize_quadratic_on_simplex, project_to_simplex
from .structures import (
    ClassPrototypes,
    FusionWeights,
    StructureSet,
    build_semantic_structures,
    build_visual_structures,
    class_prototypes,
    fuse_structures,
    regularized_inverse_covariance,
    similarity_matrix,
)
from .synthetic import SyntheticConfig, generate_synthetic

__version__ = "0.1.0"
