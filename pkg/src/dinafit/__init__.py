"""Scalable DINA cognitive-diagnosis fitting.

Joint estimation of binary mastery profiles and the item-attribute loading
matrix from large binary response matrices, via stochastic-approximation EM
with an entry-wise prior centered on a reference loading matrix.  Includes
a block-design simulator, permutation-aligned recovery metrics, and
embedding-based reference construction; hot sampling kernels run compiled
(Cython) with a pure-numpy fallback selected at import.
"""

from .cluster import (
    ClusterSpec,
    Dendrogram,
    EmbeddingMatrix,
    agglomerate,
    penalized_distances,
    preprocess_filter,
    prune_to_q,
)
from .engine import (
    FitResult,
    SaemConfig,
    SufficientStats,
    finalize,
    fit,
    loading_log_odds,
    m_step,
    mastery_log_odds,
    sa_update,
    sample_loading_sweep,
    sample_mastery_sweep,
    step_size,
)
from .errors import ConfigError, DimensionError, DinafitError, DomainError
from .kernels import available_backends, default_backend_name, get_backend
from .metrics import (
    RecoveryReport,
    align_columns,
    group_mastery_profiles,
    mastery_accuracy_association,
    recovery_rates,
    rmse_params,
)
from .model import (
    AttributeMatrix,
    ItemParams,
    QMatrix,
    ResponseMatrix,
    ideal_response,
    ideal_response_matrix,
    joint_loglik,
    logistic,
    response_loglik,
    response_prob,
)
from .prior import (
    PriorSpec,
    ReferenceQ,
    prior_log_odds,
    prior_log_odds_matrix,
    prior_prob,
    prior_prob_matrix,
)
from .simulate import (
    SimDesign,
    build_block_q,
    gen_attributes,
    gen_responses,
    perturb_q,
    simulate,
)

__version__ = "0.1.0"
