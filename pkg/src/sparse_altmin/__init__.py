"""Alternating minimization for sparse coding with provable recovery.

Submodules: ``genmodel`` (synthetic data), ``decoding`` (threshold decode),
``updates`` (update directions and projection), ``descent`` (driver and
diagnostics), ``initialization`` (pairwise spectral init), ``metrics``,
``numerics``, ``fileio`` and ``cli``.
"""

from .decoding import DecodeConfig, decode_batch, projected_decoding_matrix, sign_recovery_rate, threshold_decode
from .descent import (
    AuditReport,
    CorrelationParams,
    DescentAborted,
    DescentConfig,
    DescentTrace,
    audit_convergence_bound,
    correlation_slack,
    default_correlation_params,
    default_eta,
    detect_floor,
    fit_rate,
    quadratic_descent,
    run_descent,
)
from .fileio import MatrixFormatError, read_matrix, write_matrix, write_trace_csv
from .genmodel import (
    ModelParams,
    SparseCode,
    SupportStats,
    coherence,
    generate_dictionary,
    generate_samples,
    perturb_dictionary,
    sample_codes,
    stream,
    support_stats,
)
from .initialization import (
    CandidateList,
    InitConfig,
    InitIncomplete,
    analytic_moment,
    labeled_pairs,
    pairwise_init,
    pairwise_init_from_samples,
    uniqueness_test,
    weighted_moment,
)
from .metrics import NearnessReport, align, match_columns, nearness
from .numerics import NonConvergenceError, clip_singular_values, spectral_norm, top_singular_pair
from .updates import ProjectionSetB, estimate_gradient, project_to_B, update_step

__version__ = "0.1.0"
