"""Non-unitary matrix joint diagonalization for complex blind source separation.

The package certifies when a joint diagonalizer of Hermitian- and
transpose-congruence matrix sets is essentially unique (unique up to
permutation and diagonal scaling), constructs explicit counterexample
diagonalizers when it is not, solves the two-matrix mixed case algebraically
(pseudo-uncorrelating transform), and estimates the second- and higher-order
statistics those matrices come from.
"""

from .core import (
    CongruenceKind,
    DiagonalStack,
    GLElement,
    GmElement,
    TaggedMatrix,
    TaggedMatrixSet,
    apply_congruence,
    gm_pattern_distance,
    hermitian_skew_split,
    is_essentially_equivalent,
    offdiag_residual,
)
from .linalg import (
    HermitianEVD,
    TakagiFactorization,
    general_evd,
    hermitian_evd,
    principal_inv_sqrt_diag,
    symmetric_orthogonalize,
    takagi,
)
from .solvers import PutResult, put, put_identifiability_check, sut, two_matrix_same_kind
from .statistics import (
    ConjugationPattern,
    CumulantSlice,
    LaggedCorrelation,
    SignalBlock,
    autocorrelation,
    circularity_coefficient,
    covariance,
    cumulant,
    cumulant_slice,
    lagged_cumulant_slice,
    pseudo_autocorrelation,
    pseudo_covariance,
    windowed_covariances,
)
from .simulation import (
    ExperimentConfig,
    ExperimentTruth,
    SourceSpec,
    amari_index,
    demix,
    generate,
    mix,
    run_experiment,
)
from .uniqueness import (
    UniquenessReport,
    collinearity,
    complex_cosine,
    identifiability_master,
    unique_thm1,
    unique_thm2,
    unique_thm3,
    witness_thm1,
    witness_thm2,
    witness_thm3,
)

__version__ = "0.1.0"
