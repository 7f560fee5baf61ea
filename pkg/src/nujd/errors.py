"""Exception and warning types shared across the package."""


class NujdError(Exception):
    """Base class for all domain errors raised by this package."""


class DimensionMismatch(NujdError):
    """Operands have incompatible shapes."""


class NonFiniteEntries(NujdError):
    """A matrix or signal contains NaN or infinite entries."""


class SymmetryViolation(NujdError):
    """A matrix does not belong to the symmetry class its tag claims."""


class SingularMatrix(NujdError):
    """A matrix required to be invertible is numerically singular."""


class PatternViolation(NujdError):
    """A matrix is not a diagonal-times-permutation pattern."""


class SingularPseudoCovariance(NujdError):
    """A Takagi singular value fell below the invertibility floor.

    Carries the offending index in ``args[1]`` when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class OrthogonalizationFailure(NujdError):
    """W^T W is numerically singular; the complex-orthogonal polar part does not exist."""


class DefectiveMatrix(NujdError):
    """An eigendecomposition was requested of a (numerically) defective matrix."""


class DegenerateSpectrum(NujdError):
    """Eigenvalues coincide where the algorithm needs them pairwise distinct."""


class NotPositiveDefinite(NujdError):
    """The Hermitian operand must be positive definite and is not."""


class SingularSecondMatrix(NujdError):
    """The second matrix of a two-matrix solve is numerically singular."""


class InvalidPrecondition(NujdError):
    """The caller invoked an operation outside its stated precondition."""


class WitnessVerificationError(NujdError):
    """An internally constructed non-uniqueness witness failed its self-check."""


class ZeroPowerChannel(NujdError):
    """A statistic that divides by signal power received an all-zero channel."""


class ConfigError(NujdError):
    """An experiment or CLI configuration is invalid."""


class DegenerateSpectrumWarning(UserWarning):
    """Non-fatal notice that an eigenvalue gap is too small to trust the result."""


class RankDeficiencyWarning(UserWarning):
    """Non-fatal notice that a sample statistic is rank deficient by construction."""
