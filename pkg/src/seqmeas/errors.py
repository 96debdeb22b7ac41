"""Exception types shared across the package."""


class SeqMeasError(Exception):
    """Base class for all seqmeas errors."""


class DimensionMismatch(SeqMeasError):
    """Operands act on Hilbert spaces of different dimensions."""


class NotHermitian(SeqMeasError):
    """Matrix deviates from its conjugate transpose beyond tolerance."""


class NoConvergence(SeqMeasError):
    """Eigensolver failed to converge."""


class InvalidOrder(SeqMeasError):
    """Moment order outside the supported set {0, 1, 2}."""


class NonHermitianSum(SeqMeasError):
    """Gaussian pair sum is not Hermitian-symmetric: moments came out complex."""


class QuadratureFailure(SeqMeasError):
    """Adaptive quadrature could not reach the requested accuracy."""


class ZeroLikelihood(SeqMeasError):
    """Conditioning outcome has (numerically) vanishing marginal likelihood."""


class DegenerateDirection(SeqMeasError):
    """State is an eigenstate of the observable; no orthogonal direction."""


class NotOrthogonal(SeqMeasError):
    """Supplied state is not orthogonal to the reference state."""


class DenominatorNonPositive(SeqMeasError):
    """Closed-form denominator left its provably positive domain."""


class RejectionStall(SeqMeasError):
    """Rejection sampler acceptance rate collapsed below the floor."""


class VarianceInconsistency(SeqMeasError):
    """Extracted variance fell below zero by more than roundoff allows."""


class ConfigParseError(SeqMeasError):
    """Chain configuration file is malformed; message carries field diagnostics."""


class InvalidRange(SeqMeasError):
    """Sweep range is empty, inverted, or otherwise unusable."""
