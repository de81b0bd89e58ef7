"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class;
plain ValueError/TypeError are reserved for programming errors.
"""


class GaugePhaseError(Exception):
    """Base class for all package-specific errors."""


class DegreeOverflow(GaugePhaseError):
    """Form degree pushed past the dimension of the region."""


class DegreeMismatch(GaugePhaseError):
    """Operation received a form of the wrong degree."""


class PairingMismatch(GaugePhaseError):
    """Wedge pairing incompatible with the operand value types."""


class DegenerateMetric(GaugePhaseError):
    """|det g| fell below the nondegeneracy floor at some node."""


class NoSlice(GaugePhaseError):
    """Region carries no designated hypersurface."""


class UnknownGroup(GaugePhaseError):
    """Group tag not in the registry."""


class BadBackground(GaugePhaseError):
    """Background connection violates its field equation beyond tolerance."""


class NotKilling(GaugePhaseError):
    """Symmetry parameter fails its covariant-constancy requirement."""


class FDDomainError(GaugePhaseError):
    """Finite-difference displacement left the domain of an extractor."""


class VanishingModulus(GaugePhaseError):
    """Polar dressing undefined where the matter modulus vanishes."""


class SingularTetrad(GaugePhaseError):
    """Tetrad not invertible at some node."""


class BadPatch(GaugePhaseError):
    """Requested coordinate patch touches a singularity of the chart."""


class SolverFailure(GaugePhaseError):
    """Iterative solve did not reach its tolerance."""
