"""Exception types raised across the package."""


class BlockIsoError(Exception):
    """Base class for all package errors."""


class EmptyBlock(BlockIsoError):
    """A rectangle contains no design point, so its average is undefined."""


class NoFeasibleBlock(BlockIsoError):
    """No lower corner admits a nonempty block through the query point."""


class NotALattice(BlockIsoError):
    """A lattice-only routine was handed a scattered point set."""


class DegenerateBoundary(BlockIsoError):
    """The effective dimension sits exactly on a phase-transition boundary."""


class MixedDerivativesPresent(BlockIsoError):
    """Critical-order mixed derivatives are nonzero; the constant does not factor."""


class NonFiniteField(BlockIsoError):
    """The sampled limit field produced a non-finite value."""


class ZeroNoise(BlockIsoError):
    """The two-point bound needs a strictly positive noise level."""


class DegenerateFit(BlockIsoError):
    """A log-log rate regression hit a zero median error."""


class ConfigError(BlockIsoError):
    """An experiment configuration is malformed."""
