"""Exception types shared across the package."""


class CapacityError(Exception):
    """Register (or cluster) would exceed the qubit cap."""


class ProtocolStateError(RuntimeError):
    """A protocol step was attempted out of order (e.g. decode before disclosure)."""


class ImpossibleOutcomeError(RuntimeError):
    """An outcome combination with zero amplitude was observed or requested."""
