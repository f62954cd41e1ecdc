"""Exception hierarchy shared by all modules."""


class MultisliceError(Exception):
    """Base class for every error raised by the package."""


class ProfileError(MultisliceError, ValueError):
    """Malformed color profile (non-positive entry, empty list, bad text)."""


class MalformedStateError(MultisliceError, ValueError):
    """A word does not belong to the multislice it is used with."""


class DegenerateSpaceError(MultisliceError, ValueError):
    """Single-color profile: every functional inequality constant is 0/0."""


class CapExceededError(MultisliceError):
    """An exact computation would exceed a configured size cap."""

    def __init__(self, message, cap_name=None, cap=None, requested=None):
        super().__init__(message)
        self.cap_name = cap_name
        self.cap = cap
        self.requested = requested


class ReducibleOperatorError(MultisliceError):
    """The generator has more than one communicating class."""

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


class GraphError(MultisliceError, ValueError):
    """Invalid weighted graph or edge-list file."""


class OptimizationError(MultisliceError):
    """Variational search produced no usable (non-constant) candidate."""


class HorizonError(MultisliceError):
    """A mixing curve never drops below the requested threshold."""


class DomainError(MultisliceError, ValueError):
    """Negative input where a nonnegative observable is required."""
