"""Exception types shared across the toolkit."""


class NotPositiveDefinite(Exception):
    """A matrix required to be positive definite has a nonpositive pivot."""


class ConvergenceFailure(Exception):
    """An iterative eigensolver exhausted its iteration budget."""


class Singular(Exception):
    """A linear system is singular within the conditioning bound."""


class SingularDemixing(Exception):
    """A demixing matrix collapsed (determinant magnitude underflowed)."""


class SignalTooShort(Exception):
    """The input waveform is shorter than one analysis frame."""


class ShapeMismatch(Exception):
    """Array dimensions disagree with the given configuration."""


class ZeroReference(Exception):
    """A metric reference signal has zero energy."""


class DegenerateSpan(Exception):
    """Reference signals do not span the requested decomposition."""


class InfeasibleSINR(Exception):
    """The requested mixture cannot realize the target SINR."""
