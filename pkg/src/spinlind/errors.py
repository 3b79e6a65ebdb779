"""Exception types shared across the package."""


class SpinLindError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(SpinLindError, ValueError):
    """Invalid input data (bad labels, malformed configs, broken invariants)."""


class AccuracyError(SpinLindError, RuntimeError):
    """A numerical routine failed to reach its accuracy target."""


class DomainViolationError(SpinLindError, ValueError):
    """An input state lies outside the domain the dynamical map is defined on."""


class WitnessInapplicableError(SpinLindError, ValueError):
    """The negativity witness has nothing to test (vanishing drive integral)."""


class PoleError(SpinLindError, ZeroDivisionError):
    """Evaluation requested exactly on a non-integrable singularity."""
