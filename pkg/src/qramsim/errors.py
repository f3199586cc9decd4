"""Exception hierarchy shared by all qramsim modules."""


class QramError(Exception):
    """Base class for every error raised by qramsim."""


class ValidationError(QramError, ValueError):
    """Invalid user input: bad dataset, layout, parameters or gate."""


class LayoutError(ValidationError):
    """Register layout or basis index is inconsistent."""


class NonUnitaryError(ValidationError):
    """A matrix that must be unitary is not."""


class DatasetError(ValidationError):
    """A dataset violates its invariants (pattern width, duplicates, ...)."""


class NormalizationError(DatasetError):
    """Amplitudes do not have unit norm where unit norm is required."""


class AmplitudeDomainError(ValidationError):
    """An amplitude is outside what the chosen loader can handle."""


class ZeroProbabilityError(QramError, ValueError):
    """Post-selection onto an outcome that has (numerically) zero probability."""


class UnexpressibleGateError(QramError, ValueError):
    """A gate cannot be written in the OpenQASM 2.0 subset without decomposition."""
