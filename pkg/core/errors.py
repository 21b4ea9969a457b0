from __future__ import annotations


class PDHSError(Exception):
    """Base class; ``exit_code`` is what the CLI returns when it surfaces."""

    exit_code: int = 4


# -------------------------
# Configuration / input (exit 2)
# -------------------------

class ConfigError(PDHSError):
    exit_code = 2

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class InsufficientSamples(PDHSError):
    exit_code = 2


class NonSymmetric(PDHSError, ValueError):
    exit_code = 2


class BadBlockStructure(PDHSError, ValueError):
    exit_code = 2


class NotDissipative(PDHSError, ValueError):
    exit_code = 2


# -------------------------
# Structural (exit 3)
# -------------------------

class KalmanFails(PDHSError):
    exit_code = 3


# -------------------------
# Numerical (exit 4)
# -------------------------

class NumericalFailure(PDHSError):
    exit_code = 4


class NumericOverflow(NumericalFailure):
    pass


class NonFiniteSymbol(NumericalFailure):
    pass


class NonFinite(NumericalFailure):
    pass


class StiffnessGuard(NumericalFailure):
    pass


class NoConvergence(NumericalFailure):
    def __init__(self, message: str, constraint: str | None = None):
        self.constraint = constraint
        super().__init__(message)


class QuadratureUnresolved(NumericalFailure):
    pass


class RegularityFail(NumericalFailure):
    pass


class SupportOverflow(NumericalFailure):
    pass


class ZeroLocalization(NumericalFailure):
    pass


class ZeroNorm(NumericalFailure):
    pass


class NonPositiveNorm(NumericalFailure):
    pass


# -------------------------
# Bad arguments (exit 2)
# -------------------------

class GridMismatch(PDHSError, ValueError):
    exit_code = 2


class NonPositiveParameter(PDHSError, ValueError):
    exit_code = 2


class ParameterOrder(PDHSError, ValueError):
    exit_code = 2


class PreconditionFailed(PDHSError, ValueError):
    exit_code = 2
