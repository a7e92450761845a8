"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented status codes without a lookup table.
"""


class MultibandError(Exception):
    exit_code = 1


class ConfigError(MultibandError, ValueError):
    exit_code = 2


class DataError(MultibandError, ValueError):
    exit_code = 3


class NumericalError(MultibandError, ArithmeticError):
    exit_code = 4


# spectral model
class OverlappingBlocks(DataError):
    pass


class AsymmetricSpectrum(DataError):
    pass


class ZeroLevel(DataError):
    pass


class InfeasiblePlacement(ConfigError):
    pass


class GridMismatch(DataError):
    pass


# synthesis / shapes
class SizeMismatch(DataError):
    pass


class DimensionError(ConfigError):
    pass


class DomainError(ConfigError):
    pass


# solves
class RankDeficient(NumericalError):
    pass


class SingularSystem(NumericalError):
    def __init__(self, message, condition_number=float("inf")):
        super().__init__(f"{message} (condition number {condition_number:.3g})")
        self.condition_number = condition_number


class ImaginaryResidue(NumericalError):
    pass


class DegenerateCovariance(NumericalError):
    pass


class ZeroReference(NumericalError):
    pass


# real-data ingestion
class EmptySupport(DataError):
    pass


class InsufficientData(DataError):
    pass


class NonNumericCell(DataError):
    pass
