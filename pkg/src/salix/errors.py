"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`SalixError`
and carries an ``exit_code`` used by the command-line front end.
"""


class SalixError(Exception):
    exit_code = 1


class ConfigError(SalixError):
    exit_code = 2


class DataError(SalixError):
    exit_code = 3


class SchemaError(DataError):
    pass


class KindError(DataError):
    pass


class UnimputableColumnError(DataError):
    pass


class FeatureMismatchError(DataError):
    def __init__(self, message, offending=()):
        super().__init__(message)
        self.offending = tuple(offending)


class FoldInfeasibleError(DataError):
    pass


class NumericError(SalixError):
    exit_code = 4


class PruningPreconditionError(NumericError):
    pass


class DivergenceError(NumericError):
    def __init__(self, epoch, loss):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss


class DegenerateTreatmentError(NumericError):
    pass


class BudgetError(NumericError):
    pass


class UnsupportedModelError(SalixError):
    exit_code = 2
