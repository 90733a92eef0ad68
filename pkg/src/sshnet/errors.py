"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: parameter/shape errors are usage
problems (1), I/O and parse failures are 2, numerical failures are 3.
"""


class SSHNetError(Exception):
    exit_code = 3


class ParameterError(SSHNetError, ValueError):
    exit_code = 1


class ShapeError(SSHNetError, ValueError):
    exit_code = 1


class InsufficientHistoryError(ShapeError):
    pass


class NumericalError(SSHNetError, ArithmeticError):
    exit_code = 3


class ConditioningError(NumericalError):
    pass


class DegenerateResidualError(NumericalError):
    pass


class ChainStateError(SSHNetError, RuntimeError):
    exit_code = 3


class DatasetFormatError(SSHNetError, ValueError):
    exit_code = 2
