"""Exception hierarchy. CLI exit codes are keyed off these classes."""


class NfisError(Exception):
    exit_code = 1


class ConfigError(NfisError, ValueError):
    exit_code = 1


class DataError(NfisError, ValueError):
    exit_code = 2


class NumericalError(NfisError, ArithmeticError):
    exit_code = 3
