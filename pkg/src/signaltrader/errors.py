"""Exception hierarchy. Each family maps to one CLI exit code."""


class SignalTraderError(Exception):
    exit_code = 1


class ConfigError(SignalTraderError):
    exit_code = 2


class DataError(SignalTraderError):
    exit_code = 3


class NumericError(SignalTraderError):
    exit_code = 4


class BankruptShortError(NumericError):
    """A short position lost more than the cash available to cover it.

    ``ledger`` holds the partial ledger up to (and including) the failing step.
    """

    def __init__(self, message, ledger=None):
        super().__init__(message)
        self.ledger = ledger
