"""Anderson-Darling family goodness-of-fit tests and rate-model backtesting."""

__version__ = "0.1.0"
