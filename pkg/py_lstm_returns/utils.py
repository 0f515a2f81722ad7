#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
LSTM Returns Utility Functions
"""

import sys
from typing import Any, Optional, Type

import numpy as np
from loguru import logger


class SevereError(Exception):
    """Severe error that should terminate the current command"""
    code = 'SEVERE'

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    @property
    def message(self) -> str:
        return str(self)


class ContractError(SevereError):
    """Shape, dimension or precondition violation"""
    code = 'CONTRACT_VIOLATION'


class NumericalError(SevereError):
    """Iteration cap reached or non-finite values produced"""
    code = 'NUMERICAL'


class DataError(SevereError):
    """Malformed or unusable market data"""
    code = 'DATA_INVALID'


class CheckpointError(SevereError):
    """Unreadable or internally inconsistent checkpoint"""
    code = 'CKPT_CORRUPT'


class ConfigMismatchError(SevereError):
    """Stored model config does not fit the data it is asked to score"""
    code = 'CONFIG_MISMATCH'


class TrainingError(SevereError):
    """Training aborted; the history recorded so far travels with the error"""
    code = 'TRAINING_FAILED'

    def __init__(self, message: str, history: Any = None):
        super().__init__(message)
        self.history = history


# Assertion function with message
def assert_(condition: bool, message: str, error: Type[SevereError] = ContractError) -> None:
    """Assert with custom message"""
    if not condition:
        raise error(message)


def shape_str(array: Any) -> str:
    """Render an array shape as `3x4` for error messages"""
    return 'x'.join(str(d) for d in np.shape(array)) or 'scalar'


def check_finite(array: np.ndarray, name: str) -> None:
    """Raise NumericalError naming `name` if the array holds NaN or Inf"""
    if not np.all(np.isfinite(array)):
        raise NumericalError(f"Non-finite values in {name}")


def fmt_machine(value: float) -> str:
    """17 significant digits, enough to round-trip a float64"""
    return f"{value:.17g}"


def fmt_table(value: float) -> str:
    """4 decimals, the layout of the published results table"""
    return f"{value:.4f}"


def configure_logging(debug: bool = False) -> None:
    """Install the single stderr sink used by the command line front end"""
    logger.remove()
    logger.add(
        sys.stderr,
        level='DEBUG' if debug else 'INFO',
        format='<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | {message}',
    )
