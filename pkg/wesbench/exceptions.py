"""Errors raised by the WES benchmark suite and the CLI exit-code mapping."""
from __future__ import annotations

import functools
import logging
from typing import Callable

import voluptuous as vol

from .const import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_RUNTIME_ERROR

_LOGGER = logging.getLogger(__name__)


class WesBenchError(Exception):
    """Base class for every error raised by wesbench."""


class ConfigurationError(WesBenchError):
    """Error to indicate a parameter or config file value is unusable."""


class DomainError(WesBenchError, ValueError):
    """Error to indicate an argument lies outside a function's domain."""


class DegenerateRangeError(WesBenchError, ValueError):
    """Error to indicate a series has zero range and cannot be normalized."""


class DimensionMismatchError(WesBenchError, ValueError):
    """Error to indicate array lengths or layer widths disagree."""


class MissingWeightsError(WesBenchError):
    """Error to indicate the WES loss was evaluated without label weights."""


class UndefinedCorrelationError(WesBenchError):
    """Error to indicate a correlation was requested on a constant series."""


class EmptyRegionError(WesBenchError):
    """Error to indicate an extreme region or tail holds no samples."""


class ReportWriteError(WesBenchError):
    """Error to indicate a report file could not be written."""


class NonFiniteLossError(WesBenchError):
    """Error to indicate training produced a NaN or infinite loss."""

    def __init__(self, epoch: int, batch: int, value: float):
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
        self.value = value


def exit_code_handler(func: Callable[..., int | None]) -> Callable[..., int]:
    """Run a CLI command and translate failures into process exit codes."""

    @functools.wraps(func)
    def inner_function(*args, **kwargs) -> int:
        try:
            code = func(*args, **kwargs)
        except (ConfigurationError, vol.Invalid) as err:
            _LOGGER.error("Configuration error: %s", err)
            return EXIT_CONFIG_ERROR
        except (WesBenchError, OSError) as err:
            _LOGGER.error("Run failed: %s", err)
            return EXIT_RUNTIME_ERROR
        return EXIT_OK if code is None else code

    return inner_function
