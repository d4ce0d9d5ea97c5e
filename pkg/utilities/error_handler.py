import json
import logging
import os
import traceback
from datetime import datetime, timezone

logger = logging.getLogger(__name__)


class RecyklosError(Exception):
    """ Base class for every error raised by the solver library. """


class InvalidInput(RecyklosError, ValueError):
    """ Malformed or non-finite input, or a dimension mismatch. """


class ConvergenceFailure(RecyklosError):
    """ A dense kernel or a per-shift least-squares problem could not be solved reliably. """


class IllConditionedPencil(RecyklosError):
    """ The right-hand matrix of a small generalized eigenproblem (or UᵀAU) is numerically singular. """


class UnsupportedFormat(RecyklosError):
    """ Matrix Market variant outside the supported coordinate/real subset. """


class ParseError(RecyklosError):
    """ Malformed input file; carries the offending 1-based line number when known. """

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class NumericalFailure(RecyklosError):
    """ Non-finite values appeared during an iteration. """


class NotSymmetric(RecyklosError):
    """ An operator declared symmetric failed the symmetry spot check. """


class NotPositiveDefinite(RecyklosError):
    """ An operator declared SPD produced a non-positive curvature. """


class EmptyRecycleSpace(RecyklosError):
    """ Every candidate recycle column was dropped as numerically dependent. """


class SingularMatrix(RecyklosError):
    """ Dense reference solve hit a matrix singular to working precision. """


class IoError(RecyklosError, OSError):
    """ A file could not be read or written. """


class InvariantViolation(RecyklosError, AssertionError):
    """ A debug invariant check (RECYKLOS_DEBUG_CHECKS=1) failed. """


class ErrorHandler:
    """ Structured error log for sequence runs: one JSON entry per recorded failure. """

    def __init__(self, log_dir="logs"):
        """
        Initializes the error handler.
        :param log_dir: Directory holding error_log.json.
        """
        self.log_dir = log_dir
        self.error_log_file = os.path.join(log_dir, "error_log.json")
        os.makedirs(log_dir, exist_ok=True)

    def log_error(self, error_message, error_type="RecyklosError", source="Unknown"):
        """
        Logs an error to the system log and appends it to the JSON error log.
        :param error_message: Description of the error.
        :param error_type: Exception class name or category.
        :param source: Component (or system index) where the error occurred.
        """
        error_data = {
            "timestamp": datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M:%S"),
            "type": error_type,
            "source": source,
            "message": error_message,
        }
        logger.error("%s in %s: %s", error_type, source, error_message)

        error_log = self._load()
        error_log.append(error_data)
        try:
            with open(self.error_log_file, "w", encoding="utf-8") as f:
                json.dump(error_log, f, indent=4)
        except OSError as e:
            logger.warning("Could not persist error log %s: %s", self.error_log_file, e)

    def handle_exception(self, exception, source="Unknown"):
        """
        Records an exception together with its traceback.
        :param exception: The exception object.
        :param source: Component where the exception occurred.
        """
        error_message = "".join(traceback.format_exception(type(exception), exception, exception.__traceback__))
        self.log_error(error_message, error_type=type(exception).__name__, source=source)

    def get_recent_errors(self, limit=10):
        """
        Retrieves the most recent errors.
        :param limit: Number of recent errors to fetch.
        :return: List of error dictionaries, oldest first.
        """
        return self._load()[-limit:]

    def _load(self):
        try:
            with open(self.error_log_file, "r", encoding="utf-8") as f:
                return json.load(f)
        except (FileNotFoundError, json.JSONDecodeError):
            return []
