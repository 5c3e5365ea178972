"""Exception hierarchy shared by all photofuse modules.

The three concrete classes map onto the CLI exit codes: configuration and
argument problems (exit 2), problems with the content of input data
(exit 3), and optimizer non-convergence (exit 4).
"""


class PhotofuseError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PhotofuseError):
    """A parameter, argument range, schema, or configuration is invalid."""

    exit_code = 2


class DataError(PhotofuseError):
    """Input data violates an invariant (malformed cell, bad curve, ...)."""

    exit_code = 3


class FitError(PhotofuseError):
    """An iterative fit failed to converge within its budget."""

    exit_code = 4
