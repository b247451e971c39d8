"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration/usage problems exit 1,
data problems exit 2, infeasible scenarios exit 3.
"""


class GridLullsError(Exception):
    """Base class for all package errors."""


class ConfigurationError(GridLullsError):
    """Bad column mapping, scenario file, fleet file or parameter."""


class EmptyInputError(GridLullsError):
    """An operation received no usable input rows/samples."""


class DataQualityError(GridLullsError):
    """Too many samples had to be repaired; the series is unusable."""


class CoverageError(GridLullsError):
    """The input series does not cover the required year of samples."""


class InfeasibleScenarioError(GridLullsError):
    """Scenario arithmetic cannot proceed (e.g. nuclear >= demand)."""


class RangeError(GridLullsError):
    """A requested window falls outside the simulated year."""
