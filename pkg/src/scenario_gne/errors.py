"""Exception hierarchy for the toolkit.

Config problems (bad schema, out-of-range parameters) are kept separate
from numerical/geometric failures so the CLI can map them to distinct
exit codes.
"""


class ScenarioGneError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ScenarioGneError):
    """Malformed input document, schema violation, or out-of-range parameter."""


class DimensionError(ScenarioGneError):
    """Inconsistent matrix/vector dimensions in problem data."""


class InfeasibleSystemError(ScenarioGneError):
    """A halfspace system required to be nonempty has no feasible point."""


class UnboundedSystemError(ScenarioGneError):
    """A direction or problem required to be bounded is unbounded."""


class NumericalError(ScenarioGneError):
    """Numerical breakdown (pivot failure, iteration explosion, NaN/Inf)."""


class RayTerminationError(NumericalError):
    """Complementary pivoting ended on a secondary ray instead of a solution."""


class NonSegmentSetError(ScenarioGneError):
    """The equilibrium set is not a one-dimensional segment, so it cannot be gridded."""


class EmptyEquilibriumSetError(ScenarioGneError):
    """The equilibrium set emptied out; the nonemptiness premise does not hold."""
