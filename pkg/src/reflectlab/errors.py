"""Exception hierarchy for reflectlab.

Public functions raise these instead of bare ValueError so callers can
distinguish domain violations from programming errors.
"""


class ReflectlabError(Exception):
    """Base class for all reflectlab errors."""


class PathError(ReflectlabError, ValueError):
    """A path value violates its invariants (knot order, finiteness)."""


class TimeOutOfRangeError(PathError):
    """A query time lies outside [0, horizon]."""


class KnotConflictError(PathError):
    """Knot insertion conflicts with the existing path values."""


class RuleError(ReflectlabError, ValueError):
    """A stopping rule is malformed or given invalid parameters."""


class DyadicRatioError(RuleError):
    """The barrier ratio a/(a+b) is dyadic, so the level recursion is undefined."""


class MixturePartitionError(RuleError):
    """Mixture branch events did not form a partition on the given path."""


class SamplerError(ReflectlabError, ValueError):
    """Invalid sampler parameters (non-positive step or horizon)."""


class ConfigurationError(ReflectlabError):
    """An experiment is configured inconsistently (bad config file, violated
    preconditions such as a bound cap exceeded by a sampled path)."""
