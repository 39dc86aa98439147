"""Exception taxonomy shared by every stage of the pipeline.

The CLI maps exceptions to exit codes through ``exit_code``:
2 = validation/config problems, 3 = missing data dependencies,
4 = transport failures talking to a remote scorer.
"""


class FluidityError(Exception):
    exit_code = 2


class ValidationError(FluidityError):
    """Input data violates a documented bound or consistency rule."""


class SchemaError(ValidationError):
    """File structure (header, columns, record fields) is malformed."""


class DomainError(ValidationError):
    """Argument lies outside the operation's documented domain."""


class ConfigError(ValidationError):
    """Configuration object or flag combination is invalid."""


class UndefinedCorrelationError(FluidityError):
    """Correlation undefined because one side has zero variance."""


class DataDependencyError(FluidityError):
    exit_code = 3


class MissingScoreError(DataDependencyError):
    """A precomputed-score lookup found no entry for a pair key."""


class TransportError(FluidityError):
    exit_code = 4


class ProtocolError(TransportError):
    """Remote scorer answered with a payload we cannot interpret."""
