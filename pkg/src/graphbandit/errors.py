"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid experiment or learner configuration."""


class IngestError(ValueError):
    """Malformed input file (CSV dataset, loss table, or graph literal)."""


class ContractError(RuntimeError):
    """A caller violated an operation's stated preconditions."""


class ProtocolError(RuntimeError):
    """select/update called out of order, or feedback that does not match the round."""


class PhaseOrderError(RuntimeError):
    """An estimator was queried before its exploration phase delivered enough samples."""


class InvariantError(RuntimeError):
    """An internal numerical invariant failed; usually signals a bug upstream."""
