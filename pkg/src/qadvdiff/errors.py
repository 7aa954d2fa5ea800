"""Exception hierarchy shared by all modules."""


class QAdvDiffError(Exception):
    """Base class for every error raised by this package."""


class CapacityError(QAdvDiffError):
    """A requested register or matrix exceeds the configured size cap."""


class ShapeError(QAdvDiffError, ValueError):
    """Array or register shapes do not agree."""


class DegenerateProjectionError(QAdvDiffError):
    """A projection or mitigation step left (almost) no probability mass."""


class ContractError(QAdvDiffError):
    """A numerical or structural contract was violated."""


class CFLError(QAdvDiffError, ValueError):
    """Time step violates the |v| dt / h <= 1 stability bound."""


class ConfigError(QAdvDiffError, ValueError):
    """Invalid experiment configuration."""
