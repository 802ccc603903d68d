"""
src/core/exceptions.py - Error types shared by the blockage engine
"""


class BlockageError(Exception):
    """Base class for every error raised by the engine"""


class InvalidArgumentError(BlockageError, ValueError):
    """Argument outside the domain of an operation"""


class UnsupportedDistributionError(BlockageError):
    """Closed form requested for a distribution it does not cover"""


class UnsupportedSizeError(BlockageError):
    """Too many links for exact inclusion-exclusion"""


class DiagnosticsError(BlockageError):
    """Simulation could not produce a trustworthy estimate"""


class ConfigError(BlockageError):
    """Scenario configuration failed validation"""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
