"""Exception hierarchy. Each class maps to one CLI exit code."""


class SucoError(Exception):
    exit_code = 1


class ConfigurationError(SucoError, ValueError):
    """Parameters that cannot produce a valid index or query."""

    exit_code = 2


class FormatError(SucoError):
    """Malformed vecs file or other on-disk input."""

    exit_code = 3


class CorruptIndexError(FormatError):
    """An index file failed validation; ``section`` names where."""

    def __init__(self, section: str, detail: str):
        super().__init__(f"corrupt index ({section}): {detail}")
        self.section = section


class IncompatibilityError(SucoError):
    """Index, dataset and queries disagree on n or d."""

    exit_code = 4


class ContractError(SucoError, ValueError):
    """Caller broke a precondition (shape mismatch, out-of-range index)."""

    exit_code = 2
