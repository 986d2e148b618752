"""Exception hierarchy.

The CLI maps these onto its exit-code contract: ConfigError -> 1,
DataError -> 2, ScorerError -> 3.
"""


class AnnokitError(Exception):
    """Base class for all package errors."""


class ConfigError(AnnokitError):
    """Invalid configuration or flag combination."""


class DataError(AnnokitError):
    """Malformed or inconsistent input data (pools, results, templates)."""


class ScorerError(AnnokitError):
    """Confidence scoring failed."""


class TransportError(ScorerError):
    """Remote scorer endpoint unreachable or returned an HTTP error."""


class MalformedResponseError(ScorerError):
    """Remote scorer returned a payload that does not match the wire format."""


class EmptyGenerationError(ScorerError):
    """Remote scorer generated zero tokens; mean log-probability undefined."""


class MissingScoreError(ScorerError):
    """File-backed scorer has no entry for a requested instance."""


class MissingLabelError(DataError):
    """A selector needed a label for an already-selected instance."""
