"""Exception hierarchy shared across pipeline stages.

Every error carries a short machine-parsable ``code`` so the CLI can emit
one-line diagnostics (``error=<code> detail="..."``) with a nonzero exit.
"""


class ReadmitError(Exception):
    """Base class for all pipeline errors."""

    code = "error"


class SchemaError(ReadmitError):
    """Input file header does not match the published dataset schema."""

    code = "schema_error"


class DataError(ReadmitError):
    """A record carries a value outside its declared domain."""

    code = "data_error"


class DomainError(ReadmitError):
    """An operation was called on inputs outside its precondition."""

    code = "domain_error"


class StratificationError(ReadmitError):
    """A class is too small to spread across the requested splits."""

    code = "stratification_error"


class TrainingError(ReadmitError):
    """Training preconditions violated (e.g. single-class train split)."""

    code = "training_error"


class ContractError(ReadmitError):
    """Caller broke an interface contract (e.g. feature-length mismatch)."""

    code = "contract_error"


class ConfigError(ReadmitError):
    """Invalid or unusable configuration."""

    code = "config_error"


class CalibrationError(ConfigError):
    """Tier calibration failed (too few or degenerate validation scores)."""

    code = "calibration_error"
