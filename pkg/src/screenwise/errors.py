"""Exception types shared across the package."""


class ScreenwiseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ScreenwiseError):
    """Invalid configuration value or malformed configuration file."""


class UnknownFeatureError(ScreenwiseError):
    """A record names a feature the schema does not define, or omits a required one."""


class NonNumericValueError(ScreenwiseError):
    """A feature value could not be interpreted as a number."""


class SchemaMismatchError(ScreenwiseError):
    """Two feature vectors (or a vector and a schema) disagree on dimensionality."""


class MissingRequiredOutcomeError(ScreenwiseError):
    """A tree queried a test whose outcome is missing from the observation."""


class NoObservedOutcomesError(ScreenwiseError):
    """No record at this node carries an observed outcome for the candidate test."""


class EmptyTrainingSetError(ScreenwiseError):
    """An operation that needs training records received none."""


class InvalidProportionError(ScreenwiseError, ValueError):
    """A proportion argument fell outside [0, 1]."""


class NonPositiveNError(ScreenwiseError, ValueError):
    """A count argument that must be >= 1 was not."""


class WrongTestError(ScreenwiseError):
    """An outcome was posted for a test the session is not currently awaiting."""


class SessionFinalError(ScreenwiseError):
    """An outcome was posted to a session that already issued its final label."""


class PolicyInfeasibleError(ScreenwiseError):
    """No tree satisfying the false-negative bound exists for the root partition."""


class PolicyFileError(ScreenwiseError):
    """A policy file failed fingerprint verification or its stored bound re-check."""
