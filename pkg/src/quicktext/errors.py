"""Exception hierarchy shared by the library and the CLI."""


class QuicktextError(Exception):
    """Base class for all errors raised by quicktext."""


class ConfigError(QuicktextError):
    """Invalid configuration, or a corpus that leaves nothing to train on."""


class ModelFormatError(QuicktextError):
    """A model file is truncated, inconsistent or otherwise malformed."""


class NotAModelFileError(ModelFormatError):
    """The file does not start with the model magic bytes."""
