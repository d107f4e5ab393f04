"""Exception hierarchy shared across the library."""


class FedHENetError(Exception):
    """Base class for all library errors."""


class InputError(FedHENetError):
    """Caller supplied inconsistent or out-of-range inputs."""


class NumericError(FedHENetError):
    """A numerical routine failed (non-finite values, singular system, SVD breakdown)."""


class FormatError(FedHENetError):
    """A serialized blob or file does not match the expected wire/file format."""


class ConfigError(FedHENetError):
    """An experiment configuration file is invalid."""


class TransportError(FedHENetError):
    """A transport could not connect or deliver within its budget."""


class CryptoError(FedHENetError):
    """An encryption operation was attempted without the required key material."""
