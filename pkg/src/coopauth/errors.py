"""Exception hierarchy shared by the protocol parties and the simulator."""


class CoopAuthError(Exception):
    """Base class for every error raised by this package."""


class CorruptKeyError(CoopAuthError):
    pass


class DecryptionError(CoopAuthError):
    """Authenticated decryption failed (wrong key or tampered ciphertext)."""


class AuthorizationError(CoopAuthError):
    pass


class DecodeError(CoopAuthError):
    """Truncated, oversized or otherwise malformed wire encoding."""


class DuplicateIdentityError(CoopAuthError):
    pass


class StaleEpochError(CoopAuthError):
    pass


class NotFoundError(CoopAuthError, LookupError):
    pass


class IntegrityError(CoopAuthError):
    pass


class MustRenewError(CoopAuthError):
    """The OBU holds no temporary certificate valid at the requested time."""


class ConfigError(CoopAuthError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
