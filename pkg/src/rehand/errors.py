"""Exception hierarchy shared by every rehand module."""

from __future__ import annotations


class ReHandError(Exception):
    """Base class for all library errors."""


class ParamError(ReHandError, ValueError):
    pass


class EncodingError(ReHandError, ValueError):
    pass


class CapacityWarning(UserWarning):
    """Raised via warnings.warn when an accumulator holds more than 2**d items."""


class ProtocolReject(ReHandError):
    """A protocol step refused to continue.

    ``code`` is the short outcome label that travels in a Reject message and
    ends up in the event log.
    """

    code = "reject"


class DecodeFailure(ProtocolReject):
    code = "malformed"


class AuthFailure(ProtocolReject):
    code = "auth_failure"


class AlreadyRegistered(ProtocolReject):
    code = "already_registered"


class UnknownUser(ProtocolReject):
    code = "unknown_user"


class IntegrityFailure(ProtocolReject):
    code = "integrity_failure"


class ReplayDetected(ProtocolReject):
    code = "replay_detected"


class StaleWarrant(ProtocolReject):
    code = "stale_warrant"


class NoWarrant(ProtocolReject):
    code = "no_warrant"


class MalformedRequest(ProtocolReject):
    code = "malformed"


class RevokedUE(ProtocolReject):
    code = "revoked"


class ExpiredWarrant(ProtocolReject):
    code = "expired"


class ServerAuthFailure(ProtocolReject):
    code = "server_auth_failure"


class ClientAuthFailure(ProtocolReject):
    code = "client_auth_failure"


class RejectList(ProtocolReject):
    code = "reject_list"


class ConfigError(ReHandError):
    """Scenario configuration problem; ``field`` is a dotted path into the document."""

    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field}: {message}")


class EmptyLog(ReHandError):
    pass


class Inconsistent(ReHandError):
    pass
