"""Exception hierarchy shared across the arena."""

from __future__ import annotations


class ArenaError(Exception):
    """Base class for all arena errors."""


class ParseError(ArenaError):
    """Base class for game-description / layout parse failures.

    Carries a source location: ``line`` is 1-based, ``col`` 0-based when known.
    """

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        loc = f" (line {line})" if line is not None else ""
        super().__init__(message + loc)


class MalformedLine(ParseError):
    pass


class UnknownSpriteClass(ParseError):
    pass


class UndefinedTypeReference(ParseError):
    def __init__(self, name: str, location: str, line: int | None = None):
        self.name = name
        self.location = location
        super().__init__(f"undefined sprite type {name!r} referenced in {location}", line)


class DuplicateTypeName(ParseError):
    pass


class DuplicateMappingChar(ParseError):
    pass


class RaggedGrid(ParseError):
    pass


class UnknownLayoutChar(ParseError):
    def __init__(self, char: str, row: int, col: int):
        self.char = char
        self.row = row
        super().__init__(f"layout char {char!r} not in level mapping at ({row},{col})", row + 1, col)


class NoAvatar(ParseError):
    pass


class MultipleAvatars(ParseError):
    pass


class InvalidLevelIndex(ArenaError):
    pass


class EpisodeAlreadyTerminated(ArenaError):
    pass


class PaletteExhausted(ArenaError):
    pass


class MalformedHistory(ArenaError):
    pass


class GatewayError(ArenaError):
    """Base class for agent-gateway failures."""


class TransportError(GatewayError):
    pass


class RateLimited(GatewayError):
    pass


class UnparseableReply(GatewayError):
    pass


class GatewayTimeout(GatewayError):
    pass


class NoActionField(GatewayError):
    pass


class UnknownActionToken(GatewayError):
    pass


class AgentAborted(ArenaError):
    """A session was aborted because the agent failed irrecoverably."""


class BundleInvalid(ArenaError):
    pass


class CorruptTrace(ArenaError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"{message} (line {line})")


class EmptyInput(ArenaError):
    pass


class ProtocolMismatch(ArenaError):
    pass


class UnknownBundle(ArenaError):
    pass


class UnknownSession(ArenaError):
    pass


class StepOutOfRange(ArenaError):
    pass
