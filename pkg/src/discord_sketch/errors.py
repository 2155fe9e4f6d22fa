"""Exception hierarchy.

Every error raised by the library derives from :class:`DiscordError`, which
is itself a ``ValueError`` so callers that only care about bad input can
catch the builtin.
"""


class DiscordError(ValueError):
    pass


class NonFinite(DiscordError):
    pass


class ConstantSeries(DiscordError):
    pass


class LengthMismatch(DiscordError):
    pass


class SeriesTooShort(DiscordError):
    pass


class NoAdmissibleNeighbor(DiscordError):
    pass


class DuplicateDimension(DiscordError):
    pass


class MissingDimension(DiscordError):
    pass


class UnknownDimension(DiscordError):
    pass


class IndexOutOfRange(DiscordError):
    pass


class OutOfRange(DiscordError):
    pass


class PlanMismatch(DiscordError):
    pass


class AllGroupsInert(DiscordError):
    pass


class EmptyGroup(DiscordError):
    pass


class SingleClass(DiscordError):
    pass


class ParseError(DiscordError):
    pass


class RaggedRows(ParseError):
    pass
