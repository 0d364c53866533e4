"""Exception types shared across the package."""


class PayoffControlError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatchError(PayoffControlError, ValueError):
    """A table, vector, or label list has the wrong shape or length."""


class NonFiniteEntryError(PayoffControlError, ValueError):
    """A numeric table contains NaN or infinity."""


class DuplicateActionLabelError(PayoffControlError, ValueError):
    """A player's action labels are not pairwise distinct."""


class UnknownKindError(PayoffControlError, ValueError):
    """Requested builtin game kind does not exist."""


class InvalidParamsError(PayoffControlError, ValueError):
    """Parameters of a builder or schedule are out of range."""


class UnknownActionError(PayoffControlError, ValueError):
    """An action label does not belong to the player it was used for."""


class IndexOutOfRangeError(PayoffControlError, IndexError):
    """A profile index is outside [0, profile_count)."""


class PlayerOutOfRangeError(PayoffControlError, IndexError):
    """A player index is outside [0, player_count)."""


class InconsistentStrategyError(PayoffControlError, ValueError):
    """A strategy's tables do not match the game it is used with."""


class NoConvergenceError(PayoffControlError, RuntimeError):
    """An iterative or truncated computation did not reach its tolerance."""


class MissingRoundCapError(PayoffControlError, ValueError):
    """Simulation under a never-ending schedule needs an explicit round cap."""


class UnsupportedScheduleError(PayoffControlError, ValueError):
    """Ruling vectors exist only for schedules with infinite expected rounds
    or a constant continuation probability below one."""


class TrivialTargetError(PayoffControlError, ValueError):
    """The requested relation already holds identically in the base game."""


class ParseError(PayoffControlError, ValueError):
    """A text input file could not be parsed.

    Carries the offending path and 1-based line number when known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)


class ValidationError(ParseError):
    """Parsed content failed semantic validation (shapes, sums, ranges)."""
