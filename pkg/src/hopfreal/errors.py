"""Exception hierarchy shared by all modules."""


class HopfRealError(Exception):
    """Base class for errors raised by this package."""


class AlphabetMismatch(HopfRealError, ValueError):
    """Two values built over different alphabets were combined."""


class DegreeExceeded(HopfRealError, ValueError):
    """A truncated object was queried beyond its degree bound."""


class NotLyndon(HopfRealError, ValueError):
    pass


class IncompleteBasis(DegreeExceeded):
    """The Lie basis does not span the primitives up to the requested degree."""


class SingularBasis(HopfRealError, ArithmeticError):
    """PBW monomial expansions failed to span the word space."""


class NonFinite(HopfRealError, ArithmeticError):
    """A numerical trajectory produced an overflow or NaN."""


class ParseError(HopfRealError, ValueError):
    """Malformed text input; ``pos`` is the offending character offset, if known."""

    def __init__(self, message, pos=None):
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)
        self.pos = pos
