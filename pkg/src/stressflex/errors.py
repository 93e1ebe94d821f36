"""Exception hierarchy shared by the library and the command line."""


class StressFlexError(Exception):
    """Base class for every error raised by this package."""


class InputError(StressFlexError, ValueError):
    """Bad user input: malformed files, unknown names, invalid parameters."""


class OffParseError(InputError):
    """OFF text could not be parsed.  ``line`` is 1-based, or None."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GeometryError(InputError):
    """Vertex data violates a geometric precondition (span, flatness)."""


class DegenerateDrawError(StressFlexError):
    """A random polytope draw stayed degenerate after all retries."""


class UnboundedRegionError(StressFlexError):
    """The halfspaces do not bound a polytope."""


class CertificationError(StressFlexError):
    """Base for failures while constructing an Izmestiev stress.

    ``stress`` holds the partially certified result when one exists.
    """

    def __init__(self, message, stress=None):
        super().__init__(message)
        self.stress = stress


class EmptyStressSpaceError(CertificationError):
    pass


class NoProperStressError(CertificationError):
    pass


class SpectralCertificateError(CertificationError):
    pass
