"""Exception hierarchy shared by every jdac module."""


class JdacError(Exception):
    """Base class for all errors raised by this package."""


class DimensionTooSmall(JdacError, ValueError):
    pass


class DimensionMismatch(JdacError, ValueError):
    pass


class UnknownPhantomKind(JdacError, ValueError):
    pass


class NonNegligibleImaginaryPart(JdacError, ValueError):
    pass


class SpecParseError(JdacError, ValueError):
    """Noise/artifact spec text could not be parsed."""


class EmptyCorpus(JdacError, ValueError):
    pass


class OperatorContractViolation(JdacError, RuntimeError):
    """A plug-in operator returned something the engine cannot use."""


class UnknownOperator(JdacError, ValueError):
    pass


class ProcessFailed(JdacError, RuntimeError):
    def __init__(self, returncode, stderr=""):
        self.returncode = returncode
        self.stderr = stderr
        msg = f"external operator exited with code {returncode}"
        if stderr:
            msg += f": {stderr.strip()[:500]}"
        super().__init__(msg)


class OperatorTimeout(JdacError, RuntimeError):
    pass


# -- serialization -----------------------------------------------------------

class RvolError(JdacError, ValueError):
    pass


class BadMagic(RvolError):
    pass


class VersionUnsupported(RvolError):
    pass


class TruncatedPayload(RvolError):
    pass


class IoFailure(JdacError, OSError):
    pass


class NiftiError(JdacError, ValueError):
    pass


class MalformedHeader(NiftiError):
    pass


class UnsupportedDatatype(NiftiError):
    pass


class NotThreeDimensional(NiftiError):
    pass


class ManifestError(JdacError, ValueError):
    pass
