"""Exception hierarchy."""


class ImagerError(Exception):
    """Base class for every error raised by this package."""


class EvanescentMode(ImagerError, ValueError):
    """A transverse wave number exceeds the medium wave number (imaginary kz)."""


class TotalInternalReflection(ImagerError, ValueError):
    pass


class DegenerateFringe(ImagerError):
    """The phase sweep shows no usable interference (e.g. one pump is off)."""


class TruncationOverflow(ImagerError):
    """A Fock term needs an occupation above the truncation ``n_max``."""


class DegenerateFit(ImagerError):
    pass


class DotsUnresolved(ImagerError):
    """Centroid windows of the two magnification dots overlap."""


class ParseError(ImagerError, ValueError):
    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.offset = offset


class UnitarityViolation(ImagerError, ValueError):
    """An object sample has |T| > 1, which no passive beamsplitter allows."""


class ConfigError(ImagerError, ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class IoError(ImagerError, OSError):
    pass
