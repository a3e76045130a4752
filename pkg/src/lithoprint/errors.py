"""Exception hierarchy shared across the pipeline."""


class LithoprintError(Exception):
    """Base class for every error raised by this package."""


class ParameterOutOfRange(LithoprintError, ValueError):
    pass


# imaging
class MalformedFile(LithoprintError):
    pass


class UnsupportedFormat(LithoprintError):
    pass


class ZeroDimension(LithoprintError):
    pass


# relief
class ImageTooSmall(LithoprintError, ValueError):
    pass


class ResultTooSmall(LithoprintError, ValueError):
    pass


# meshing
class NotWatertight(LithoprintError):
    def __init__(self, defects):
        self.defects = list(defects)
        super().__init__("mesh is not watertight: " + "; ".join(self.defects))


class BudgetTooSmall(LithoprintError, ValueError):
    pass


# stl
class MalformedStl(LithoprintError):
    pass


class AsciiDetected(MalformedStl):
    """Binary reader was handed what looks like an ASCII STL."""


class TooManyTriangles(LithoprintError):
    pass


class DegenerateFacet(LithoprintError):
    pass


# layout
class MixedBaseHeights(LithoprintError):
    pass


class CalibrationMissing(LithoprintError):
    pass


class MixedMagnification(LithoprintError):
    pass


class EmptyLayout(LithoprintError):
    pass


# fab / cli
class ProfileError(LithoprintError):
    """Malformed profile registry file."""


class UnknownProfile(LithoprintError, KeyError):
    def __str__(self):
        return f"unknown printer profile: {self.args[0]}"


class ConfigError(LithoprintError):
    pass
