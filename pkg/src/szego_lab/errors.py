"""Exception types. Every domain failure carries a machine-readable payload."""


class SzegoLabError(Exception):
    """Base class for domain errors (CLI exit code 2)."""

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": type(self).__name__, "message": str(self)}
        for key, value in self.details.items():
            out[key] = value if isinstance(value, (int, float, str, bool, type(None))) else str(value)
        return out


# numerics
class ZeroConstantTerm(SzegoLabError):
    pass


class WindowBelowFloor(SzegoLabError):
    pass


class WindowTooShort(SzegoLabError):
    pass


class SampleEvaluationError(SzegoLabError):
    pass


# opuc
class ModulusViolation(SzegoLabError, ValueError):
    pass


class IdentityDrift(SzegoLabError):
    pass


# szego functions
class NonSzegoWeight(SzegoLabError):
    pass


class PoleOnGrid(SzegoLabError):
    pass


class NoExponentialDecay(SzegoLabError):
    pass


class OutsideValidatedAnnulus(SzegoLabError):
    pass


class NearPole(SzegoLabError):
    pass


class PathsDisagree(SzegoLabError):
    pass


class PoleProximity(SzegoLabError):
    pass


class OutOfRegion(SzegoLabError):
    pass


# analysis
class IllConditioned(SzegoLabError):
    pass


class OrderAmbiguous(SzegoLabError):
    pass


class SingularToeplitz(SzegoLabError):
    pass


class AllSpurious(SzegoLabError):
    pass


# gsets
class NotGenerated(SzegoLabError):
    pass


# inverse problem
class NotNormalized(SzegoLabError):
    pass


class NotPositiveDefinite(SzegoLabError):
    pass


class QuadratureUnresolved(SzegoLabError):
    pass
