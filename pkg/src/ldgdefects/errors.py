"""Exception hierarchy shared by all modules."""


class LdgError(Exception):
    """Base class for every error raised by the package."""


# algebra
class ZeroTensor(LdgError):
    pass


class DegenerateLeading(LdgError):
    """The two largest eigenvalues coincide (Q lies on the oblate cone)."""


class OnCone(LdgError):
    pass


class NotUnit(LdgError):
    pass


# potential
class PropertyViolated(LdgError):
    pass


# fields and geometry
class ResolutionTooCoarse(LdgError):
    pass


class BallOutsideDomain(LdgError):
    pass


class EpsilonTooLarge(LdgError):
    pass


class GeometryUnresolved(LdgError):
    pass


class InvalidIndex(LdgError):
    pass


# solver
class SolverError(LdgError):
    pass


class NoDescent(SolverError):
    pass


class NoCenter(SolverError):
    pass


# topology
class NotOrientableSampling(LdgError):
    pass


class LiftFailed(LdgError):
    pass


class NonIntegerDegree(LdgError):
    pass


# verification
class BallTooSmall(LdgError):
    pass


class SweepTooShort(LdgError):
    pass


class ConfigError(LdgError):
    pass
