"""Exception hierarchy shared by all modules.

Every error carries a short machine-readable ``code`` used by the CLI.
"""


class StokesDataError(Exception):
    code = "error"


# geometry / paths
class DegeneratePath(StokesDataError):
    code = "degenerate_path"


class RadiusTooLarge(StokesDataError):
    code = "radius_too_large"


class RayHitsPole(StokesDataError):
    code = "ray_hits_pole"


class PoleOnPath(StokesDataError):
    code = "pole_on_path"


class ToleranceNotMet(StokesDataError):
    code = "tolerance_not_met"


# special functions and transforms
class NonGeneric(StokesDataError):
    code = "non_generic"


class NotUnit(StokesDataError):
    code = "not_unit"


class NotInvertible(StokesDataError):
    code = "not_invertible"


# graded algebra
class MixedRays(StokesDataError):
    code = "mixed_rays"


class InadmissibleRay(NonGeneric):
    code = "inadmissible_ray"


class WindowTooSmall(StokesDataError):
    code = "window_too_small"


# series
class NotConverged(StokesDataError):
    code = "not_converged"


# numerical oracle
class Resonant(StokesDataError):
    code = "resonant"


class OutOfDisc(StokesDataError):
    code = "out_of_disc"


class ProjectorMismatch(StokesDataError):
    code = "projector_mismatch"


class TailBoundExceeded(NotConverged):
    code = "tail_bound_exceeded"


class SpreadTooLarge(NotConverged):
    code = "spread_too_large"


class HyperplaneCrossing(NonGeneric):
    code = "hyperplane_crossing"
