"""Exception types raised by the numerical pipelines."""


class HKCurvError(Exception):
    """Base class; the CLI maps these to exit code 3."""


class DegenerateAction(HKCurvError):
    """The infinitesimal action rho -> rho q is not injective at the point."""


class MaxIterations(HKCurvError):
    pass


class NonInvariantLevel(HKCurvError):
    """The moment-map level is not fixed by the coadjoint action."""


class GramSingular(HKCurvError):
    pass


class NonOrthonormalPlane(HKCurvError):
    pass


class WronskianCollapse(HKCurvError):
    pass


class NegativeSpectrum(HKCurvError):
    """H(s) had an eigenvalue below -1e-12; the inner product is not invariant."""


class GaugeBoundaryError(HKCurvError):
    pass


class UnknownExample(HKCurvError, KeyError):
    pass
