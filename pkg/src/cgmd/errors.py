"""Exception hierarchy for the coarse-graining engine."""


class CGMDError(Exception):
    """Base class for errors raised by :mod:`cgmd`."""


class DomainError(CGMDError, ValueError):
    """An argument lies outside the domain of a function (e.g. r <= 0)."""


class SimulationBlowup(CGMDError):
    """Atoms crossed each other or the state became non-finite."""


class DependentBasisError(CGMDError):
    """Basis columns are (numerically) linearly dependent."""


class EnrichmentEmptyError(CGMDError):
    """Every Krylov candidate was dropped during orthogonalization."""


class PoleError(CGMDError):
    """A shifted block is singular at the requested Laplace variable."""


class ConfigError(CGMDError, ValueError):
    """An experiment configuration failed validation."""


class AbortedTrajectory(CGMDError):
    """Time integration stopped early.

    The partial trajectory (up to the last valid state) is available as
    :attr:`trajectory`.
    """

    def __init__(self, msg, trajectory):
        super().__init__(msg)
        self.trajectory = trajectory
