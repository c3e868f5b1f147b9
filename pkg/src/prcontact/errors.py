"""Exception types raised across the package."""


class PRContactError(Exception):
    """Base class for all package errors."""


class Unreachable(PRContactError):
    def __init__(self, chain, msg=None):
        self.chain = chain
        super().__init__(msg or f"coupling point of chain {chain} is outside the reachable annulus")


class NoConvergence(PRContactError):
    pass


class SingularJacobian(PRContactError):
    pass


class NotSPD(PRContactError):
    pass


class InvalidLoA(PRContactError):
    pass


class DegenerateGradient(PRContactError):
    pass


class DimensionMismatch(PRContactError, ValueError):
    pass


class EmptyDataset(PRContactError, ValueError):
    pass


class NonFiniteLoss(PRContactError):
    pass


class EmptyGrid(PRContactError, ValueError):
    pass


class UntrainedModel(PRContactError):
    pass


class SimDiverged(PRContactError):
    pass


class ConfigError(PRContactError, ValueError):
    pass
