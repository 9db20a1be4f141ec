"""Exception hierarchy shared by all rcsm modules."""


class RCSMError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(RCSMError, ValueError):
    """An argument violates a documented precondition."""


class NumericalDomainError(RCSMError, ArithmeticError):
    """A numerical routine left its valid domain (non-PD matrix, pole, NaN)."""


class SingularUpdateError(NumericalDomainError):
    """A rank-1 update would make the maintained matrix singular or indefinite."""


class CapacityError(RCSMError, RuntimeError):
    """A search space exceeds the configured enumeration cap."""
