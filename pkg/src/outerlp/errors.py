"""Exception hierarchy shared by all modules."""


class OuterLpError(Exception):
    """Base class for every error raised by this package."""


class AxiomViolation(OuterLpError):
    """An explicit outer-measure table breaks one of the outer-measure axioms.

    ``kind`` is one of ``"empty-set"``, ``"monotonicity"``, ``"subadditivity"``
    and ``witness`` holds the offending sets as tuples of point labels.
    """

    def __init__(self, kind, witness=()):
        self.kind = kind
        self.witness = tuple(witness)
        super().__init__(f"{kind} axiom violated by {self.witness!r}")


class NonPositiveWeight(OuterLpError):
    pass


class GeneratorLimitExceeded(OuterLpError):
    pass


class SpaceTooLarge(OuterLpError):
    pass


class NotInLinf(OuterLpError):
    pass


class UnsupportedExponents(OuterLpError):
    pass


class DepthTooLarge(OuterLpError):
    pass


class GridTooLarge(OuterLpError):
    pass


class InvalidExponents(OuterLpError):
    pass


class UnsupportedKernel(OuterLpError):
    pass


class AtomViolation(OuterLpError):
    pass


class ConfigParse(OuterLpError):
    pass
