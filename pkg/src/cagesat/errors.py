"""Exception types shared across the package."""


class CagesatError(Exception):
    """Base class for all package errors."""


class MachineError(CagesatError):
    """Invalid Turing machine description."""


class NonHalting(CagesatError):
    """Simulation did not halt within the time bound."""


class NotNormalized(CagesatError):
    """Machine halted with the head away from the start cell."""


class UnassignedGate(CagesatError):
    """A bulb was evaluated against data that misses one of its gates."""


class MissingBulbValue(CagesatError):
    """A situation does not cover a bulb needed by a polynomial."""


class MissingTruncatedBulb(CagesatError):
    """A truncated bulb is absent from the bulb system (system not inclusion-closed)."""


class OutputGateFlip(CagesatError):
    """Difference construction requested for the pinned output gate."""


class EnumerationOverflow(CagesatError):
    """An enumeration exceeded its configured cap."""

    def __init__(self, message, count=None):
        super().__init__(message)
        self.count = count


class ZeroInvariant(CagesatError):
    """A cage-tree node has invariant sum zero and cannot be normalized."""


class SatisfiableCircuit(CagesatError):
    """The construction requires an unsatisfiable circuit."""


class TooLarge(CagesatError):
    """Instance exceeds the scale supported by an exhaustive construction."""


class NoHyperplane(CagesatError):
    """The expectation functional vanishes identically on the search subspace."""


class AllZeroFunctionals(CagesatError):
    """Every sampled situation induces the zero functional."""


class ProofIntegrityError(CagesatError):
    """An accepted proof failed during violation extraction: verifier bug."""


class BudgetExceeded(CagesatError):
    """Algorithm evaluation exceeded the match oracle budget."""


class FormatError(CagesatError):
    """Malformed text document."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column
