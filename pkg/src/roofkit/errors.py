"""Exception hierarchy.

Grouped by how the CLI maps them to exit codes: input/validation problems
exit 2, infeasible or empty results exit 3, anything else is an internal
error and exits 4.
"""


class RoofkitError(Exception):
    """Base class for all toolkit errors."""


class InputError(RoofkitError):
    """Bad input: malformed documents, invalid graphs, unusable values."""


# --- model IR ---

class SchemaError(InputError):
    pass


class UnknownKind(InputError):
    pass


class DanglingInput(InputError):
    pass


class CyclicGraph(InputError):
    pass


class DecodeError(InputError):
    pass


class UnsupportedOp(InputError):
    def __init__(self, op_types):
        self.op_types = sorted(set(op_types))
        super().__init__("unsupported ONNX op(s): " + ", ".join(self.op_types))


class MissingShape(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class NonPositiveOutput(InputError):
    pass


# --- cost model ---

class ShapeMissing(InputError):
    pass


class UnsupportedKind(InputError):
    pass


class ZeroMemory(InputError):
    pass


# --- roofline core ---

class NegativeAI(InputError):
    pass


class NonPositiveAI(InputError):
    pass


class EmptyWorkload(InputError):
    pass


class DegenerateCoefficients(InputError):
    pass


# --- calibration ---

class MissingKind(InputError):
    pass


class RankDeficient(InputError):
    pass


class NegativeEnergy(InputError):
    pass


# --- power mode advisor ---

class EmptyCatalog(InputError):
    pass


class ProfileInvalid(InputError):
    pass


class InfeasibleBudget(RoofkitError):
    """No mode satisfies the latency budget; carries the tightest achievable time."""

    def __init__(self, tightest_s: float):
        self.tightest_s = tightest_s
        super().__init__(
            f"no power mode meets the budget; tightest achievable time is {tightest_s:.6g} s"
        )


# --- plotting / reports ---

class EmptySpec(InputError):
    pass
