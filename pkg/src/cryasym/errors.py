"""Exception hierarchy for cryasym.

All library errors derive from :class:`CryasymError`. Input/data problems
(bad lattices, malformed files, infeasible block compositions) are kept
separate from :class:`InternalInvariantError`, which flags a violation of
an always-on internal consistency check and therefore a bug, never bad
input.
"""


class CryasymError(Exception):
    """Base class for all cryasym errors."""


class DegenerateLatticeError(CryasymError):
    """Lattice basis has (near-)zero determinant."""


class CoincidentPointsError(CryasymError):
    """Two motif points (nearly) coincide in Cartesian space."""


class NotUnimodularError(CryasymError):
    """Cell transform matrix is not an integer matrix with det = +/-1."""


class InvalidScaleError(CryasymError):
    """Integer cell scaling factor must be >= 2."""


class NotOrthogonalError(CryasymError):
    """Rotation matrix is not orthogonal within tolerance."""


class InvalidKError(CryasymError):
    """Neighbour count k must be a positive integer."""


class InsufficientShellRadiusError(CryasymError):
    """Brute-force shell radius too small to certify the k-th neighbour."""


class DimensionMismatchError(CryasymError):
    """Vectors passed to a ground metric have different lengths."""


class EmptyBlockError(CryasymError):
    """A geometric block contains no points."""


class InvalidPartitionError(CryasymError):
    """Block partition has out-of-range, overlapping or empty blocks."""


class InfeasibleLabelsError(CryasymError):
    """Blocks have incompatible label compositions; the block distance is
    infinite under label-preserving transport."""


class NotFiniteBlockError(CryasymError):
    """Connectivity component touches its own periodic image, so it does
    not form a finite block."""


class EpsilonTooLargeError(CryasymError):
    """Perturbation radius must stay below the minimum half-distance."""


class CifError(CryasymError):
    """Base class for CIF ingestion errors."""


class MalformedCifError(CifError):
    """Required CIF tags missing or unreadable.

    Carries the 1-based line number where parsing failed when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class BadSymOpError(CifError):
    """Symmetry operator string could not be parsed."""


class EmptyStructureError(CifError):
    """No atom sites remain after filtering."""


class InternalInvariantError(CryasymError):
    """An always-on internal consistency check failed (implementation bug)."""
