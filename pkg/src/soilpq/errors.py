"""Exception hierarchy shared by all soilpq modules."""


class SoilPQError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(SoilPQError):
    """Malformed table, header, or serialized document; message names the field/cell."""


class AllRowsRemoved(SoilPQError):
    """Cleaning removed every row."""


class ZeroVariance(SoilPQError):
    """One or more columns are constant after the log step."""

    def __init__(self, columns: list[str]):
        self.columns = list(columns)
        super().__init__(f"zero variance after transform in column(s): {', '.join(self.columns)}")


class NonPositive(SoilPQError):
    """A non-pH value <= 0 reached the log step."""

    def __init__(self, column: str, row: int, value: float):
        self.column = column
        self.row = row
        super().__init__(f"column '{column}', row {row}: value {value!r} is not > 0, cannot log-transform")


class DimensionMismatch(SoilPQError):
    """Vector/matrix shapes are inconsistent with the model or with each other."""


class InvalidParams(SoilPQError):
    """Parameter values violate a precondition."""


class TooFewPoints(SoilPQError):
    """Fewer training points than requested centroids."""


class NonFinite(SoilPQError):
    """Input contains NaN or infinity where finite values are required."""


class IndivisibleDims(SoilPQError):
    """Feature dimension is not divisible by the subspace count."""

    def __init__(self, d: int, m: int):
        valid = [v for v in range(1, d + 1) if d % v == 0]
        self.d = d
        self.m = m
        self.valid = valid
        super().__init__(
            f"D={d} is not divisible by M={m}; valid subspace counts for D={d}: "
            + ", ".join(str(v) for v in valid)
        )


class Overflow(SoilPQError):
    """K^M exceeds the signed 64-bit class-id range."""


class CodeOutOfRange(SoilPQError):
    """A code entry or class id is outside [0, K) / [0, K^M)."""


class EmptyGrid(SoilPQError):
    """A sweep or Pareto call received no usable records."""


class IoError(SoilPQError):
    """File could not be read or written."""


class FormatVersionMismatch(SoilPQError):
    """Serialized document declares an unsupported format version."""


class CorruptFile(SoilPQError):
    """Binary file fails magic/size validation."""


class MissingCoords(SoilPQError):
    """Operation requires lon/lat coordinates but none are present."""
