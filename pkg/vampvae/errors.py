class VampError(Exception):
    """
    Base error of the library.

    Carries a human readable `detail` and the process `exit_code` the CLI
    uses when the error reaches the command boundary.
    """
    exit_code = 1

    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(detail)


class DimensionError(VampError, ValueError):
    """Operand shapes do not conform."""


class NumericError(VampError, ArithmeticError):
    """An operation produced NaN or Inf."""


class ContractError(VampError, ValueError):
    """A documented precondition was violated by the caller."""


class DomainError(VampError, ValueError):
    """A value lies outside the support of a distribution."""


class RangeError(VampError, IndexError):
    """An index (component, pseudo-input) is out of range."""
    exit_code = 2


class FormatError(VampError):
    """A file could not be decoded. `offset` is the byte position of the fault."""

    def __init__(self, detail: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            detail = f"{detail} (at byte offset {offset})"
        super().__init__(detail)


class StorageError(VampError):
    """An output file or directory could not be written."""

    @classmethod
    def from_os_error(cls, exc: OSError) -> "StorageError":
        target = f"{exc.filename}: " if exc.filename else ""
        return cls(f"{target}{exc.strerror or exc}")
