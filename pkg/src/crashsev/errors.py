"""Exception hierarchy. The CLI maps each family onto an exit code."""


class CrashsevError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 2


class UsageError(CrashsevError, ValueError):
    """Bad arguments or configuration (exit code 1)."""

    exit_code = 1


class DataError(CrashsevError):
    """Input data cannot be processed (exit code 2)."""

    exit_code = 2


class EmptyDatasetError(DataError):
    def __init__(self, message: str = "empty dataset"):
        super().__init__(message)


class CsvFormatError(DataError):
    """Structurally corrupt CSV row."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class IntegrityError(DataError):
    """Column store contents disagree with their manifest."""

    def __init__(self, partition: str, column: str | None, message: str):
        self.partition = partition
        self.column = column
        where = partition if column is None else f"{partition}/{column}"
        super().__init__(f"integrity error in {where}: {message}")


class DegenerateLabelsError(DataError):
    def __init__(self, message: str = "degenerate labels"):
        super().__init__(message)


class StoreIOError(CrashsevError, OSError):
    """Filesystem failure while reading or writing artifacts (exit code 3)."""

    exit_code = 3
