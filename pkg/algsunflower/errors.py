class SunflowerError(Exception):
    pass


class PreconditionViolation(SunflowerError, ValueError):
    pass


class HorizonExceeded(SunflowerError):
    """
    Raised at the boundary of a finite fragment: a tuple longer than the
    horizon, a base too large for it, or a target beyond the last probed value.
    """


class NotMonotone(SunflowerError, ValueError):
    pass


class SizeCapExceeded(SunflowerError):
    pass


class NoGenerator(SunflowerError):
    pass


class CertificateFailure(SunflowerError):
    def __init__(self, k: int, message: str) -> None:
        super().__init__(f"certificate fails at k={k}: {message}")
        self.k = k


class FormatError(SunflowerError, ValueError):
    def __init__(
        self,
        message: str,
        *,
        path: str | None = None,
        line: int | None = None,
        column: int | None = None,
    ) -> None:
        location = path or "<input>"
        if line is not None:
            location += f":{line}"
            if column is not None:
                location += f":{column}"
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line
        self.column = column
