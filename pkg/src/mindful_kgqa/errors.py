"""Exception hierarchy shared across the package."""

from __future__ import annotations


class KGQAError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(KGQAError, ValueError):
    """A caller broke an operation's precondition."""


class TripleParseError(KGQAError):
    def __init__(self, line_no: int, line: str, detail: str) -> None:
        super().__init__(f"line {line_no}: {detail}: {line!r}")
        self.line_no = line_no
        self.line = line


class ConfigurationError(KGQAError):
    """Backend or run configuration is incomplete or inconsistent."""


class CassetteMissError(KGQAError):
    def __init__(self, kind: str, digest: str) -> None:
        super().__init__(f"cassette miss: no recorded response for kind={kind} digest={digest}")
        self.kind = kind
        self.digest = digest


class TransportError(KGQAError):
    """The live backend failed after exhausting its retries."""


class OracleParseError(KGQAError):
    """No block in the model output matched the expected schema.

    The raw text is kept so the caller can decide whether to re-ask.
    """

    def __init__(self, schema: str, raw_text: str) -> None:
        preview = raw_text if len(raw_text) <= 120 else raw_text[:117] + "..."
        super().__init__(f"no parseable {schema!r} block in response: {preview!r}")
        self.schema = schema
        self.raw_text = raw_text


class DatasetError(KGQAError):
    """Malformed question or report input."""

    def __init__(self, message: str, line_no: int | None = None) -> None:
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no
