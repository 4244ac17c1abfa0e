"""Exception hierarchy shared across the pipeline."""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PipelineError):
    """A corpus or event record violates the input schema.

    Carries the 1-based line number and, when known, the offending field.
    """

    def __init__(self, message: str, line_no: int | None = None, field: str | None = None):
        self.line_no = line_no
        self.field = field
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{prefix}{message}")


class DegeneratePairError(PipelineError):
    """Both keys of an entity pair are identical."""


class MalformedStatementError(PipelineError):
    """A relation statement violates its span invariants."""


class WindowMismatchError(PipelineError):
    """Two stats objects cover different date windows and cannot be merged."""


class UndefinedScoreError(PipelineError):
    """PPMI requested for a pair with zero joint count."""


class EmptyGroupError(PipelineError):
    """A selected pair has no statements to build a group from."""


class DegenerateCorpusError(PipelineError):
    """The corpus cannot supply required negatives (e.g. no easy negatives exist)."""


class EvalError(PipelineError):
    """A few-shot episode or embedding table is invalid for evaluation."""


class ConfigError(PipelineError):
    """A configuration value is missing, unknown or out of range.

    The message starts with the dotted field path (e.g. ``filter.min_ppmi``).
    """


class MissingInputError(PipelineError):
    """A required upstream artifact or input file does not exist."""
