class ConvlabError(Exception):
    """Base class for every error raised by convlab."""


class DomainError(ConvlabError, ValueError):
    """A point or set lies outside its carrier, or an interval/partition is malformed."""


class ResourceLimitError(ConvlabError):
    """A configured cap (terms per expression, pieces per refinement) was exceeded."""


class PreconditionError(ConvlabError, ValueError):
    """An operation was called outside its hypotheses (e.g. infinite measure for synthesis)."""


class SpecError(ConvlabError, ValueError):
    """
    Malformed JSON spec or template.
    Carries every offending field path, plus line/column for JSON syntax errors.
    """

    def __init__(self, message, fields=None, line=None, column=None):
        self.fields = list(fields or [])
        self.line = line
        self.column = column
        super().__init__(message)

    def diagnostics(self):
        lines = []
        if self.line is not None:
            lines.append(f"line {self.line}, column {self.column}: {self}")
        else:
            lines.append(str(self))
        for path, msg in self.fields:
            lines.append(f"  {path}: {msg}")
        return "\n".join(lines)


class UsageError(ConvlabError):
    """Bad command-line usage (unknown flag, missing or conflicting arguments)."""
