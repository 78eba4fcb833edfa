"""Exceptions and the finding record shared by all stages."""
from dataclasses import dataclass, field


class CorefAlignError(Exception):
    """Base class for every error raised by the toolkit."""


class AnnParseError(CorefAlignError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class BoundsError(AnnParseError):
    pass


class DanglingReferenceError(AnnParseError):
    pass


class StructuralError(CorefAlignError):
    def __init__(self, finding):
        self.finding = finding
        super().__init__(str(finding))


class SpanError(CorefAlignError):
    pass


class CrossLineError(SpanError):
    pass


class AssemblyError(CorefAlignError):
    pass


class RecordError(CorefAlignError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"record line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ConlluError(CorefAlignError, ValueError):
    pass


class OrderingError(CorefAlignError):
    def __init__(self, message, mentions=()):
        self.mentions = tuple(mentions)
        super().__init__(message)


class DecodeError(CorefAlignError, ValueError):
    def __init__(self, message, sent_id=None, token=None):
        self.sent_id = sent_id
        self.token = token
        super().__init__(f"sentence {sent_id}, token {token}: {message}")


class MergeError(CorefAlignError):
    pass


class ShapeError(CorefAlignError, ValueError):
    pass


class DomainError(CorefAlignError, ValueError):
    pass


class IndexBuildError(CorefAlignError):
    pass


class UnresolvableDocumentError(CorefAlignError):
    pass


class EntityExtractionError(CorefAlignError, ValueError):
    pass


class EntityConflictError(CorefAlignError):
    def __init__(self, sent_ids):
        self.sent_ids = list(sent_ids)
        super().__init__("token count mismatch for sentence(s): " + ", ".join(self.sent_ids))


class ConfigError(CorefAlignError):
    pass


@dataclass(frozen=True)
class Finding:
    """A non-fatal observation produced by a check; findings are data, never raised."""

    kind: str
    message: str
    refs: tuple = field(default=())
    doc_id: str = ""

    def __str__(self):
        where = f"[{self.doc_id}] " if self.doc_id else ""
        return f"{where}{self.kind}: {self.message}"

    def to_dict(self):
        return {"kind": self.kind, "message": self.message, "refs": list(self.refs), "doc_id": self.doc_id}
