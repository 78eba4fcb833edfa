"""BRAT document -> word-indexed record."""
from dataclasses import dataclass, field, replace

from .brat import parse_ann, validate_markables, validate_relations
from .clusters import build_clusters
from .errors import Finding, SpanError
from .records import assemble
from .spans import char_to_word, correct_pipe_spans, tokenize_lines


@dataclass
class Conversion:
    record: object
    pipe_corrections: int = 0
    findings: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    cluster_notes: list = field(default_factory=list)


def convert_raw(raw, pipe_correction=True):
    findings = validate_markables(raw)
    rel_findings = validate_relations(raw)
    findings += rel_findings
    bad_edges = {f.refs[0] for f in rel_findings if f.kind in ("self-reference", "dangling-reference")}
    if bad_edges:
        raw = replace(raw, relations=[r for r in raw.relations if r.id not in bad_edges])
    count = 0
    if pipe_correction:
        raw, count = correct_pipe_spans(raw)
    cs = build_clusters(raw)
    table = tokenize_lines(raw)
    findings += table.notes
    spans = {}
    losses = []
    for m in raw.markables:
        snaps = []
        try:
            spans[m.id] = char_to_word(m, table, snaps)
        except SpanError as e:
            losses.append(Finding("mention-dropped", str(e), (m.id,), raw.doc_id))
            continue
        findings += [replace(f, doc_id=raw.doc_id) for f in snaps]
    record = assemble(raw, cs, spans, words=table.words())
    return Conversion(record, count, findings, losses, cs.notes)


def convert_document(ann_text, txt_text, doc_id, aliases=None, pipe_correction=True):
    return convert_raw(parse_ann(ann_text, txt_text, doc_id, aliases=aliases), pipe_correction)
