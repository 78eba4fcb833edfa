"""BRAT standoff (.ann + .txt) reading and writing.

Offsets are half-open ``[start, end)`` character intervals into the ``.txt``
content (Python ``str`` indices, i.e. Unicode code points, not bytes).

Relation type strings are mapped onto four kinds through an alias table.
The shipped :data:`DEFAULT_RELATION_ALIASES` is a configurable guess and can
be overridden for corpora that use different type names.
"""
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import AnnParseError, BoundsError, DanglingReferenceError, Finding

log = logging.getLogger(__name__)

ANAPHORIC = "anaphoric"
CATAPHORIC = "cataphoric"
BRIDGING = "bridging"
SPLIT_ANTECEDENT = "split-antecedent"
RELATION_KINDS = (ANAPHORIC, CATAPHORIC, BRIDGING, SPLIT_ANTECEDENT)
IDENTITY_KINDS = (ANAPHORIC, CATAPHORIC)

# Configurable defaults; not an authoritative list of NARC type strings.
DEFAULT_RELATION_ALIASES = {
    ANAPHORIC: ["coref", "anaphoric", "anaphor", "ana", "ana_rel", "identity", "ident"],
    CATAPHORIC: ["cataphoric", "cataphor", "cata", "cata_rel"],
    BRIDGING: ["bridging", "bridge", "bridging_rel", "bridg", "bridging_ana"],
    SPLIT_ANTECEDENT: ["split_antecedent", "split-antecedent", "splitante", "split_ante",
                       "split_ant", "split"],
}

_OFFSET_RE = re.compile(r"^(\d+) (\d+)$")


def alias_lookup(aliases=None):
    """Return a case-insensitive ``type string -> kind`` mapping."""
    aliases = DEFAULT_RELATION_ALIASES if aliases is None else aliases
    table = {}
    for kind, names in aliases.items():
        if kind not in RELATION_KINDS:
            raise ValueError(f"unknown relation kind {kind!r} in alias table")
        for name in names:
            table[name.lower()] = kind
    return table


@dataclass(frozen=True)
class Markable:
    id: str
    fragments: tuple
    text: str
    label: str = "Markable"
    lineno: Optional[int] = field(default=None, compare=False)

    @property
    def start(self):
        return self.fragments[0][0]

    @property
    def end(self):
        return self.fragments[-1][1]

    def covered(self, text):
        return " ".join(text[s:e] for s, e in self.fragments)


@dataclass(frozen=True)
class RelationEdge:
    """A link between markables.

    ``source`` is the referring (anaphor-side) markable and ``targets`` its
    antecedent(s); a split-antecedent edge may carry several targets.
    """

    id: str
    kind: str
    source: str
    targets: tuple
    label: str = ""
    roles: tuple = ()
    lineno: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Line:
    index: int
    start: int
    text: str

    @property
    def end(self):
        return self.start + len(self.text)


@dataclass(frozen=True)
class OpaqueRecord:
    """An annotation line of a type we do not interpret (comments, attributes, events...)."""

    raw: str
    lineno: Optional[int] = None


@dataclass
class RawDocument:
    doc_id: str
    text: str
    lines: list
    markables: list = field(default_factory=list)
    relations: list = field(default_factory=list)
    opaque: list = field(default_factory=list)

    def markable_map(self):
        return {m.id: m for m in self.markables}


def split_lines(text):
    """Split ``text`` into newline-terminated lines with their start offsets."""
    lines = []
    pos = 0
    parts = text.split("\n")
    if parts and parts[-1] == "":
        parts.pop()
    for i, part in enumerate(parts):
        lines.append(Line(i, pos, part))
        pos += len(part) + 1
    return lines


def _parse_fragments(field_text, lineno, text_len):
    frags = []
    for piece in field_text.split(";"):
        m = _OFFSET_RE.match(piece.strip())
        if not m:
            raise AnnParseError(f"non-numeric or malformed offsets {piece!r}", lineno)
        s, e = int(m.group(1)), int(m.group(2))
        if s >= e:
            raise AnnParseError(f"empty or inverted fragment {s} {e}", lineno)
        if e > text_len:
            raise BoundsError(f"fragment {s} {e} outside text of length {text_len}", lineno)
        frags.append((s, e))
    for (s0, e0), (s1, e1) in zip(frags, frags[1:]):
        if s1 < e0:
            raise AnnParseError(f"fragments {s0} {e0} and {s1} {e1} overlap or are unsorted", lineno)
    return tuple(frags)


def _parse_relation(cols, lineno, table):
    ann_id = cols[0]
    parts = cols[1].split()
    if len(parts) < 2:
        raise AnnParseError("relation line needs a type and at least one argument", lineno)
    label, args = parts[0], parts[1:]
    if ann_id.startswith("*"):
        # equivalence line: "*\tCoref T1 T2 ..."
        roles = ()
        ids = args
    else:
        roles, ids = [], []
        for arg in args:
            if ":" not in arg:
                raise AnnParseError(f"relation argument {arg!r} lacks a role", lineno)
            role, _, ref = arg.partition(":")
            roles.append(role)
            ids.append(ref)
        roles = tuple(roles)
    if len(ids) < 2:
        raise AnnParseError("relation needs a source and at least one target", lineno)
    kind = table.get(label.lower())
    if kind is None:
        return None
    return RelationEdge(ann_id, kind, ids[0], tuple(ids[1:]), label, roles, lineno)


def parse_ann(ann_text, txt_text, doc_id, aliases=None, check_references=True):
    """Parse one BRAT annotation file against its companion text.

    T-lines become :class:`Markable` objects (``;``-separated offsets become
    several fragments), R-lines and ``*`` lines become :class:`RelationEdge`.
    Other line types, and relations with unknown type strings, are kept as
    :class:`OpaqueRecord` and ignored downstream.
    """
    table = alias_lookup(aliases)
    doc = RawDocument(doc_id, txt_text, split_lines(txt_text))
    for lineno, raw in enumerate(ann_text.splitlines(), start=1):
        if not raw.strip():
            continue
        cols = raw.split("\t")
        tag = cols[0][:1]
        if tag == "T":
            if len(cols) != 3:
                raise AnnParseError(f"expected 3 tab-separated columns, got {len(cols)}", lineno)
            label, _, offsets = cols[1].partition(" ")
            if not offsets:
                raise AnnParseError("missing offsets", lineno)
            frags = _parse_fragments(offsets, lineno, len(txt_text))
            doc.markables.append(Markable(cols[0], frags, cols[2], label, lineno))
        elif tag in ("R", "*"):
            if len(cols) not in (2, 3) or (len(cols) == 3 and cols[2].strip()):
                raise AnnParseError(f"expected 2 tab-separated columns, got {len(cols)}", lineno)
            edge = _parse_relation(cols, lineno, table)
            if edge is None:
                log.warning("%s: unknown relation type on line %d kept as opaque", doc_id, lineno)
                doc.opaque.append(OpaqueRecord(raw, lineno))
            else:
                doc.relations.append(edge)
        else:
            doc.opaque.append(OpaqueRecord(raw, lineno))
    if check_references:
        declared = {m.id for m in doc.markables}
        for edge in doc.relations:
            for ref in (edge.source,) + edge.targets:
                if ref not in declared:
                    raise DanglingReferenceError(
                        f"relation {edge.id} references undeclared markable {ref}", edge.lineno)
    return doc


def read_document(ann_path, txt_path=None, aliases=None):
    ann_path = Path(ann_path)
    txt_path = Path(txt_path) if txt_path else ann_path.with_suffix(".txt")
    return parse_ann(ann_path.read_text(encoding="utf-8"), txt_path.read_text(encoding="utf-8"),
                     ann_path.stem, aliases=aliases)


def iter_ann_dir(directory):
    """Yield ``(ann, txt)`` path pairs in a directory, sorted by document name."""
    for ann in sorted(Path(directory).glob("*.ann")):
        txt = ann.with_suffix(".txt")
        if txt.exists():
            yield ann, txt
        else:
            log.warning("no companion text for %s", ann)


def format_markable(m):
    offsets = ";".join(f"{s} {e}" for s, e in m.fragments)
    return f"{m.id}\t{m.label} {offsets}\t{m.text}"


def format_relation(r):
    if r.roles:
        args = " ".join(f"{role}:{ref}" for role, ref in zip(r.roles, (r.source,) + r.targets))
    else:
        args = " ".join((r.source,) + r.targets)
    return f"{r.id}\t{r.label or r.kind} {args}"


def to_ann(doc):
    """Serialize annotations back to .ann text, in original line order."""
    entries = []
    for i, m in enumerate(doc.markables):
        entries.append((m.lineno, 0, i, format_markable(m)))
    for i, r in enumerate(doc.relations):
        entries.append((r.lineno, 1, i, format_relation(r)))
    for i, o in enumerate(doc.opaque):
        entries.append((o.lineno, 2, i, o.raw))
    big = float("inf")
    entries.sort(key=lambda e: (big if e[0] is None else e[0], e[1], e[2]))
    return "".join(e[3] + "\n" for e in entries)


def _normspace(s):
    return " ".join(s.split())


def validate_markables(doc):
    """Findings for markables whose stored text disagrees with the covered text."""
    findings = []
    for m in doc.markables:
        if _normspace(m.covered(doc.text)) != _normspace(m.text):
            findings.append(Finding("text-mismatch",
                                    f"{m.id} text {m.text!r} != covered {m.covered(doc.text)!r}",
                                    (m.id,), doc.doc_id))
    return findings


def validate_relations(doc):
    """Check relations for self-reference, dangling references and duplicates."""
    declared = {m.id for m in doc.markables}
    findings = []
    seen = {}
    for edge in doc.relations:
        for ref in (edge.source,) + edge.targets:
            if ref not in declared:
                findings.append(Finding("dangling-reference",
                                        f"relation {edge.id} references undeclared {ref}",
                                        (edge.id, ref), doc.doc_id))
        if edge.source in edge.targets:
            findings.append(Finding("self-reference",
                                    f"relation {edge.id} links {edge.source} to itself",
                                    (edge.id, edge.source), doc.doc_id))
        key = (edge.kind, edge.source, tuple(sorted(edge.targets)))
        if key in seen:
            findings.append(Finding("duplicate-relation",
                                    f"relation {edge.id} duplicates {seen[key]}",
                                    (edge.id, seen[key]), doc.doc_id))
        else:
            seen[key] = edge.id
    return findings


def with_markables(doc, markables):
    return replace(doc, markables=list(markables))
