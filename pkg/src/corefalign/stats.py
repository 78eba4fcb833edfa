"""Corpus statistics with explicit counting semantics.

* markables: distinct clusters per document, singletons included, summed
* mentions: mention spans (a discontinuous mention counts once)
* bridging / split-antecedent clusters: link groups, keyed by the anaphor
  (resp. pronoun) cluster, not the number of relations inside a group
* entities: named-entity spans, not tokens
* sentences: non-empty sentences; tokens: syntactic words
"""
import csv
from dataclasses import dataclass, fields

from .clusters import bridge_groups

CATEGORY_LABELS = {
    "sentences": "Sentences",
    "tokens": "Tokens",
    "entities": "Entities",
    "markables": "Markables",
    "mentions": "Mentions",
    "splitante_clusters": "SplitAnte Clusters",
    "bridging_clusters": "Bridging Clusters",
}
LOSS_CATEGORIES = ("sentences", "tokens", "markables", "mentions", "splitante_clusters",
                   "bridging_clusters")
DASH = "\u2014"  # em dash, shown when the base count is zero


@dataclass
class Counts:
    sentences: int = 0
    tokens: int = 0
    entities: int = 0
    markables: int = 0
    mentions: int = 0
    splitante_clusters: int = 0
    bridging_clusters: int = 0

    def __add__(self, other):
        return Counts(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})

    def __sub__(self, other):
        return Counts(**{f.name: getattr(self, f.name) - getattr(other, f.name) for f in fields(self)})

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def count_document(doc, entities=0):
    """Counts for one :class:`~corefalign.records.CorefDocument`."""
    return Counts(
        sentences=sum(1 for s in doc.sentences if s),
        tokens=sum(len(s) for s in doc.sentences),
        entities=entities,
        markables=len({m.cluster for m in doc.mentions}),
        mentions=len(doc.mentions),
        splitante_clusters=len({p for _, p in doc.split_antecedents}),
        bridging_clusters=len(bridge_groups(doc.bridges)),
    )


def count(docs):
    total = Counts()
    for d in docs:
        total = total + count_document(d)
    return total


def count_conllu(sentences, ne_key="name", scheme="plain"):
    """Counts for CoNLL-U sentences, decoding coreference per ``newdoc`` document."""
    from .conllu import decode_entities, split_documents
    from .ne import extract_entities

    total = Counts()
    for doc_id, sents in split_documents(sentences):
        doc = decode_entities(sents, doc_id)
        ents = len(extract_entities(sents, key=ne_key, scheme=scheme))
        total = total + count_document(doc, entities=ents)
    return total


def format_loss(before, after):
    lost = before - after
    if before == 0:
        return f"{lost} ({DASH})"
    return f"{lost} ({100.0 * lost / before:.1f}%)"


def diff(before, after, categories=LOSS_CATEGORIES):
    """Loss rows ``(label, absolute, cell)`` with one-decimal percentages of ``before``."""
    rows = []
    for cat in categories:
        b, a = getattr(before, cat), getattr(after, cat)
        rows.append((CATEGORY_LABELS[cat], b - a, format_loss(b, a)))
    return rows


def write_stats_table(path, columns):
    """Write a category x column table; ``columns`` maps column name to :class:`Counts`."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, delimiter="\t", lineterminator="\n")
        w.writerow(["Category"] + list(columns))
        for cat, label in CATEGORY_LABELS.items():
            w.writerow([label] + [getattr(c, cat) for c in columns.values()])
