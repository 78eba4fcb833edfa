"""Word-indexed document records and their JSON-lines serialization.

A record line looks like::

    {"version": 1, "doc_key": "...", "sentences": [["Tok", ...], ...],
     "clusters": [[[[sent, start, end], ...], ...], ...],
     "markable_ids": [[...], ...], "bridges": [[a, b], ...],
     "split_antecedents": [[[a1, a2], p], ...]}

``clusters[k-1]`` lists the mentions of cluster ``k``; each mention is a
list of ``[sentence, start_token, end_token]`` fragments (inclusive ends).
"""
import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import AssemblyError, RecordError
from .spans import WordSpan

RECORD_VERSION = 1


@dataclass(frozen=True)
class Mention:
    cluster: int
    spans: tuple
    markable_id: Optional[str] = field(default=None, compare=False)

    @property
    def sentence(self):
        return self.spans[0].sentence_index

    @property
    def start(self):
        return self.spans[0].start_token

    @property
    def end(self):
        return self.spans[-1].end_token


def mention_sort_key(m):
    return (m.sentence, m.start, -m.end, m.cluster,
            tuple((s.start_token, s.end_token) for s in m.spans))


@dataclass
class CorefDocument:
    doc_id: str
    sentences: list
    mentions: list = field(default_factory=list)
    bridges: list = field(default_factory=list)
    split_antecedents: list = field(default_factory=list)

    @property
    def n_clusters(self):
        return len({m.cluster for m in self.mentions})

    def check(self):
        """Raise :class:`AssemblyError` if any record invariant is broken."""
        for m in self.mentions:
            if not m.spans:
                raise AssemblyError(f"{self.doc_id}: mention without spans")
            for s in m.spans:
                if not 0 <= s.sentence_index < len(self.sentences):
                    raise AssemblyError(f"{self.doc_id}: span {s} outside document")
                if not 0 <= s.start_token <= s.end_token < len(self.sentences[s.sentence_index]):
                    raise AssemblyError(f"{self.doc_id}: span {s} outside sentence")
        clusters = {m.cluster for m in self.mentions}
        if clusters != set(range(1, len(clusters) + 1)):
            raise AssemblyError(f"{self.doc_id}: cluster numbers not contiguous: {sorted(clusters)}")
        if self.mentions != sorted(self.mentions, key=mention_sort_key):
            raise AssemblyError(f"{self.doc_id}: mentions out of order")
        for a, b in self.bridges:
            if a not in clusters or b not in clusters:
                raise AssemblyError(f"{self.doc_id}: bridge {a}<{b} references missing cluster")
        for antes, p in self.split_antecedents:
            if p not in clusters or any(a not in clusters for a in antes):
                raise AssemblyError(f"{self.doc_id}: split antecedent group of {p} invalid")
        return self


def renumber(mentions, bridges=(), split_antecedents=()):
    """Sort mentions and renumber clusters 1..K by first mention.

    Links pointing at clusters without surviving mentions are dropped and
    returned as the third element.
    """
    mentions = sorted(mentions, key=mention_sort_key)
    mapping = {}
    for m in mentions:
        if m.cluster not in mapping:
            mapping[m.cluster] = len(mapping) + 1
    new_mentions = [Mention(mapping[m.cluster], m.spans, m.markable_id) for m in mentions]
    new_mentions.sort(key=mention_sort_key)
    dropped = []
    new_bridges = set()
    for a, b in bridges:
        if a in mapping and b in mapping:
            new_bridges.add((mapping[a], mapping[b]))
        else:
            dropped.append(("bridge", (a, b)))
    new_split = []
    for antes, p in split_antecedents:
        kept = tuple(sorted(mapping[a] for a in antes if a in mapping))
        if p in mapping and kept:
            new_split.append((kept, mapping[p]))
        else:
            dropped.append(("split-antecedent", (tuple(antes), p)))
    return new_mentions, sorted(new_bridges), sorted(new_split), dropped


def assemble(doc, cs, spans, words=None):
    """Combine a parsed document, its clusters and word spans into a record.

    ``spans`` maps markable id to its list of :class:`WordSpan`; markables
    missing from it were dropped upstream.  ``words`` defaults to the
    whitespace tokens of each line.
    """
    if words is None:
        words = [ln.text.split() for ln in doc.lines]
    member = cs.membership()
    mentions = [Mention(member[m.id], tuple(spans[m.id]), m.id)
                for m in doc.markables if m.id in spans]
    mentions, bridges, split, _ = renumber(mentions, cs.bridges, cs.split_antecedents)
    return CorefDocument(doc.doc_id, [list(w) for w in words], mentions, bridges, split).check()


def to_json(doc):
    n = doc.n_clusters
    clusters = [[] for _ in range(n)]
    ids = [[] for _ in range(n)]
    for m in doc.mentions:
        clusters[m.cluster - 1].append([[s.sentence_index, s.start_token, s.end_token] for s in m.spans])
        ids[m.cluster - 1].append(m.markable_id)
    return {
        "version": RECORD_VERSION,
        "doc_key": doc.doc_id,
        "sentences": doc.sentences,
        "clusters": clusters,
        "markable_ids": ids,
        "bridges": [list(b) for b in doc.bridges],
        "split_antecedents": [[list(a), p] for a, p in doc.split_antecedents],
    }


def from_json(obj):
    if obj.get("version") != RECORD_VERSION:
        raise RecordError(f"unsupported record version {obj.get('version')!r}")
    mentions = []
    ids = obj.get("markable_ids") or [[None] * len(c) for c in obj["clusters"]]
    for k, (cluster, cids) in enumerate(zip(obj["clusters"], ids), start=1):
        for mention, mid in zip(cluster, cids):
            spans = tuple(WordSpan(s, a, b, i) for i, (s, a, b) in enumerate(mention))
            mentions.append(Mention(k, spans, mid))
    mentions.sort(key=mention_sort_key)
    return CorefDocument(
        obj["doc_key"],
        [list(s) for s in obj["sentences"]],
        mentions,
        [tuple(b) for b in obj["bridges"]],
        [(tuple(a), p) for a, p in obj["split_antecedents"]],
    )


def dumps(doc):
    return json.dumps(to_json(doc), ensure_ascii=False, separators=(",", ":"))


def write_records(docs, path):
    with open(path, "w", encoding="utf-8") as f:
        for d in docs:
            f.write(dumps(d) + "\n")


def append_record(doc, fh):
    fh.write(dumps(doc) + "\n")


def read_records(path):
    docs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                docs.append(from_json(json.loads(line)).check())
            except RecordError as e:
                raise RecordError(str(e), lineno) from e
            except (ValueError, KeyError, TypeError, AssemblyError) as e:
                raise RecordError(f"malformed record: {e}", lineno) from e
    return docs
