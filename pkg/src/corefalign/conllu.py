"""CoNLL-U reading/writing and CorefUD MISC encoding.

Cluster ids are document-scoped integers ("Entity=(1)"); documents are
delimited by ``# newdoc id = ...`` comments.  Global CorefUD entity ids and
the ``global.Entity`` attribute declaration are not produced.
"""
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConlluError, DecodeError, Finding, MergeError, OrderingError
from .records import CorefDocument, Mention, mention_sort_key
from .spans import WordSpan

ID, FORM, LEMMA, UPOS, XPOS, FEATS, HEAD, DEPREL, DEPS, MISC = range(10)

# added MISC items are emitted in this order, after whatever the base row had
ADDED_KEY_ORDER = ("Bridge", "SplitAnte", "Entity")


@dataclass
class ConlluSentence:
    comments: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def meta(self, key):
        prefix = f"# {key} = "
        for c in self.comments:
            if c.startswith(prefix):
                return c[len(prefix):]
            if c.strip() == f"# {key} =":
                return ""
        return None

    def set_meta(self, key, value):
        line = f"# {key} = {value}"
        for i, c in enumerate(self.comments):
            if c.startswith(f"# {key} ="):
                self.comments[i] = line
                return
        self.comments.append(line)

    def drop_meta(self, key):
        self.comments = [c for c in self.comments if not c.startswith(f"# {key} =")]

    @property
    def sent_id(self):
        return self.meta("sent_id")

    @property
    def text(self):
        return self.meta("text")

    def words(self):
        """Rows of syntactic words (integer IDs); multiword ranges and empty nodes excluded."""
        return [r for r in self.rows if r[ID].isdigit()]

    def forms(self):
        return [r[FORM] for r in self.words()]

    def reconstruct_text(self):
        out = []
        skip_until = 0
        for r in self.rows:
            rid = r[ID]
            if "-" in rid:
                a, b = rid.split("-")
                skip_until = int(b)
                out.append(r[FORM])
                out.append("" if "SpaceAfter=No" in MiscField.parse(r[MISC]).items else " ")
            elif rid.isdigit():
                if int(rid) <= skip_until:
                    continue
                out.append(r[FORM])
                out.append("" if "SpaceAfter=No" in MiscField.parse(r[MISC]).items else " ")
        return "".join(out).rstrip(" ")

    def copy(self):
        return ConlluSentence(list(self.comments), [list(r) for r in self.rows])


@dataclass
class MiscField:
    items: list = field(default_factory=list)

    @classmethod
    def parse(cls, column):
        return cls([] if column == "_" else column.split("|"))

    def __str__(self):
        return "|".join(self.items) if self.items else "_"

    def get(self, key):
        for it in self.items:
            k, sep, v = it.partition("=")
            if sep and k == key:
                return v
        return None

    def set(self, key, value):
        item = f"{key}={value}"
        for i, it in enumerate(self.items):
            if it.partition("=")[0] == key:
                self.items[i] = item
                return
        self.items.append(item)

    def remove(self, key):
        self.items = [it for it in self.items if it.partition("=")[0] != key]


def parse_conllu(text):
    """Parse CoNLL-U text into sentences; rows keep their 10 columns verbatim."""
    sentences = []
    cur = ConlluSentence()
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line:
            if cur.comments or cur.rows:
                sentences.append(cur)
                cur = ConlluSentence()
            continue
        if line.startswith("#"):
            if cur.rows:
                raise ConlluError(f"line {lineno}: comment inside sentence")
            cur.comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"line {lineno}: expected 10 columns, got {len(cols)}")
        cur.rows.append(cols)
    if cur.comments or cur.rows:
        sentences.append(cur)
    for s in sentences:
        ids = [int(r[ID]) for r in s.rows if r[ID].isdigit()]
        if ids != list(range(1, len(ids) + 1)):
            raise ConlluError(f"sentence {s.sent_id}: word IDs are not 1..n")
    return sentences


def format_conllu(sentences):
    out = []
    for s in sentences:
        out.extend(s.comments)
        out.extend("\t".join(r) for r in s.rows)
        out.append("")
    return "".join(line + "\n" for line in out)


def read_conllu(path):
    return parse_conllu(Path(path).read_text(encoding="utf-8"))


def write_conllu(sentences, path):
    Path(path).write_text(format_conllu(sentences), encoding="utf-8")


def split_documents(sentences):
    """Group sentences into ``(doc_id, sentences)`` by ``newdoc id`` comments."""
    docs = []
    for s in sentences:
        doc_id = s.meta("newdoc id")
        if doc_id is not None or not docs:
            docs.append((doc_id or "", []))
        docs[-1][1].append(s)
    return docs


# --- entity encoding -------------------------------------------------------


@dataclass(frozen=True)
class _Unit:
    eid: str
    start: int
    end: int
    order: int
    mention: int


def _units_by_sentence(doc):
    units = {}
    for mi, m in enumerate(doc.mentions):
        n = len(m.spans)
        for fi, sp in enumerate(m.spans):
            eid = str(m.cluster) if n == 1 else f"{m.cluster}[{fi + 1}/{n}]"
            units.setdefault(sp.sentence_index, []).append(
                _Unit(eid, sp.start_token, sp.end_token, 0, mi))
    for si, us in units.items():
        us.sort(key=lambda u: (u.start, -u.end, u.mention, u.eid))
        units[si] = [_Unit(u.eid, u.start, u.end, i, u.mention) for i, u in enumerate(us)]
    return units


def find_crossings(doc):
    """Return pairs of mention indices whose fragments cross (neither nested nor disjoint).

    Overlap on exactly one token is not a crossing: the first unit closes
    before the second opens on that token.
    """
    pairs = set()
    for us in _units_by_sentence(doc).values():
        for i, u in enumerate(us):
            for v in us[i + 1:]:
                if v.start >= u.end:
                    continue
                if u.start < v.start < u.end < v.end:
                    pairs.add((u.mention, v.mention))
    return sorted(pairs)


def resolve_crossings(doc):
    """Drop the later-starting mention of every crossing pair.

    Returns a new document and the list of dropped mentions.
    """
    from .records import renumber

    dropped = set()
    while True:
        live = CorefDocument(doc.doc_id, doc.sentences,
                             [m for i, m in enumerate(doc.mentions) if i not in dropped])
        pairs = find_crossings(live)
        if not pairs:
            break
        index = [i for i in range(len(doc.mentions)) if i not in dropped]
        _, later = pairs[0]
        dropped.add(index[later])
    if not dropped:
        return doc, []
    kept = [m for i, m in enumerate(doc.mentions) if i not in dropped]
    mentions, bridges, split, _ = renumber(kept, doc.bridges, doc.split_antecedents)
    lost = [doc.mentions[i] for i in sorted(dropped)]
    return CorefDocument(doc.doc_id, doc.sentences, mentions, bridges, split), lost


def encode_entities(doc):
    """Per-sentence, per-token lists of added MISC items (Bridge, SplitAnte, Entity).

    Brackets at one token: single-token units go first when something
    closes there, otherwise last; closing units pop in stack order
    (innermost first); opening units are ordered outer first.
    """
    anchors = {}
    for m in doc.mentions:
        anchors.setdefault(m.cluster, m)
    bridge_at = {}
    for a, b in doc.bridges:
        if b not in anchors:
            raise OrderingError(f"bridge target cluster {b} has no mention")
        m = anchors[b]
        bridge_at.setdefault((m.sentence, m.start), []).append(f"{a}<{b}")
    split_at = {}
    for antes, p in doc.split_antecedents:
        m = anchors[p]
        split_at.setdefault((m.sentence, m.start), []).extend(f"{a}<{p}" for a in antes)

    units = _units_by_sentence(doc)
    out = []
    for si, words in enumerate(doc.sentences):
        us = units.get(si, [])
        opening = {}
        closing = {}
        single = {}
        for u in us:
            if u.start == u.end:
                single.setdefault(u.start, []).append(u)
            else:
                opening.setdefault(u.start, []).append(u)
                closing.setdefault(u.end, []).append(u)
        stack = []
        tokens = []
        for t in range(len(words)):
            parts = []
            closers = closing.get(t, [])
            singles = [f"({u.eid})" for u in single.get(t, [])]
            close_strs = []
            if closers:
                want = set(u.order for u in closers)
                top = stack[-len(closers):]
                if set(u.order for u in top) != want:
                    names = [doc.mentions[u.mention] for u in closers]
                    raise OrderingError(f"{doc.doc_id}: crossing mentions close at sentence {si} token {t}",
                                        names)
                for _ in closers:
                    close_strs.append(f"{stack.pop().eid})")
            open_units = opening.get(t, [])
            open_strs = [f"({u.eid}" for u in open_units]
            stack.extend(open_units)
            if close_strs:
                entity = "".join(singles + close_strs + open_strs)
            else:
                entity = "".join(open_strs + singles)
            if (si, t) in bridge_at:
                parts.append("Bridge=" + ",".join(bridge_at[(si, t)]))
            if (si, t) in split_at:
                parts.append("SplitAnte=" + ",".join(split_at[(si, t)]))
            if entity:
                parts.append("Entity=" + entity)
            tokens.append(parts)
        if stack:
            raise OrderingError(f"{doc.doc_id}: mentions left open at end of sentence {si}")
        out.append(tokens)
    return out


_BRACKET_RE = re.compile(r"\(([^()]+)\)|\(([^()]+)|([^()]+)\)")
_PART_RE = re.compile(r"^(.+)\[(\d+)/(\d+)\]$")


def parse_entity_value(value):
    """Split an Entity value into ``(kind, eid)`` items; kind is 'open', 'close' or 'single'."""
    pos = 0
    items = []
    while pos < len(value):
        m = _BRACKET_RE.match(value, pos)
        if not m:
            raise ValueError(f"cannot parse Entity value {value!r} at {pos}")
        if m.group(1) is not None:
            items.append(("single", m.group(1)))
        elif m.group(2) is not None:
            items.append(("open", m.group(2)))
        else:
            items.append(("close", m.group(3)))
        pos = m.end()
    return items


def _eid_key(eid):
    # "eid-etype-head..." attribute strings: the eid comes first
    return eid.split("-")[0]


def decode_entities(sentences, doc_id=""):
    """Rebuild a :class:`CorefDocument` from the MISC column of one document."""
    raw_mentions = []  # (cluster key, [(sent, start, end), ...])
    partial = {}  # (cluster, n) -> index into raw_mentions of incomplete discontinuous mention
    raw_bridges = []
    raw_split = {}
    words_all = []
    for si, sent in enumerate(sentences):
        words = sent.words()
        words_all.append([r[FORM] for r in words])
        stack = []
        for ti, row in enumerate(words):
            misc = MiscField.parse(row[MISC])
            value = misc.get("Entity")
            if value is not None:
                try:
                    items = parse_entity_value(value)
                except ValueError as e:
                    raise DecodeError(str(e), sent.sent_id, ti + 1) from e
                for kind, eid in items:
                    key = _eid_key(eid)
                    if kind in ("open", "single"):
                        entry = [key, ti]
                        if kind == "single":
                            _attach(raw_mentions, partial, key, si, ti, ti)
                        else:
                            stack.append(entry)
                    else:
                        for j in range(len(stack) - 1, -1, -1):
                            if stack[j][0] == key:
                                _, start = stack.pop(j)
                                _attach(raw_mentions, partial, key, si, start, ti)
                                break
                        else:
                            raise DecodeError(f"closing {eid!r} without opening bracket", sent.sent_id, ti + 1)
            for name, target in (("Bridge", raw_bridges), ("SplitAnte", None)):
                v = misc.get(name)
                if v is None:
                    continue
                for link in v.split(","):
                    src, sep, tgt = link.partition("<")
                    if not sep:
                        raise DecodeError(f"cannot parse {name} link {link!r}", sent.sent_id, ti + 1)
                    tgt = tgt.split(":")[0]
                    if target is not None:
                        target.append((src, tgt))
                    else:
                        raw_split.setdefault(tgt, []).append(src)
        if stack:
            raise DecodeError(f"unclosed entity {stack[-1][0]!r}", sent.sent_id, stack[-1][1] + 1)
    for (key, n), idx in partial.items():
        if idx is not None:
            raise DecodeError(f"discontinuous mention of {key} is incomplete", doc_id, None)

    keys = [k for k, _ in raw_mentions]
    numeric = all(k.isdigit() for k in keys)
    distinct = set(keys)
    if numeric and {int(k) for k in distinct} == set(range(1, len(distinct) + 1)):
        mapping = {k: int(k) for k in distinct}
    else:
        ordered = sorted(raw_mentions, key=lambda m: (m[1][0][0], m[1][0][1], -m[1][-1][2]))
        mapping = {}
        for k, _ in ordered:
            mapping.setdefault(k, len(mapping) + 1)
    mentions = []
    for key, frags in raw_mentions:
        spans = tuple(WordSpan(s, a, b, i) for i, (s, a, b) in enumerate(frags))
        mentions.append(Mention(mapping[key], spans))
    mentions.sort(key=mention_sort_key)
    try:
        bridges = sorted({(mapping[a], mapping[b]) for a, b in raw_bridges})
        split = sorted((tuple(sorted({mapping[a] for a in antes})), mapping[p])
                       for p, antes in raw_split.items())
    except KeyError as e:
        raise DecodeError(f"link references undefined entity {e.args[0]!r}", doc_id, None) from e
    return CorefDocument(doc_id, words_all, mentions, bridges, split)


def _attach(raw_mentions, partial, eid, si, start, end):
    m = _PART_RE.match(eid)
    if not m:
        raw_mentions.append((eid, [(si, start, end)]))
        return
    key, i, n = m.group(1), int(m.group(2)), int(m.group(3))
    slot = (key, n)
    if i == 1:
        raw_mentions.append((key, [(si, start, end)]))
        partial[slot] = len(raw_mentions) - 1 if n > 1 else None
    else:
        idx = partial.get(slot)
        if idx is None:
            raise DecodeError(f"part {i}/{n} of {key} without first part", None, end + 1)
        raw_mentions[idx][1].append((si, start, end))
        if i == n:
            partial[slot] = None


def merge_misc(base, additions):
    """Return a copy of ``base`` with per-word MISC items appended.

    Every column but MISC is taken from ``base``.  Exact duplicate items are
    not repeated.
    """
    words = base.words()
    if len(words) != len(additions):
        raise MergeError(f"sentence {base.sent_id}: {len(words)} words but {len(additions)} additions")
    out = base.copy()
    it = iter(additions)
    for row in out.rows:
        if not row[ID].isdigit():
            continue
        add = next(it)
        if not add:
            continue
        misc = MiscField.parse(row[MISC])
        for item in add:
            if item not in misc.items:
                misc.items.append(item)
        row[MISC] = str(misc)
    return out


def strip_coref(sentence):
    """Copy of ``sentence`` with Entity/Bridge/SplitAnte MISC items removed."""
    out = sentence.copy()
    for row in out.rows:
        misc = MiscField.parse(row[MISC])
        for key in ADDED_KEY_ORDER:
            misc.remove(key)
        row[MISC] = str(misc)
    return out


# --- level-6 subset ----------------------------------------------------------


def validate_level6(sentences):
    """Check Entity bracket balance, nesting order and link references.

    Documents are delimited by ``newdoc id`` comments; cluster ids are
    scoped to their document.
    """
    findings = []
    for doc_id, sents in split_documents(sentences):
        defined = set()
        pending = []  # (sent_id, token, kind, eid) link references to check at doc end
        for sent in sents:
            stack = []
            for ti, row in enumerate(sent.words(), start=1):
                misc = MiscField.parse(row[MISC])
                where = (sent.sent_id, ti)
                starting = set()
                value = misc.get("Entity")
                if value is not None:
                    try:
                        items = parse_entity_value(value)
                    except ValueError as e:
                        findings.append(Finding("entity-syntax", str(e), where, doc_id))
                        items = []
                    seen_open = seen_close = False
                    for kind, eid in items:
                        key = _eid_key(eid)
                        base = _PART_RE.match(key)
                        cluster = base.group(1) if base else key
                        if kind == "close":
                            if seen_open:
                                findings.append(Finding("entity-order",
                                                        f"closing {eid} after an opening bracket in {value!r}",
                                                        where, doc_id))
                            seen_close = True
                            for j in range(len(stack) - 1, -1, -1):
                                if stack[j][0] == key:
                                    if j != len(stack) - 1:
                                        findings.append(Finding(
                                            "entity-order",
                                            f"closing {eid} while {stack[-1][0]} is innermost",
                                            where, doc_id))
                                    stack.pop(j)
                                    break
                            else:
                                findings.append(Finding("entity-unbalanced",
                                                        f"closing {eid} without opening", where, doc_id))
                        elif kind == "open":
                            seen_open = True
                            stack.append((key, ti))
                            defined.add(cluster)
                            starting.add(cluster)
                        else:
                            if seen_open and seen_close:
                                findings.append(Finding("entity-order",
                                                        f"single {eid} between closings and openings",
                                                        where, doc_id))
                            defined.add(cluster)
                            starting.add(cluster)
                for name in ("Bridge", "SplitAnte"):
                    v = misc.get(name)
                    if v is None:
                        continue
                    if value is None:
                        findings.append(Finding("link-without-entity",
                                                f"{name} without Entity in MISC", where, doc_id))
                    for link in v.split(","):
                        src, sep, tgt = link.partition("<")
                        tgt = tgt.split(":")[0]
                        if not sep:
                            findings.append(Finding("link-syntax", f"cannot parse {link!r}", where, doc_id))
                            continue
                        if src == tgt:
                            findings.append(Finding("link-self", f"{name} {link} points to itself",
                                                    where, doc_id))
                        if tgt not in starting:
                            findings.append(Finding("link-misplaced",
                                                    f"{name} {link} not at the start of a mention of {tgt}",
                                                    where, doc_id))
                        pending.append((where, name, src))
            for key, ti in stack:
                findings.append(Finding("entity-unbalanced", f"{key} still open at sentence end",
                                        (sent.sent_id, ti), doc_id))
        for where, name, src in pending:
            if src not in defined:
                findings.append(Finding("link-undefined", f"{name} references undefined entity {src}",
                                        where, doc_id))
    return findings
