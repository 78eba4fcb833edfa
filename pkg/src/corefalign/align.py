"""Sentence alignment of converted documents with UD treebank splits.

Per document: every line gets UD candidates (exact, normalized, then
window-restricted fuzzy matching), lines with a single candidate act as
anchors, the remaining ambiguous lines are resolved jointly as a linear
assignment over anchored offset distances, and documents whose sentences
land in more than one split are discarded.
"""
import bisect
import logging
import unicodedata
from dataclasses import dataclass, field
from difflib import SequenceMatcher
from typing import Callable, Optional

from . import assignment
from .conllu import decode_entities, encode_entities, merge_misc, read_conllu, resolve_crossings, strip_coref
from .errors import Finding, IndexBuildError, UnresolvableDocumentError
from .records import CorefDocument, Mention, renumber
from .spans import WordSpan
from .stats import Counts, count_document

log = logging.getLogger(__name__)

SPLITS = ("train", "test", "dev")

EXACT = "exact"
NORMALIZED = "normalized"
FUZZY = "fuzzy"
LEMMA_INJECTION = "lemma-injection"
LOST = "lost"
EMPTY = "empty"

ALIGNED = "aligned"
DISCARDED = "discarded:split-overlap"
MOVED = "moved:other-treebank"
UNMATCHED = "unmatched"


@dataclass
class AlignSettings:
    drop_pipe_tokens: bool = True
    strip_dash_prefix: bool = True
    fuzzy: bool = True
    fuzzy_min_tokens: int = 3
    fuzzy_typo_ratio: float = 0.8
    fuzzy_window_slack: int = 2
    max_anchor_jump: Optional[int] = 50
    home_match_ratio: float = 0.5
    cross_split_penalty: Optional[float] = None
    score: Optional[Callable] = None


DEFAULT_SETTINGS = AlignSettings()


def is_punct(token):
    return bool(token) and all(unicodedata.category(ch).startswith("P") for ch in token)


DASH_TOKENS = ("-", "\u2013", "\u2014")


def normalize_tokens(tokens, settings=DEFAULT_SETTINGS):
    toks = list(tokens)
    if settings.drop_pipe_tokens:
        toks = [t for t in toks if t != "|"]
    if settings.strip_dash_prefix and len(toks) > 1 and toks[0] in DASH_TOKENS:
        toks = toks[1:]
    return toks


# --- index ---------------------------------------------------------------


@dataclass
class TreebankIndex:
    name: str = ""
    text_to_ids: dict = field(default_factory=dict)
    norm_to_ids: dict = field(default_factory=dict)
    id_to_split: dict = field(default_factory=dict)
    id_to_position: dict = field(default_factory=dict)
    by_split: dict = field(default_factory=dict)
    sentences: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.id_to_split)

    def forms(self, sid):
        return self.sentences[sid].forms()

    def at(self, split, pos):
        ids = self.by_split.get(split, [])
        return ids[pos] if 0 <= pos < len(ids) else None


def build_index(splits, name="", settings=DEFAULT_SETTINGS):
    """Index treebank sentences by their space-joined word forms.

    ``splits`` maps split name to a CoNLL-U path or a list of already
    parsed sentences.
    """
    index = TreebankIndex(name=name)
    for split, source in splits.items():
        sentences = read_conllu(source) if not isinstance(source, list) else source
        ids = index.by_split.setdefault(split, [])
        for k, sent in enumerate(sentences):
            if not sent.rows:
                continue
            sid, text = sent.sent_id, sent.text
            if sid is None or text is None:
                where = source if not isinstance(source, list) else split
                missing = "sent_id" if sid is None else "text"
                raise IndexBuildError(f"{where}: sentence {k + 1} has no {missing} comment")
            if sid in index.id_to_split:
                raise IndexBuildError(f"sent_id {sid} occurs in {index.id_to_split[sid]} and {split}")
            index.id_to_split[sid] = split
            index.id_to_position[sid] = len(ids)
            ids.append(sid)
            index.sentences[sid] = sent
            forms = sent.forms()
            index.text_to_ids.setdefault(" ".join(forms), []).append(sid)
            index.norm_to_ids.setdefault(" ".join(normalize_tokens(forms, settings)), []).append(sid)
    return index


# --- matching --------------------------------------------------------------


@dataclass
class LineMatch:
    line: int
    candidates: tuple
    kind: str


def fuzzy_kind(source, target, settings=DEFAULT_SETTINGS):
    """Classify a near match between two normalized token lists, or return None.

    Punctuation-only differences give ``fuzzy``; one substituted content
    token gives ``lemma-injection`` when the sentence is long enough or the
    two tokens are close in spelling.
    """
    a = [t for t in source if not is_punct(t)]
    b = [t for t in target if not is_punct(t)]
    if a == b:
        return FUZZY
    if len(a) != len(b) or not a:
        return None
    diff = [(x, y) for x, y in zip(a, b) if x != y]
    if len(diff) != 1:
        return None
    x, y = diff[0]
    if len(a) >= settings.fuzzy_min_tokens or SequenceMatcher(None, x, y).ratio() >= settings.fuzzy_typo_ratio:
        return LEMMA_INJECTION
    return None


def _window(line, anchors, settings):
    """UD (split, position) slots a line may fuzzily match, bounded by its anchors."""
    before = [a for a in anchors if a[0] < line]
    after = [a for a in anchors if a[0] > line]
    prev = before[-1] if before else None
    nxt = after[0] if after else None
    slack = settings.fuzzy_window_slack
    slots = set()
    if prev:
        hi = prev[3] + (line - prev[0]) + slack
        slots.update((prev[2], p) for p in range(prev[3] + 1, hi + 1))
    if nxt:
        lo = max(0, nxt[3] - (nxt[0] - line) - slack)
        slots.update((nxt[2], p) for p in range(lo, nxt[3]))
    if prev and nxt and prev[2] == nxt[2] and prev[3] < nxt[3]:
        # consistent anchors: stay strictly between them; otherwise keep both one-sided windows
        slots = {(s, p) for s, p in slots if s == prev[2] and prev[3] < p < nxt[3]}
    return sorted(slots)


def match_sentences(doc, index, settings=DEFAULT_SETTINGS):
    """Candidate UD ids for each line of ``doc`` (a CorefDocument)."""
    matches = []
    for i, toks in enumerate(doc.sentences):
        if not toks:
            matches.append(LineMatch(i, (), EMPTY))
            continue
        ids = index.text_to_ids.get(" ".join(toks))
        if ids:
            matches.append(LineMatch(i, tuple(ids), EXACT))
            continue
        ids = index.norm_to_ids.get(" ".join(normalize_tokens(toks, settings)))
        if ids:
            matches.append(LineMatch(i, tuple(ids), NORMALIZED))
            continue
        matches.append(LineMatch(i, (), LOST))
    if not settings.fuzzy:
        return matches
    anchors = [(m.line, m.candidates[0], index.id_to_split[m.candidates[0]],
                index.id_to_position[m.candidates[0]])
               for m in matches if len(m.candidates) == 1]
    if not anchors:
        return matches
    for m in matches:
        if m.kind != LOST:
            continue
        src = normalize_tokens(doc.sentences[m.line], settings)
        found = []
        kinds = set()
        for split, pos in _window(m.line, anchors, settings):
            sid = index.at(split, pos)
            if sid is None:
                continue
            kind = fuzzy_kind(src, normalize_tokens(index.forms(sid), settings), settings)
            if kind:
                found.append(sid)
                kinds.add(kind)
        if found:
            kind = LEMMA_INJECTION if LEMMA_INJECTION in kinds else FUZZY
            matches[m.line] = LineMatch(m.line, tuple(dict.fromkeys(found)), kind)
    return matches


# --- disambiguation -----------------------------------------------------------


def anchored_offset_score(line, sid, anchors, index, penalty):
    """Sum over the nearest anchor on each side of the offset disagreement.

    For an anchor at line ``a`` resolved to position ``p_a``, a candidate at
    position ``p`` costs ``|(p - p_a) - (line - a)|``; anchors in a
    different split contribute ``penalty``.
    """
    split = index.id_to_split[sid]
    pos = index.id_to_position[sid]
    total = 0.0
    for a_line, a_sid in anchors:
        if index.id_to_split[a_sid] != split:
            total += penalty
        else:
            total += abs((pos - index.id_to_position[a_sid]) - (line - a_line))
    return total


def nearest_anchors(line, anchor_lines):
    """The closest anchor line before and after ``line`` (one-sided at the edges)."""
    k = bisect.bisect_left(anchor_lines, line)
    return anchor_lines[max(k - 1, 0):k] + anchor_lines[k:k + 1]


@dataclass
class Resolution:
    resolved: list
    anchors: list
    ambiguous: list
    lost: list = field(default_factory=list)
    findings: list = field(default_factory=list)


def _pick_anchors(matches, index, settings, doc_id):
    singles = {}
    for m in matches:
        if len(m.candidates) == 1:
            singles.setdefault(m.candidates[0], []).append(m.line)
    anchors = {lines[0]: sid for sid, lines in singles.items() if len(lines) == 1}
    findings = []
    if settings.max_anchor_jump is not None and len(anchors) > 2:
        order = sorted(anchors)

        def jump(a, b):
            sa, sb = anchors[a], anchors[b]
            if index.id_to_split[sa] != index.id_to_split[sb]:
                return float("inf")
            return abs((index.id_to_position[sb] - index.id_to_position[sa]) - (b - a))

        outliers = []
        for k, a in enumerate(order):
            neigh = [order[j] for j in (k - 1, k + 1) if 0 <= j < len(order)]
            if all(jump(a, b) > settings.max_anchor_jump for b in neigh):
                outliers.append(a)
        for a in outliers:
            findings.append(Finding("anchor-outlier",
                                    f"line {a} matches {anchors[a]} far from its neighbours",
                                    (a, anchors[a]), doc_id))
            del anchors[a]
    return anchors, findings


def disambiguate(doc, matches, index, settings=DEFAULT_SETTINGS):
    """Resolve every line to at most one UD id, injectively within the document."""
    anchors, findings = _pick_anchors(matches, index, settings, doc.doc_id)
    used = set(anchors.values())
    ambiguous = []
    for m in matches:
        if m.line in anchors or not m.candidates:
            continue
        cands = tuple(c for c in m.candidates if c not in used)
        if cands:
            ambiguous.append((m.line, cands))
    resolved = [None] * len(matches)
    for line, sid in anchors.items():
        resolved[line] = sid
    lost = [m.line for m in matches if m.candidates and m.line not in anchors
            and all(c in used for c in m.candidates)]
    if not ambiguous:
        return Resolution(resolved, sorted(anchors), [], lost, findings)
    if not anchors:
        raise UnresolvableDocumentError(f"{doc.doc_id}: {len(ambiguous)} ambiguous lines but no anchor")

    penalty = settings.cross_split_penalty
    if penalty is None:
        penalty = 2 * len(index) + 1
    score = settings.score or anchored_offset_score
    anchor_lines = sorted(anchors)
    columns = sorted({c for _, cands in ambiguous for c in cands},
                     key=lambda s: (SPLITS.index(index.id_to_split[s]) if index.id_to_split[s] in SPLITS
                                    else len(SPLITS), index.id_to_split[s], index.id_to_position[s]))
    col_of = {c: j for j, c in enumerate(columns)}
    real = {}
    for r, (line, cands) in enumerate(ambiguous):
        near = [(a, anchors[a]) for a in nearest_anchors(line, anchor_lines)]
        for c in cands:
            real[r, col_of[c]] = score(line, c, near, index, penalty)
    n = len(ambiguous)
    lost_cost = max(real.values()) * n + 1
    forbid = 2 * lost_cost
    width = len(columns) + n
    matrix = [[forbid] * width for _ in range(n)]
    for (r, j), v in real.items():
        matrix[r][j] = v
    for r in range(n):
        matrix[r][len(columns) + r] = lost_cost
    assign, _ = assignment.solve(matrix)
    picked = {}
    for r, j in enumerate(assign):
        line = ambiguous[r][0]
        if j < len(columns) and (r, j) in real:
            picked[r] = j
        else:
            lost.append(line)
            findings.append(Finding("unassigned", f"line {line} lost; candidates {list(ambiguous[r][1])}",
                                    (line,) + ambiguous[r][1], doc.doc_id))
    _uncross(picked, real, columns, index)
    for r, j in picked.items():
        resolved[ambiguous[r][0]] = columns[j]
    return Resolution(resolved, anchor_lines, [line for line, _ in ambiguous], sorted(lost), findings)


def _uncross(picked, real, columns, index):
    """Swap crossed pairs of picks when the swap does not raise the cost.

    Among equally cheap assignments this prefers the one in document order.
    Each swap removes an inversion, so the loop terminates.
    """
    def key(j):
        s = columns[j]
        return index.id_to_split[s], index.id_to_position[s]

    rows = sorted(picked)
    changed = True
    while changed:
        changed = False
        for x, r1 in enumerate(rows):
            for r2 in rows[x + 1:]:
                j1, j2 = picked[r1], picked[r2]
                k1, k2 = key(j1), key(j2)
                if k1[0] != k2[0] or k1[1] <= k2[1]:
                    continue
                if (r1, j2) not in real or (r2, j1) not in real:
                    continue
                if real[r1, j2] + real[r2, j1] <= real[r1, j1] + real[r2, j2]:
                    picked[r1], picked[r2] = j2, j1
                    changed = True


def monotonicity_violations(resolved, index):
    """Pairs of consecutive resolved lines whose UD positions do not increase."""
    bad = []
    prev = None
    for line, sid in enumerate(resolved):
        if sid is None:
            continue
        if prev is not None:
            pl, ps = prev
            if index.id_to_split[ps] == index.id_to_split[sid] and \
                    index.id_to_position[sid] <= index.id_to_position[ps]:
                bad.append((pl, line))
        prev = (line, sid)
    return bad


@dataclass
class SplitCheck:
    status: str
    splits: tuple
    split: Optional[str] = None


def check_split_overlap(doc, resolved, index):
    present = {index.id_to_split[s] for s in resolved if s is not None}
    splits = tuple(sorted(present, key=lambda s: (SPLITS.index(s) if s in SPLITS else len(SPLITS), s)))
    if len(splits) > 1:
        return SplitCheck(DISCARDED, splits)
    return SplitCheck(ALIGNED, splits, splits[0] if splits else None)


# --- cross-treebank ----------------------------------------------------------


def exact_ratio(doc, index, settings=DEFAULT_SETTINGS, normalized=False):
    lines = [s for s in doc.sentences if s]
    if not lines:
        return 0.0
    hits = 0
    for toks in lines:
        if " ".join(toks) in index.text_to_ids:
            hits += 1
        elif normalized and " ".join(normalize_tokens(toks, settings)) in index.norm_to_ids:
            hits += 1
    return hits / len(lines)


@dataclass
class FallbackOutcome:
    status: str
    target: Optional[str] = None
    finding: Optional[Finding] = None


def cross_treebank_fallback(doc, others, declared=None, settings=DEFAULT_SETTINGS):
    """Decide whether a document belongs to another treebank.

    ``others`` maps treebank name to index.  A document whose lines mostly
    match another treebank exactly is ``moved`` there, unless it also
    mostly matches ``declared``, in which case it is kept with a finding.
    """
    homes = [name for name, idx in sorted(others.items())
             if exact_ratio(doc, idx, settings) > settings.home_match_ratio]
    if declared is not None and exact_ratio(doc, declared, settings, normalized=True) > settings.home_match_ratio:
        if homes:
            f = Finding("ambiguous-home", f"also matches {', '.join(homes)}; kept in declared treebank",
                        tuple(homes), doc.doc_id)
            return FallbackOutcome("kept", declared.name, f)
        return FallbackOutcome("kept", declared.name)
    if homes:
        return FallbackOutcome(MOVED, homes[0])
    return FallbackOutcome(UNMATCHED)


# --- merging -------------------------------------------------------------------


def map_tokens(source, target):
    """Index map from ``source`` tokens to ``target`` tokens (None where unmatched)."""
    sm = SequenceMatcher(None, source, target, autojunk=False)
    mapping = [None] * len(source)
    for tag, i1, i2, j1, j2 in sm.get_opcodes():
        if tag == "equal" or (tag == "replace" and i2 - i1 == j2 - j1):
            for k in range(i2 - i1):
                mapping[i1 + k] = j1 + k
        elif tag == "replace":
            for k in range(i2 - i1):
                mapping[i1 + k] = j1 + (k * (j2 - j1)) // (i2 - i1)
    return mapping


@dataclass
class Loss:
    kind: str
    detail: str
    refs: tuple = ()

    def to_dict(self):
        return {"kind": self.kind, "detail": self.detail, "refs": [str(r) for r in self.refs]}


def project_document(doc, resolved, index):
    """Carry mentions from document lines onto the resolved UD sentences.

    Returns the projected CorefDocument over UD words, the UD sentences in
    line order, and a list of :class:`Loss` records.
    """
    losses = []
    line_to_out = {}
    ud_sents = []
    maps = {}
    for line, sid in enumerate(resolved):
        if sid is None:
            if doc.sentences[line]:
                losses.append(Loss("sentence", f"line {line} not aligned", (line,)))
            continue
        line_to_out[line] = len(ud_sents)
        ud = index.sentences[sid]
        ud_sents.append(ud)
        maps[line] = map_tokens(doc.sentences[line], ud.forms())
    mentions = []
    for m in doc.mentions:
        spans = []
        for sp in m.spans:
            if sp.sentence_index not in line_to_out:
                spans = None
                break
            mp = maps[sp.sentence_index]
            hit = [mp[t] for t in range(sp.start_token, sp.end_token + 1) if mp[t] is not None]
            if not hit:
                spans = None
                break
            spans.append((line_to_out[sp.sentence_index], min(hit), max(hit)))
        if spans is None:
            losses.append(Loss("mention", f"mention {m.markable_id or ''} of cluster {m.cluster} lost",
                               (m.cluster, m.markable_id or "")))
            continue
        merged = []
        for s, a, b in spans:
            if merged and merged[-1][0] == s and merged[-1][2] >= a - 1:
                merged[-1] = (s, merged[-1][1], max(b, merged[-1][2]))
            else:
                merged.append((s, a, b))
        mentions.append(Mention(m.cluster, tuple(WordSpan(s, a, b, i) for i, (s, a, b) in enumerate(merged)),
                                m.markable_id))
    mentions, bridges, split, dropped = renumber(mentions, doc.bridges, doc.split_antecedents)
    for kind, ref in dropped:
        losses.append(Loss(kind, f"{kind} link {ref} lost with its cluster", (ref,)))
    projected = CorefDocument(doc.doc_id, [u.forms() for u in ud_sents], mentions, bridges, split)
    projected, crossing = resolve_crossings(projected)
    for m in crossing:
        losses.append(Loss("mention", f"crossing mention of cluster {m.cluster} dropped",
                           (m.cluster, m.markable_id or "")))
    return projected.check(), ud_sents, losses


def emit_sentences(projected, ud_sents, doc_id):
    """Merged CoNLL-U sentences with coreference MISC and a newdoc comment."""
    encoded = encode_entities(projected)
    out = []
    for k, (ud, adds) in enumerate(zip(ud_sents, encoded)):
        sent = merge_misc(strip_coref(ud), adds)
        sent.drop_meta("newdoc id")
        if k == 0:
            sent.comments.insert(0, f"# newdoc id = {doc_id}")
        out.append(sent)
    return out


@dataclass
class DocumentAlignment:
    doc_id: str
    treebank: str
    outcome: str
    target: Optional[str] = None
    split: Optional[str] = None
    splits: tuple = ()
    matches: list = field(default_factory=list)
    resolved: list = field(default_factory=list)
    ambiguous_resolved: int = 0
    merged: list = field(default_factory=list)
    pre: Counts = field(default_factory=Counts)
    post: Counts = field(default_factory=Counts)
    losses: list = field(default_factory=list)
    findings: list = field(default_factory=list)

    @property
    def emitted(self):
        return self.outcome in (ALIGNED, MOVED)

    def summary(self):
        kinds = {}
        for m in self.matches:
            kinds[m.kind] = kinds.get(m.kind, 0) + 1
        return {
            "doc_id": self.doc_id,
            "treebank": self.treebank,
            "outcome": self.outcome,
            "target": self.target,
            "split": self.split,
            "splits": list(self.splits),
            "match_kinds": dict(sorted(kinds.items())),
            "resolved": self.resolved,
            "ambiguous_resolved": self.ambiguous_resolved,
            "pre": self.pre.as_dict(),
            "post": self.post.as_dict(),
            "losses": [l.to_dict() for l in self.losses],
            "findings": [f.to_dict() for f in self.findings],
        }


def _align_against(doc, index, settings):
    matches = match_sentences(doc, index, settings)
    res = disambiguate(doc, matches, index, settings)
    findings = list(res.findings)
    for kind in (LEMMA_INJECTION,):
        for m in matches:
            if m.kind == kind and res.resolved[m.line] is not None:
                findings.append(Finding(kind, f"line {m.line} matched {res.resolved[m.line]} with one "
                                              f"substituted token", (m.line, res.resolved[m.line]), doc.doc_id))
    for a, b in monotonicity_violations(res.resolved, index):
        findings.append(Finding("non-monotonic", f"lines {a} and {b} resolve out of order", (a, b), doc.doc_id))
    resolved_amb = sum(1 for line in res.ambiguous if res.resolved[line] is not None)
    return matches, res, findings, resolved_amb


def align_document(doc, index, others=None, settings=DEFAULT_SETTINGS):
    """Align one CorefDocument against its declared treebank index."""
    others = others or {}
    result = DocumentAlignment(doc.doc_id, index.name, UNMATCHED, pre=count_document(doc))
    active = index
    if exact_ratio(doc, index, settings, normalized=True) <= settings.home_match_ratio and others:
        fb = cross_treebank_fallback(doc, others, declared=index, settings=settings)
        if fb.status == MOVED:
            active = others[fb.target]
            result.target = fb.target
        if fb.finding:
            result.findings.append(fb.finding)
    try:
        matches, res, findings, amb = _align_against(doc, active, settings)
    except UnresolvableDocumentError as e:
        result.findings.append(Finding("unresolvable", str(e), (), doc.doc_id))
        result.losses.append(Loss("document", "unresolvable"))
        return result
    result.matches = matches
    result.resolved = res.resolved
    result.ambiguous_resolved = amb
    result.findings.extend(findings)
    if not any(s is not None for s in res.resolved):
        result.outcome = UNMATCHED
        result.target = None
        result.losses.append(Loss("document", "no sentence aligned"))
        return result
    check = check_split_overlap(doc, res.resolved, active)
    result.splits = check.splits
    projected, ud_sents, losses = project_document(doc, res.resolved, active)
    result.losses.extend(losses)
    result.merged = emit_sentences(projected, ud_sents, doc.doc_id)
    if check.status == DISCARDED:
        result.outcome = DISCARDED
        result.findings.append(Finding("split-overlap", f"sentences in {', '.join(check.splits)}",
                                       check.splits, doc.doc_id))
        return result
    result.outcome = MOVED if active is not index else ALIGNED
    result.split = check.split
    result.post = count_document(decode_entities(result.merged, doc.doc_id))
    return result
