"""Character offsets to word indices, with pipe-token span correction."""
import bisect
import logging
import re
from dataclasses import dataclass, replace

from .errors import CrossLineError, Finding, SpanError

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"\S+")
PIPE = "|"


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int


@dataclass(frozen=True, order=True)
class WordSpan:
    sentence_index: int
    start_token: int
    end_token: int
    fragment_index: int = 0


class TokenTable:
    """Tokens per document line with a character-offset lookup."""

    def __init__(self, lines, tokens, notes=()):
        self.lines = lines
        self.tokens = tokens
        self.notes = list(notes)
        self._starts = [ln.start for ln in lines]

    def __len__(self):
        return len(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def line_of(self, offset):
        i = bisect.bisect_right(self._starts, offset) - 1
        return i if i >= 0 else None

    def words(self):
        return [[t.text for t in toks] for toks in self.tokens]


def tokenize_line(text, offset=0):
    return [Token(m.group(), m.start() + offset, m.end() + offset) for m in _TOKEN_RE.finditer(text)]


def tokenize_lines(doc):
    """Split each pre-tokenized line on whitespace, keeping character offsets."""
    tokens, notes = [], []
    for ln in doc.lines:
        toks = tokenize_line(ln.text, ln.start)
        if " ".join(t.text for t in toks) != ln.text:
            notes.append(Finding("reconstruction-mismatch",
                                 f"line {ln.index} is not single-space separated",
                                 (ln.index,), doc.doc_id))
        tokens.append(toks)
    return TokenTable(doc.lines, tokens, notes)


def _trim_pipe(text, s, e):
    covered = text[s:e]
    toks = covered.split()
    if len(toks) < 2 or toks[-1] != PIPE:
        return None
    head = covered.rstrip()
    head = head[: len(head) - len(PIPE)].rstrip()
    return s, s + len(head)


def correct_pipe_spans(doc):
    """Drop a trailing isolated ``|`` token from markable fragments.

    Returns the corrected document and the number of adjusted fragments.
    """
    count = 0
    new = []
    for m in doc.markables:
        frags = []
        changed = False
        for s, e in m.fragments:
            trimmed = _trim_pipe(doc.text, s, e)
            if trimmed is not None:
                frags.append(trimmed)
                changed = True
                count += 1
            else:
                frags.append((s, e))
                if PIPE in doc.text[s:e].split():
                    log.info("%s: %s keeps an inner pipe token at %d-%d", doc.doc_id, m.id, s, e)
        if changed:
            text = " ".join(doc.text[s:e] for s, e in frags)
            m = replace(m, fragments=tuple(frags), text=text)
        new.append(m)
    return replace(doc, markables=new), count


def char_to_word(markable, table, findings=None):
    """Map each fragment of ``markable`` onto the minimal covering token range.

    Partially covered tokens are included whole; each such snap appends a
    finding to ``findings`` when a list is given.
    """
    spans = []
    line_idx = None
    for fi, (s, e) in enumerate(markable.fragments):
        li = table.line_of(s)
        if li is None or e > table.lines[li].end:
            raise CrossLineError(f"{markable.id} fragment {s}-{e} crosses a line boundary")
        if line_idx is not None and li != line_idx:
            raise CrossLineError(f"{markable.id} has fragments on lines {line_idx} and {li}")
        line_idx = li
        toks = table[li]
        hit = [i for i, t in enumerate(toks) if t.end > s and t.start < e]
        if not hit:
            raise SpanError(f"{markable.id} fragment {s}-{e} covers no token")
        a, b = hit[0], hit[-1]
        if toks[a].start < s or toks[b].end > e:
            if findings is not None:
                findings.append(Finding("snap",
                                        f"{markable.id} fragment {s}-{e} snapped to "
                                        f"{toks[a].start}-{toks[b].end}", (markable.id,)))
        if spans and spans[-1].end_token >= a - 1:
            # fragments meeting on adjacent or shared tokens form one range
            prev = spans.pop()
            spans.append(WordSpan(li, prev.start_token, max(b, prev.end_token), prev.fragment_index))
        else:
            spans.append(WordSpan(li, a, b, len(spans)))
    return spans
