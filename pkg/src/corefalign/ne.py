"""Named-entity transfer from an entity-enriched treebank onto current UD.

Entity labels live in one MISC item per token (``name=PER`` by default).
Two label schemes are read and written: ``plain`` (contiguous runs of the
same label form a span) and ``bio`` (``B-``/``I-`` prefixes).
"""
from dataclasses import dataclass

from .conllu import ADDED_KEY_ORDER, ID, MISC, MiscField
from .errors import EntityConflictError, EntityExtractionError

OUTSIDE = "O"


@dataclass(frozen=True)
class NamedEntitySpan:
    sent_id: str
    start_token: int  # 1-based CoNLL-U word IDs, inclusive
    end_token: int
    label: str


def _labels(sentence, key):
    out = []
    for i, row in enumerate(sentence.words(), start=1):
        misc = MiscField.parse(row[MISC])
        value = misc.get(key)
        if value is not None and value == "":
            raise EntityExtractionError(f"sentence {sentence.sent_id} token {i}: empty {key}= item")
        out.append(value)
    return out


def extract_entities(sentences, key="name", scheme="plain", label_set=None):
    spans = []
    for sent in sentences:
        runs = []
        cur = None  # [start, end, label]
        for i, value in enumerate(_labels(sent, key), start=1):
            if value is None or value == OUTSIDE:
                cur = None
                continue
            if scheme == "bio":
                prefix, sep, label = value.partition("-")
                if not sep or prefix not in ("B", "I"):
                    raise EntityExtractionError(
                        f"sentence {sent.sent_id} token {i}: {key}={value} is not B-/I- encoded")
                begins = prefix == "B" or cur is None or cur[2] != label
            elif scheme == "plain":
                label = value
                begins = cur is None or cur[2] != label
            else:
                raise ValueError(f"unknown entity scheme {scheme!r}")
            if label_set is not None and label not in label_set:
                raise EntityExtractionError(f"sentence {sent.sent_id} token {i}: unknown label {label!r}")
            if begins:
                cur = [i, i, label]
                runs.append(cur)
            else:
                cur[1] = i
        spans.extend(NamedEntitySpan(sent.sent_id, a, b, label) for a, b, label in runs)
    return spans


def sentence_lengths(sentences):
    return {s.sent_id: len(s.words()) for s in sentences}


def _token_labels(spans, n, scheme):
    labels = [OUTSIDE] * n
    for sp in spans:
        for t in range(sp.start_token, sp.end_token + 1):
            if scheme == "bio":
                labels[t - 1] = ("B-" if t == sp.start_token else "I-") + sp.label
            else:
                labels[t - 1] = sp.label
    return labels


def _put(misc, key, value):
    item = f"{key}={value}"
    misc.remove(key)
    for i, it in enumerate(misc.items):
        if it.partition("=")[0] in ADDED_KEY_ORDER:
            misc.items.insert(i, item)
            return
    misc.items.append(item)


def place_entities(ud_sentences, spans, lengths=None, key="name", scheme="plain",
                   outside=OUTSIDE, on_conflict="raise"):
    """Write entity spans onto UD sentences by sent_id and token index.

    Only MISC changes; the entity item goes before any coreference items.
    ``lengths`` (sent_id -> word count in the entity source) enables the
    tokenization check; sentences whose count differs are conflicts.  With
    ``on_conflict="raise"`` a conflict raises :class:`EntityConflictError`,
    with ``"skip"`` the sentence is left untouched.  Returns
    ``(sentences, conflicting sent_ids)``.
    """
    by_sent = {}
    for sp in spans:
        by_sent.setdefault(sp.sent_id, []).append(sp)
    covered = set(lengths) if lengths is not None else set(by_sent)
    conflicts = []
    out = []
    for sent in ud_sentences:
        sid = sent.sent_id
        if sid not in covered:
            out.append(sent)
            continue
        n = len(sent.words())
        own = by_sent.get(sid, [])
        bad = (lengths is not None and lengths[sid] != n) or any(sp.end_token > n for sp in own)
        if bad:
            conflicts.append(sid)
            out.append(sent)
            continue
        labels = _token_labels(own, n, scheme)
        new = sent.copy()
        words = iter(labels)
        for row in new.rows:
            if not row[ID].isdigit():
                continue
            label = next(words)
            misc = MiscField.parse(row[MISC])
            if label == OUTSIDE and outside is None:
                misc.remove(key)
            else:
                _put(misc, key, outside if label == OUTSIDE else label)
            row[MISC] = str(misc)
        out.append(new)
    if conflicts and on_conflict == "raise":
        raise EntityConflictError(conflicts)
    return out, conflicts
