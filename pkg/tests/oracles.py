"""Independent reference implementations used by several test modules."""
from itertools import product


def brute_labeling(d, ms, idx):
    """Oracle: exhaustive search over candidate choices (or 'lost') for ambiguous lines.

    Minimizes (number of lost lines, total score), scores computed from the
    nearest unique anchors on each side.
    """
    singles = {}
    for m in ms:
        if len(m.candidates) == 1:
            singles.setdefault(m.candidates[0], []).append(m.line)
    anchors = {ls[0]: sid for sid, ls in singles.items() if len(ls) == 1}
    used = set(anchors.values())
    amb = [(m.line, [c for c in m.candidates if c not in used]) for m in ms
           if m.line not in anchors and m.candidates]
    amb = [(l, c) for l, c in amb if c]
    order = sorted(anchors)

    def score(line, sid):
        before = [a for a in order if a < line][-1:]
        after = [a for a in order if a > line][:1]
        total = 0
        for a in before + after:
            if idx.id_to_split[anchors[a]] != idx.id_to_split[sid]:
                total += 2 * len(idx) + 1
            else:
                total += abs((idx.id_to_position[sid] - idx.id_to_position[anchors[a]]) - (line - a))
        return total

    best = []
    best_key = None
    for combo in product(*[c + [None] for _, c in amb]):
        picked = [x for x in combo if x]
        if len(picked) != len(set(picked)):
            continue
        key = (combo.count(None), sum(score(l, x) for (l, _), x in zip(amb, combo) if x))
        if best_key is None or key < best_key:
            best_key, best = key, [combo]
        elif key == best_key:
            best.append(combo)
    return amb, best_key, best


def random_case(rng, true_present=True):
    n_lines = rng.randint(2, 10)
    gap = [rng.randint(0, 2) for _ in range(n_lines)]
    ud = [f"fyll {k}" for k in range(rng.randint(0, 5))]
    pos = []
    texts = []
    n_amb_words = rng.randint(1, 3)
    for i in range(n_lines):
        ud.extend(f"hull {i} {k}" for k in range(gap[i]))
        ambiguous = i > 0 and rng.random() < 0.5
        t = f"ord{rng.randrange(n_amb_words)}" if ambiguous else f"unik {i}"
        texts.append(t)
        pos.append(len(ud))
        ud.append(t if true_present or not ambiguous else f"borte {i}")
    ud.extend(f"hale {k}" for k in range(rng.randint(0, 5)))
    # decoys: each ambiguous text gets extra copies, capped at 4 candidates
    for w in set(t for t in texts if t.startswith("ord")):
        for _ in range(rng.randint(0, 3)):
            if ud.count(w) < 4:
                ud.insert(rng.randrange(len(ud) + 1), w)
    return texts, ud


def block_case(rng, max_lines=10, max_candidates=4):
    """A document laid out the way treebanks store them.

    The document is one contiguous block of a split, possibly with a few
    sentences the annotators skipped.  Repeated sentences (the ambiguous
    lines) also occur in other documents, before or after the block or in
    another split, with at most ``max_candidates`` copies in all.
    Returns ``(lines, {split: sentences})``.
    """
    n_lines = rng.randint(2, max_lines)
    words = [f"ord{k}" for k in range(rng.randint(1, 3))]
    texts = []
    for i in range(n_lines):
        w = rng.choice(words)
        if i > 0 and rng.random() < 0.5 and texts.count(w) < max_candidates:
            texts.append(w)
        else:
            texts.append(f"unik {i}")
    block = []
    for i, t in enumerate(texts):
        if i:
            block.extend(f"hull {i} {k}" for k in range(rng.choice((0, 0, 0, 1, 2))))
        block.append(t)
    # neighbouring documents are kept at least this far from the block
    spacer = 2 * (len(block) - n_lines) + n_lines + 1
    before = [f"fyll {k}" for k in range(rng.randint(0, 4))]
    after = [f"hale {k}" for k in range(rng.randint(0, 4))]
    other = [f"annen {k}" for k in range(rng.randint(0, 3))]
    for w in sorted(set(t for t in texts if t.startswith("ord"))):
        for _ in range(rng.randint(0, max_candidates - texts.count(w))):
            side = rng.choice((before, after, other))
            side.insert(rng.randrange(len(side) + 1), w)
    before += [f"mellom a {k}" for k in range(spacer)]
    after[:0] = [f"mellom b {k}" for k in range(spacer)]
    return texts, {"train": before + block + after, "dev": other}
