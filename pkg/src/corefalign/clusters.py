"""Identity clusters and cross-cluster links from BRAT relation edges."""
from dataclasses import dataclass, field

from .brat import BRIDGING, IDENTITY_KINDS, SPLIT_ANTECEDENT, validate_relations
from .errors import Finding, StructuralError


class UnionFind:
    def __init__(self, items=()):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def groups(self):
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return list(out.values())


@dataclass
class ClusterSet:
    """Partition of markables into numbered clusters plus link groups.

    ``bridges`` holds ``(antecedent cluster, anaphor cluster)`` pairs, the
    direction written ``a<b`` in CorefUD ``Bridge=``.  ``split_antecedents``
    holds ``(antecedent clusters, pronoun cluster)`` groups.
    """

    clusters: list = field(default_factory=list)
    bridges: list = field(default_factory=list)
    split_antecedents: list = field(default_factory=list)
    identity_links: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def membership(self):
        return {mid: k for k, members in enumerate(self.clusters, start=1) for mid in members}


def _position_key(doc):
    order = {}
    for i, m in enumerate(doc.markables):
        order[m.id] = (m.start, -m.end, i)
    return order


def build_clusters(doc):
    findings = validate_relations(doc)
    for f in findings:
        if f.kind in ("self-reference", "dangling-reference"):
            raise StructuralError(f)

    pos = _position_key(doc)
    uf = UnionFind(m.id for m in doc.markables)
    links = []
    for edge in doc.relations:
        if edge.kind in IDENTITY_KINDS:
            for t in edge.targets:
                uf.union(edge.source, t)
                links.append((edge.source, t, edge.kind))

    groups = [sorted(g, key=pos.__getitem__) for g in uf.groups()]
    groups.sort(key=lambda g: pos[g[0]])
    cs = ClusterSet(clusters=groups, identity_links=links)
    member = cs.membership()

    bridges = set()
    split = {}
    for edge in doc.relations:
        if edge.kind == BRIDGING:
            anaphor = member[edge.source]
            for t in edge.targets:
                ante = member[t]
                if ante == anaphor:
                    cs.notes.append(Finding("bridge-within-cluster",
                                            f"bridging {edge.id} links mentions of cluster {ante}",
                                            (edge.id,), doc.doc_id))
                    continue
                bridges.add((ante, anaphor))
        elif edge.kind == SPLIT_ANTECEDENT:
            pronoun = member[edge.source]
            for t in edge.targets:
                ante = member[t]
                if ante == pronoun:
                    cs.notes.append(Finding("splitante-within-cluster",
                                            f"split antecedent {edge.id} points into its own cluster",
                                            (edge.id,), doc.doc_id))
                    continue
                split.setdefault(pronoun, set()).add(ante)

    cs.bridges = sorted(bridges)
    cs.split_antecedents = sorted((tuple(sorted(a)), p) for p, a in split.items() if a)
    for antes, p in cs.split_antecedents:
        if len(antes) < 2:
            cs.notes.append(Finding("splitante-single",
                                    f"split-antecedent group of cluster {p} has one antecedent",
                                    (p,), doc.doc_id))
    seen = {}
    for a, b in cs.bridges:
        seen.setdefault(b, set()).add(a)
    in_groups = {}
    for b, antes in seen.items():
        for k in antes | {b}:
            in_groups.setdefault(k, set()).add(b)
    for k, gs in sorted(in_groups.items()):
        if len(gs) > 1:
            cs.notes.append(Finding("multi-bridge-group",
                                    f"cluster {k} participates in {len(gs)} bridging groups",
                                    (k,), doc.doc_id))
    return cs


def bridge_groups(bridges):
    """Bridging groups keyed by anaphor cluster."""
    groups = {}
    for a, b in bridges:
        groups.setdefault(b, set()).add(a)
    return groups


def count_link_groups(cs):
    """Return ``(bridging groups, split-antecedent groups)``; a group counts once
    regardless of how many relations it contains."""
    return len(bridge_groups(cs.bridges)), len({p for _, p in cs.split_antecedents})
