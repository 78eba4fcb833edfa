"""Alignment report: information-loss table, per-document outcomes, summaries."""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .align import ALIGNED, DISCARDED, MOVED, SPLITS, UNMATCHED
from .stats import CATEGORY_LABELS, LOSS_CATEGORIES, Counts, format_loss


@dataclass
class TreebankTally:
    pre: Counts = field(default_factory=Counts)
    post: Counts = field(default_factory=Counts)
    documents: int = 0
    pipe_spans: int = 0
    pipe_documents: int = 0
    ambiguous_sentences: int = 0
    ambiguous_documents: int = 0

    @property
    def loss(self):
        return self.pre - self.post


@dataclass
class AlignmentReport:
    treebanks: dict = field(default_factory=dict)
    documents: list = field(default_factory=list)
    findings: list = field(default_factory=list)

    def loss_rows(self):
        """Rows ``[label, cell per treebank..., total]`` in the information-loss table shape."""
        rows = []
        for cat in LOSS_CATEGORIES:
            row = [CATEGORY_LABELS[cat]]
            total = 0
            for tally in self.treebanks.values():
                b, a = getattr(tally.pre, cat), getattr(tally.post, cat)
                row.append(format_loss(b, a))
                total += b - a
            row.append(str(total))
            rows.append(row)
        return rows

    def document_rows(self):
        rows = []
        for d in self.documents:
            marks = ["x" if s in d["splits"] else "" for s in SPLITS]
            rows.append([d["doc_id"], d["treebank"]] + marks + [d["outcome"], d.get("target") or ""])
        return rows

    def to_dict(self):
        return {
            "treebanks": {
                name: {
                    "pre": t.pre.as_dict(),
                    "post": t.post.as_dict(),
                    "loss": t.loss.as_dict(),
                    "documents": t.documents,
                    "corrections": {
                        "pipe_spans": t.pipe_spans,
                        "pipe_documents": t.pipe_documents,
                        "ambiguous_sentences": t.ambiguous_sentences,
                        "ambiguous_documents": t.ambiguous_documents,
                    },
                }
                for name, t in self.treebanks.items()
            },
            "loss_table": self.loss_rows(),
            "documents": self.documents,
            "findings": self.findings,
        }


def build_report(alignments, conversions=None):
    """Aggregate per-document alignments (and optional conversion summaries per treebank).

    Moved documents are tallied under their declared treebank.
    """
    report = AlignmentReport()
    conversions = conversions or {}
    for name in sorted({a.treebank for a in alignments} | set(conversions)):
        report.treebanks[name] = TreebankTally()
    for name, conv in conversions.items():
        t = report.treebanks[name]
        t.pipe_spans = conv.get("pipe_spans", 0)
        t.pipe_documents = conv.get("pipe_documents", 0)
    for a in sorted(alignments, key=lambda a: (a.treebank, a.doc_id)):
        t = report.treebanks[a.treebank]
        t.documents += 1
        t.pre = t.pre + a.pre
        if a.emitted:
            t.post = t.post + a.post
        if a.ambiguous_resolved:
            t.ambiguous_sentences += a.ambiguous_resolved
            t.ambiguous_documents += 1
        report.documents.append(a.summary())
        report.findings.extend(f.to_dict() for f in a.findings)
    return report


def outcome_counts(report):
    counts = {k: 0 for k in (ALIGNED, MOVED, DISCARDED, UNMATCHED)}
    for d in report.documents:
        counts[d["outcome"]] = counts.get(d["outcome"], 0) + 1
    return counts


def format_summary(report):
    names = list(report.treebanks)
    header = ["Category"] + names + ["Total"]
    rows = [header] + report.loss_rows()
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["Information loss during alignment", ""]
    for r in rows:
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
    lines.append("")
    for name, t in report.treebanks.items():
        lines.append(f"{name}: {t.documents} documents, {t.pipe_spans} pipe spans corrected in "
                     f"{t.pipe_documents} documents, {t.ambiguous_sentences} ambiguous sentences "
                     f"resolved in {t.ambiguous_documents} documents")
    lines.append("outcomes: " + ", ".join(f"{k}={v}" for k, v in outcome_counts(report).items()))
    overlap = [d for d in report.documents if d["outcome"] == DISCARDED]
    if overlap:
        lines.append("")
        lines.append("Documents spanning several splits:")
        for d in overlap:
            lines.append(f"  {d['doc_id']} ({d['treebank']}): {', '.join(d['splits'])}")
    return "\n".join(lines) + "\n"


def _write_tsv(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, delimiter="\t", lineterminator="\n")
        w.writerows(rows)


def emit_report(report, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _write_tsv(directory / "loss.tsv", [["Category"] + list(report.treebanks) + ["Total"]] + report.loss_rows())
    _write_tsv(directory / "documents.tsv",
               [["Document", "Treebank", "Train", "Test", "Dev", "Outcome", "Target"]] + report.document_rows())
    (directory / "summary.txt").write_text(format_summary(report), encoding="utf-8")
    (directory / "report.json").write_text(
        json.dumps(report.to_dict(), ensure_ascii=False, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return report
