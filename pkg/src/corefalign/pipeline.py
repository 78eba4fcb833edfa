"""Pipeline stages: convert -> align -> merge-ne -> stats.

Each stage reads only files written by earlier stages (or the configured
inputs), so running the stages one by one produces the same artifacts as
:func:`run`.  Output layout under ``config.output``::

    records/<treebank>.jsonl            word-indexed records
    records/<treebank>.conversion.json  pipe corrections, findings, dropped mentions
    merged/<treebank>/<split>.conllu    aligned documents with Entity/Bridge/SplitAnte MISC
    quarantine/<treebank>/<doc>.*       discarded / unmatched documents and their reports
    report/                             loss.tsv, documents.tsv, summary.txt, report.json
    stats/<treebank>.tsv                category counts before and after alignment
"""
import json
import logging
import multiprocessing
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import records
from .align import MOVED, SPLITS, align_document, build_index
from .brat import iter_ann_dir, parse_ann
from .conllu import read_conllu, validate_level6, write_conllu
from .convert import convert_raw
from .errors import CorefAlignError
from .ne import extract_entities, place_entities, sentence_lengths
from .report import build_report, emit_report
from .stats import count, count_conllu, write_stats_table

log = logging.getLogger(__name__)


class StageError(CorefAlignError):
    def __init__(self, stage, error):
        self.stage = stage
        self.error = error
        super().__init__(f"stage {stage} failed: {error}")


@dataclass
class StageResult:
    name: str
    findings: int = 0
    problems: list = field(default_factory=list)


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (workers * 4))))


# --- convert ------------------------------------------------------------------

_CONVERT_OPTS = {}


def _convert_one(paths):
    ann, txt = paths
    raw = parse_ann(Path(ann).read_text(encoding="utf-8"), Path(txt).read_text(encoding="utf-8"),
                    Path(ann).stem, aliases=_CONVERT_OPTS.get("aliases"))
    return convert_raw(raw, _CONVERT_OPTS.get("pipe", True))


def convert_directory(ann_dir, records_path, aliases=None, pipe_correction=True, workers=1):
    """Convert every .ann/.txt pair of a directory into one record file.

    Returns the conversion summary that is also written next to the records.
    """
    _CONVERT_OPTS.update(aliases=aliases, pipe=pipe_correction)
    pairs = [(str(a), str(t)) for a, t in iter_ann_dir(ann_dir)] if ann_dir else []
    if not pairs:
        log.warning("no annotation documents found in %s", ann_dir)
    results = _map(_convert_one, pairs, workers)
    records_path = Path(records_path)
    records_path.parent.mkdir(parents=True, exist_ok=True)
    with open(records_path, "w", encoding="utf-8") as fh:
        for r in results:
            records.append_record(r.record, fh)
    summary = {
        "documents": len(results),
        "pipe_spans": sum(r.pipe_corrections for r in results),
        "pipe_documents": sum(1 for r in results if r.pipe_corrections),
        "findings": [f.to_dict() for r in results for f in r.findings + r.cluster_notes],
        "dropped_mentions": [f.to_dict() for r in results for f in r.losses],
    }
    _dump_json(summary, records_path.with_suffix(".conversion.json"))
    return summary


def stage_convert(cfg):
    result = StageResult("convert")
    for tb in cfg.treebanks:
        summary = convert_directory(tb.ann_dir, cfg.output / "records" / f"{tb.name}.jsonl",
                                    cfg.relation_aliases, cfg.pipe_correction, cfg.workers)
        result.findings += len(summary["findings"]) + len(summary["dropped_mentions"])
    return result


# --- align --------------------------------------------------------------------

_ALIGN_STATE = {}


def _align_one(item):
    name, doc = item
    indices = _ALIGN_STATE["indices"]
    others = {k: v for k, v in indices.items() if k != name}
    return align_document(doc, indices[name], others, _ALIGN_STATE["settings"])


def _load_conversion(cfg, name):
    path = cfg.output / "records" / f"{name}.conversion.json"
    return json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}


def stage_align(cfg):
    result = StageResult("align")
    indices = {tb.name: build_index(tb.ud, tb.name, cfg.align) for tb in cfg.treebanks}
    items = []
    for tb in cfg.treebanks:
        path = cfg.output / "records" / f"{tb.name}.jsonl"
        docs = records.read_records(path) if path.exists() else []
        items.extend((tb.name, d) for d in sorted(docs, key=lambda d: d.doc_id))
    _ALIGN_STATE.update(indices=indices, settings=cfg.align)
    alignments = _map(_align_one, items, cfg.workers)

    merged_dir = cfg.output / "merged"
    quarantine = cfg.output / "quarantine"
    for d in (merged_dir, quarantine):
        if d.exists():
            shutil.rmtree(d)
    outputs = {tb.name: {s: [] for s in list(dict.fromkeys(SPLITS + tuple(tb.ud)))} for tb in cfg.treebanks}
    doc_by_id = {(name, d.doc_id): d for name, d in items}
    for a in sorted(alignments, key=lambda a: a.doc_id):
        if a.emitted:
            home = a.target if a.outcome == MOVED else a.treebank
            outputs[home][a.split].append((a.doc_id, a.merged))
        else:
            qdir = quarantine / a.treebank
            qdir.mkdir(parents=True, exist_ok=True)
            _dump_json(a.summary(), qdir / f"{a.doc_id}.report.json")
            (qdir / f"{a.doc_id}.jsonl").write_text(records.dumps(doc_by_id[a.treebank, a.doc_id]) + "\n",
                                                    encoding="utf-8")
            if a.merged:
                write_conllu(a.merged, qdir / f"{a.doc_id}.conllu")
            result.problems.append(f"{a.doc_id}: {a.outcome}")
    for name, splits in outputs.items():
        out = merged_dir / name
        out.mkdir(parents=True, exist_ok=True)
        for split, docs in splits.items():
            sentences = [s for _, sents in sorted(docs, key=lambda x: x[0]) for s in sents]
            write_conllu(sentences, out / f"{split}.conllu")

    conversions = {tb.name: _load_conversion(cfg, tb.name) for tb in cfg.treebanks}
    report = build_report(alignments, conversions)
    emit_report(report, cfg.output / "report")
    result.findings = len(report.findings)
    return result


# --- named entities -------------------------------------------------------------


def merge_named_entities(merged_paths, norne_paths, ne, on_conflict="skip"):
    """Place entity spans from ``norne_paths`` onto each merged file in place.

    Returns the list of conflicting sent_ids.
    """
    source = [s for p in norne_paths for s in read_conllu(p)]
    spans = extract_entities(source, key=ne.key, scheme=ne.scheme)
    lengths = sentence_lengths(source)
    conflicts = []
    for path in merged_paths:
        sentences = read_conllu(path)
        placed, bad = place_entities(sentences, spans, lengths, key=ne.key, scheme=ne.scheme,
                                     outside=ne.outside, on_conflict=on_conflict)
        conflicts.extend(bad)
        write_conllu(placed, path)
    return conflicts


def stage_merge_ne(cfg):
    result = StageResult("merge-ne")
    lines = ["sent_id\ttreebank"]
    for tb in cfg.treebanks:
        if not tb.norne:
            continue
        merged = sorted((cfg.output / "merged" / tb.name).glob("*.conllu"))
        conflicts = merge_named_entities(merged, [tb.norne[k] for k in sorted(tb.norne)], cfg.ne,
                                         on_conflict="skip")
        lines += [f"{sid}\t{tb.name}" for sid in conflicts]
        result.problems += [f"entity conflict {sid}" for sid in conflicts]
    report_dir = cfg.output / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    (report_dir / "ne_conflicts.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    result.findings = len(lines) - 1
    return result


# --- stats & validation --------------------------------------------------------


def stats_for_files(paths, ne):
    """Counts over record (.jsonl) or CoNLL-U files."""
    from .stats import Counts

    total = Counts()
    for p in paths:
        p = Path(p)
        if p.suffix == ".jsonl":
            total = total + count(records.read_records(p))
        else:
            total = total + count_conllu(read_conllu(p), ne.key, ne.scheme)
    return total


def stage_stats(cfg):
    result = StageResult("stats")
    out = cfg.output / "stats"
    out.mkdir(parents=True, exist_ok=True)
    for tb in cfg.treebanks:
        rec = cfg.output / "records" / f"{tb.name}.jsonl"
        merged = sorted((cfg.output / "merged" / tb.name).glob("*.conllu"))
        columns = {"records": stats_for_files([rec] if rec.exists() else [], cfg.ne)}
        for p in merged:
            columns[p.stem] = stats_for_files([p], cfg.ne)
        columns["aligned"] = stats_for_files(merged, cfg.ne)
        write_stats_table(out / f"{tb.name}.tsv", columns)
    return result


def validate_files(paths):
    findings = []
    for p in paths:
        for f in validate_level6(read_conllu(p)):
            findings.append((str(p), f))
    return findings


def stage_validate(cfg):
    result = StageResult("validate")
    paths = sorted((cfg.output / "merged").glob("*/*.conllu"))
    found = validate_files(paths)
    result.findings = len(found)
    result.problems = [f"{p}: {f}" for p, f in found]
    return result


STAGES = {
    "convert": stage_convert,
    "align": stage_align,
    "merge-ne": stage_merge_ne,
    "stats": stage_stats,
    "validate": stage_validate,
}
RUN_ORDER = ("convert", "align", "merge-ne", "stats")


def run_stage(name, cfg):
    try:
        return STAGES[name](cfg)
    except CorefAlignError as e:
        raise StageError(name, e) from e
    except OSError as e:
        raise StageError(name, e) from e


def exit_status(results, strict):
    if not strict:
        return 0
    return 1 if any(r.findings or r.problems for r in results) else 0


def run(cfg, stages=RUN_ORDER):
    """Run the given stages in order; returns ``(exit status, stage results)``."""
    cfg.output.mkdir(parents=True, exist_ok=True)
    results = [run_stage(name, cfg) for name in stages]
    return exit_status(results, cfg.strict), results
