import json
import shutil
import subprocess
import sys

import pytest
import yaml

from corefalign.align import DISCARDED, DocumentAlignment
from corefalign.cli import main
from corefalign.conllu import read_conllu, write_conllu
from corefalign.config import load_config
from corefalign.pipeline import run
from corefalign.report import build_report, format_summary
from corefalign.stats import Counts
from synth import write_corpus


def tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def corpus(tmp_path):
    cfg, data = write_corpus(tmp_path, ["bm", "nn"], n_docs=5)
    return tmp_path, cfg, data


def test_report_arithmetic_one_of_twenty():
    a = DocumentAlignment("d", "bm", "aligned", pre=Counts(sentences=20, tokens=200),
                          post=Counts(sentences=19, tokens=190))
    rows = build_report([a]).loss_rows()
    assert rows[0] == ["Sentences", "1 (5.0%)", "1"]
    assert rows[1] == ["Tokens", "10 (5.0%)", "10"]
    assert rows[4] == ["SplitAnte Clusters", "0 (\u2014)", "0"]


def test_report_tallies_attribution():
    pre = Counts(sentences=4, mentions=3)
    docs = [
        DocumentAlignment("a", "bm", "aligned", pre=pre, post=pre),
        DocumentAlignment("b", "bm", "moved:other-treebank", target="nn", pre=pre, post=pre),
        DocumentAlignment("c", "bm", DISCARDED, splits=("test", "dev"), pre=pre),
        DocumentAlignment("d", "nn", "unmatched", pre=pre),
    ]
    r = build_report(docs)
    # a moved document counts for the treebank it was declared in and loses nothing
    assert r.treebanks["bm"].loss.sentences == 4
    assert r.treebanks["nn"].loss.sentences == 4
    text = format_summary(r)
    assert "c (bm): test, dev" in text
    assert [row[2:5] for row in r.document_rows()] == [["", "", ""], ["", "", ""], ["", "x", "x"], ["", "", ""]]


def test_run_outputs(corpus):
    root, cfg, data = corpus
    status, results = run(load_config(cfg))
    assert status == 0
    out = root / "out"
    for name in ("loss.tsv", "documents.tsv", "summary.txt", "report.json", "ne_conflicts.tsv"):
        assert (out / "report" / name).exists()
    report = json.loads((out / "report" / "report.json").read_text())
    assert [r[1] for r in report["loss_table"]] == ["0 (0.0%)"] * 6
    loss = (out / "report" / "loss.tsv").read_text().splitlines()
    assert loss[0] == "Category\tbm\tnn\tTotal"
    merged = sorted(p.relative_to(out).as_posix() for p in (out / "merged").rglob("*.conllu"))
    assert merged == [f"merged/{tb}/{s}.conllu" for tb in ("bm", "nn") for s in ("dev", "test", "train")]
    for tb, (_, docs) in data.items():
        ids = {s.sent_id for p in (out / "merged" / tb).glob("*.conllu") for s in read_conllu(p)}
        assert ids == {sid for d in docs for sid in d.sent_ids}
    stats = (out / "stats" / "bm.tsv").read_text().splitlines()
    assert stats[0].split("\t") == ["Category", "records", "dev", "test", "train", "aligned"]


def test_staged_equals_monolithic_and_is_idempotent(corpus, tmp_path):
    root, cfg, _ = corpus
    assert main(["run", "--config", str(cfg)]) == 0
    mono = tree(root / "out")
    assert main(["run", "--config", str(cfg)]) == 0
    assert tree(root / "out") == mono
    shutil.rmtree(root / "out")
    for stage in ("convert", "align", "merge-ne", "stats"):
        assert main([stage, "--config", str(cfg)]) == 0
    assert tree(root / "out") == mono
    assert main(["run", "--config", str(cfg), "--workers", "2", "--output", str(tmp_path / "par")]) == 0
    assert tree(tmp_path / "par") == mono


def test_validate_and_stats_commands(corpus, capsys):
    root, cfg, _ = corpus
    assert main(["run", "--config", str(cfg)]) == 0
    merged = sorted((root / "out" / "merged").rglob("*.conllu"))
    assert main(["validate"] + [str(p) for p in merged]) == 0
    assert main(["validate", "--config", str(cfg)]) == 0
    sents = read_conllu(merged[0])
    row = next(r for s in sents for r in s.words() if "Entity=" in r[9])
    row[9] = row[9].replace("Entity=", "Entity=((")
    write_conllu(sents, root / "broken.conllu")
    assert main(["validate", str(root / "broken.conllu")]) == 1
    capsys.readouterr()
    assert main(["stats", str(root / "out" / "records" / "bm.jsonl")]) == 0
    lines = dict(l.split("\t") for l in capsys.readouterr().out.splitlines())
    assert int(lines["mentions"]) > 0
    bm = sorted((root / "out" / "merged" / "bm").glob("*.conllu"))
    assert main(["stats", "--diff", str(root / "out" / "records" / "bm.jsonl"), str(bm[0])]) == 0
    assert capsys.readouterr().out.splitlines()[0].startswith("Sentences\t")


def test_strict_mode_and_quarantine(tmp_path):
    cfg, data = write_corpus(tmp_path, ["bm"], n_docs=3)
    splits, docs = data["bm"]
    # move the second half of one document into another split
    doc = docs[0]
    moved = [s for s in read_conllu(tmp_path / "ud" / "bm-train.conllu") if s.sent_id in doc.sent_ids[2:]]
    keep = [s for s in read_conllu(tmp_path / "ud" / "bm-train.conllu") if s.sent_id not in doc.sent_ids[2:]]
    write_conllu(keep, tmp_path / "ud" / "bm-train.conllu")
    write_conllu(read_conllu(tmp_path / "ud" / "bm-dev.conllu") + moved, tmp_path / "ud" / "bm-dev.conllu")
    assert main(["run", "--config", str(cfg)]) == 0
    assert main(["run", "--config", str(cfg), "--strict"]) == 1
    q = tmp_path / "out" / "quarantine" / "bm"
    assert sorted(p.name for p in q.iterdir()) == [f"{doc.doc_id}.{x}" for x in ("conllu", "jsonl", "report.json")]
    rows = (tmp_path / "out" / "report" / "documents.tsv").read_text().splitlines()
    assert f"{doc.doc_id}\tbm\tx\t\tx\t{DISCARDED}\t" in rows


def test_named_entity_stage(tmp_path):
    cfg, data = write_corpus(tmp_path, ["bm"], n_docs=3)
    norne = {}
    for split in ("train", "test", "dev"):
        sents = read_conllu(tmp_path / "ud" / f"bm-{split}.conllu")
        for s in sents:
            for i, r in enumerate(s.words()):
                r[9] = ("SpaceAfter=No|" if "SpaceAfter=No" in r[9] else "") + \
                    ("name=B-PER" if i == 0 else "name=O")
        if split == "dev" and sents:
            sents[0].rows.pop()  # tokenization mismatch for one sentence
        p = tmp_path / "norne" / f"bm-{split}.conllu"
        p.parent.mkdir(exist_ok=True)
        write_conllu(sents, p)
        norne[split] = f"norne/bm-{split}.conllu"
    conf = yaml.safe_load(cfg.read_text())
    conf["treebanks"]["bm"]["norne"] = norne
    conf["ne"] = {"scheme": "bio"}
    cfg.write_text(yaml.safe_dump(conf))
    assert main(["run", "--config", str(cfg)]) == 0
    merged = read_conllu(tmp_path / "out" / "merged" / "bm" / "train.conllu")
    first = merged[0].words()[0][9].split("|")
    assert "name=B-PER" in first
    if any(x.startswith("Entity=") for x in first):
        assert first.index("name=B-PER") < [i for i, x in enumerate(first) if x.startswith("Entity=")][0]
    conflicts = (tmp_path / "out" / "report" / "ne_conflicts.tsv").read_text().splitlines()
    assert conflicts[0] == "sent_id\ttreebank"
    assert main(["run", "--config", str(cfg), "--strict"]) == (1 if len(conflicts) > 1 else 0)
    status = main(["stats", "--scheme", "bio", str(tmp_path / "out" / "merged" / "bm" / "train.conllu")])
    assert status == 0


def test_config_errors(tmp_path, monkeypatch):
    monkeypatch.delenv("COREFALIGN_CONFIG", raising=False)
    assert main(["run"]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2
    cfg, _ = write_corpus(tmp_path, ["bm"], n_docs=1)
    assert main(["run", "--config", str(cfg), "--set", "align.nonsense=1"]) == 2
    assert main(["run", "--config", str(cfg), "--set", "oops"]) == 2
    assert main(["run", "--config", str(cfg), "--set", "align.fuzzy=false"]) == 0
    monkeypatch.setenv("COREFALIGN_CONFIG", str(cfg))
    assert main(["run"]) == 0
    bad = tmp_path / "bad.yaml"
    bad.write_text("treebanks: {bm: {ud: {train: nowhere.conllu}}}\n")
    assert main(["run", "--config", str(bad)]) == 2


def test_empty_annotation_directory(tmp_path):
    cfg, _ = write_corpus(tmp_path, ["bm"], n_docs=1)
    for p in (tmp_path / "ann" / "bm").iterdir():
        p.unlink()
    assert main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "out" / "records" / "bm.jsonl").read_text() == ""
    assert read_conllu(tmp_path / "out" / "merged" / "bm" / "train.conllu") == []


def test_convert_directory_command(tmp_path, data_dir):
    ann = tmp_path / "ann"
    ann.mkdir()
    for name in ("ex-bridge", "ex-splitante"):
        for ext in (".ann", ".txt"):
            shutil.copy(data_dir / (name + ext), ann)
    out = tmp_path / "r.jsonl"
    assert main(["convert", "--ann-dir", str(ann), "-o", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 2
    assert main(["convert", "--ann-dir", str(ann)]) == 2


def test_stage_error_exit_code(tmp_path):
    cfg, _ = write_corpus(tmp_path, ["bm"], n_docs=1)
    (tmp_path / "out" / "records").mkdir(parents=True)
    (tmp_path / "out" / "records" / "bm.jsonl").write_text("{broken\n")
    assert main(["align", "--config", str(cfg)]) == 3


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "corefalign.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0.1.0"
