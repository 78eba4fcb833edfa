"""Command-line entry point: ``corefalign <run|convert|align|merge-ne|stats|validate>``."""
import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import NESettings, load_config
from .errors import ConfigError, CorefAlignError
from .pipeline import (StageError, convert_directory, merge_named_entities, run,
                       stats_for_files, validate_files)
from .stats import diff, write_stats_table

log = logging.getLogger("corefalign")


def _config(args):
    cfg = load_config(args.config, args.set or ())
    if getattr(args, "strict", False):
        cfg = replace(cfg, strict=True)
    if getattr(args, "workers", None):
        cfg = replace(cfg, workers=args.workers)
    if getattr(args, "output", None):
        cfg = replace(cfg, output=Path(args.output))
    return cfg


def _report(results):
    for r in results:
        log.info("%s: %d finding(s), %d problem(s)", r.name, r.findings, len(r.problems))
        for p in r.problems[:20]:
            log.warning("%s: %s", r.name, p)


def cmd_run(args):
    status, results = run(_config(args))
    _report(results)
    return status


def _stage(name):
    def cmd(args):
        cfg = _config(args)
        status, results = run(cfg, (name,))
        _report(results)
        return status
    return cmd


def cmd_convert(args):
    if args.ann_dir:
        if not args.records:
            raise ConfigError("--ann-dir needs -o/--records")
        summary = convert_directory(args.ann_dir, args.records, workers=args.workers or 1)
        log.info("converted %d document(s), %d pipe span(s) corrected", summary["documents"],
                 summary["pipe_spans"])
        return 1 if args.strict and (summary["findings"] or summary["dropped_mentions"]) else 0
    return _stage("convert")(args)


def cmd_merge_ne(args):
    if args.norne:
        if not args.input:
            raise ConfigError("--norne needs --input merged file(s)")
        ne = NESettings(args.key, args.scheme)
        conflicts = merge_named_entities(args.input, args.norne, ne, on_conflict="skip")
        for sid in conflicts:
            log.warning("entity conflict: %s", sid)
        return 1 if args.strict and conflicts else 0
    return _stage("merge-ne")(args)


def cmd_stats(args):
    if args.diff:
        before, after = (stats_for_files([p], NESettings()) for p in args.diff)
        for label, _, cell in diff(before, after):
            print(f"{label}\t{cell}")
        return 0
    if args.files:
        counts = stats_for_files(args.files, NESettings(args.key, args.scheme))
        for k, v in counts.as_dict().items():
            print(f"{k}\t{v}")
        if args.table:
            write_stats_table(args.table, {"counts": counts})
        return 0
    return _stage("stats")(args)


def cmd_validate(args):
    if args.files:
        found = validate_files(args.files)
        for path, f in found:
            print(f"{path}\t{f}")
        log.info("%d level-6 finding(s)", len(found))
        return 1 if found else 0
    return _stage("validate")(args)


def build_parser():
    p = argparse.ArgumentParser(prog="corefalign", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="config file (default: $COREFALIGN_CONFIG)")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config setting, e.g. align.fuzzy=false")
        sp.add_argument("--strict", action="store_true", help="fail on findings")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--output", help="override the output directory")

    sp = sub.add_parser("run", help="run convert, align, merge-ne and stats")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("convert", help="BRAT .ann/.txt -> record file")
    common(sp)
    sp.add_argument("--ann-dir")
    sp.add_argument("-o", "--records")
    sp.set_defaults(func=cmd_convert)

    sp = sub.add_parser("align", help="align records with UD and write merged CoNLL-U")
    common(sp)
    sp.set_defaults(func=_stage("align"))

    sp = sub.add_parser("merge-ne", help="transfer named entities onto merged files")
    common(sp)
    sp.add_argument("--norne", nargs="+", help="entity-annotated CoNLL-U files")
    sp.add_argument("--input", nargs="+", help="CoNLL-U files rewritten in place")
    sp.add_argument("--key", default="name")
    sp.add_argument("--scheme", default="plain", choices=("plain", "bio"))
    sp.set_defaults(func=cmd_merge_ne)

    sp = sub.add_parser("stats", help="category counts for records or CoNLL-U")
    common(sp)
    sp.add_argument("files", nargs="*")
    sp.add_argument("--diff", nargs=2, metavar=("BEFORE", "AFTER"))
    sp.add_argument("--table")
    sp.add_argument("--key", default="name")
    sp.add_argument("--scheme", default="plain", choices=("plain", "bio"))
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("validate", help="level-6 entity checks on CoNLL-U files")
    common(sp)
    sp.add_argument("files", nargs="*")
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as e:
        log.error("config error: %s", e)
        return 2
    except StageError as e:
        log.error("%s", e)
        return 3
    except CorefAlignError as e:
        log.error("%s", e)
        return 3


if __name__ == "__main__":
    sys.exit(main())
