"""Command-line interface: ``licscan {scan,analyze,train,eval,explain}``.

Exit codes: 0 compatible (or success), 1 incompatible, 2 error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from licscan import pipeline
from licscan.attitude import AttitudeLexicon
from licscan.compat import DefaultPolicy
from licscan.extraction import RootNotFound, ScanConfig, scan_project
from licscan.registry import PackageIndexSnapshot, PackageResolver, PyPIRemote, RegistryError, default_db
from licscan.term_id import (
    SequenceModel, TermIdError, TrainConfig, TrainingCorpus, evaluate, read_tsv, read_unlabeled, train,
)
from licscan.terms import NUM_TERMS, TERMS, Attitude, term

EXIT_OK = 0
EXIT_INCOMPATIBLE = 1
EXIT_ERROR = 2

log = logging.getLogger("licscan")


class CliError(Exception):
    """A user-facing failure that maps to exit code 2."""


# -------------------------------------------------------------------- helpers


def _attitude(value: str) -> Attitude:
    return Attitude(value.upper())


def _db(args):
    try:
        return default_db(args.spdx_db)
    except (OSError, ValueError, RegistryError) as exc:
        raise CliError(f"cannot load SPDX database: {exc}") from exc


def _resolver(args, db) -> PackageResolver | None:
    snapshot = None
    if args.snapshot:
        try:
            snapshot = PackageIndexSnapshot.load(args.snapshot)
        except (OSError, ValueError) as exc:
            raise CliError(f"cannot load snapshot {args.snapshot}: {exc}") from exc
    if args.offline:
        return PackageResolver(snapshot, db) if snapshot is not None else None
    return PackageResolver(snapshot or PackageIndexSnapshot(), db, PyPIRemote())


def _scan_config(args) -> ScanConfig:
    if not args.config:
        return ScanConfig()
    try:
        return ScanConfig.from_json(args.config)
    except (OSError, ValueError, TypeError) as exc:
        raise CliError(f"bad scan config {args.config}: {exc}") from exc


def _model(path: str | None) -> SequenceModel:
    path = path or pipeline.bundled_model_path()
    if not Path(path).is_file():
        raise CliError(f"model not found: {path}")
    try:
        return SequenceModel.load(path)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot load model {path}: {exc}") from exc


def _analysis(args) -> pipeline.Analysis:
    db = _db(args)
    model = _model(args.model)
    policy = DefaultPolicy(args.default_absent_right, args.default_absent_obligation)
    options = pipeline.AnalyzeOptions(policy, _scan_config(args), db, AttitudeLexicon.default(), _resolver(args, db))
    return pipeline.analyze(args.root, model, options)


def _emit(text: str) -> None:
    sys.stdout.write(text)
    sys.stdout.flush()


# -------------------------------------------------------------------- commands


def cmd_scan(args) -> int:
    db = _db(args)
    scan = scan_project(args.root, _scan_config(args), db, _resolver(args, db))
    doc = pipeline.scan_document(scan)
    if args.format == "json":
        _emit(pipeline.dumps(doc))
    else:
        _emit(render_scan(doc))
    return EXIT_OK


def cmd_analyze(args) -> int:
    doc = pipeline.report_document(_analysis(args))
    if args.format == "json":
        _emit(pipeline.dumps(doc))
    else:
        _emit(render_report(doc))
    return EXIT_INCOMPATIBLE if doc["verdict"] else EXIT_OK


def cmd_train(args) -> int:
    labeled = read_tsv(args.corpus)
    unlabeled = read_unlabeled(args.unlabeled) if args.unlabeled else []
    config = TrainConfig(
        l2=args.l2, max_iter=args.max_iter, semi_supervised=args.semi_supervised,
        pseudo_threshold=args.threshold, seed=args.seed,
    )
    model = train(TrainingCorpus(labeled, unlabeled), config)
    model.save(args.out)
    _emit(f"trained on {len(labeled)} labeled sentences; wrote {args.out}\n")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = _model(args.model)
    metrics = evaluate(model, read_tsv(args.testset))
    _emit(
        f"precision {metrics.precision:.4f}\nrecall    {metrics.recall:.4f}\nF1        {metrics.f1:.4f}\n"
        f"tp {metrics.tp} fp {metrics.fp} fn {metrics.fn}\n"
    )
    return EXIT_OK


def cmd_explain(args) -> int:
    try:
        target = term(int(args.term) if args.term.isdigit() else args.term)
    except (KeyError, IndexError, ValueError) as exc:
        raise CliError(f"unknown term {args.term!r}") from exc
    doc = pipeline.report_document(_analysis(args))
    _emit(render_explain(doc, target.id))
    return EXIT_OK


# ------------------------------------------------------------------- rendering


def render_scan(doc: dict) -> str:
    lines = [f"project {doc['project']}: {doc['stats']['licenses']} license(s)"]
    for lic in doc["licenses"]:
        spdx = lic["spdx_id"] or "-"
        lines.append(f"  {lic['role']}  {lic['kind']:<10}  {spdx:<20}  {lic['origin']}")
    for ref in doc["package_refs"]:
        lines.append(f"  package {ref['name']}{'==' + ref['version'] if ref['version'] else ''} ({ref['source_file']})")
    lines += [f"warning: {w}" for w in doc["warnings"]]
    return "\n".join(lines) + "\n"


def _non_default(lic: dict) -> str:
    shown = [f"{t['name']}={t['attitude']}" for t in lic["terms"] if not t["defaulted"]]
    return ", ".join(shown) or "(no terms found)"


def render_report(doc: dict) -> str:
    verdict = "INCOMPATIBLE" if doc["verdict"] else "compatible"
    stats = doc["stats"]
    lines = [f"project {doc['project']}: {verdict} ({stats['conflicts']} conflict(s), {stats['pairs_checked']} pair(s))"]
    for lic in doc["licenses"]:
        lines.append(f"  {lic['role']} {lic['ref']}  match={lic['match']['kind']}")
        lines.append(f"     {_non_default(lic)}")
    for c in doc["conflicts"]:
        left, right = c["left"], c["right"]
        note = " (defaulted)" if left["defaulted"] or right["defaulted"] else ""
        lines.append(
            f"  conflict on {c['term_name']}: {left['ref']} {left['attitude']} vs "
            f"{right['ref']} {right['attitude']} [{c['rule']}, {c['condition_case']}]{note}"
        )
    lines += [f"warning: {w}" for w in doc["warnings"]]
    return "\n".join(lines) + "\n"


def render_explain(doc: dict, term_id: int) -> str:
    name = TERMS[term_id].name
    lines = [f"term {term_id} {name} in {doc['project']}"]
    for lic in doc["licenses"]:
        entry = lic["terms"][term_id]
        how = "default policy" if entry["defaulted"] else f"inferred {entry['inferred']}"
        lines.append(f"{lic['role']} {lic['ref']}: {entry['attitude']} ({how})")
        for ev in entry["evidence"]:
            lines.append(f"  [{ev['source']} s{ev['sentence_index']}] {ev['sentence']}")
            lines.append(f"    entity {ev['text']!r} tokens {ev['start']}..{ev['end']} -> {ev['attitude']}")
            pts = ", ".join(f"{p['word']}/{p['pos']}/{p['locality']}" for p in ev["powerful_tokens"]) or "none"
            lines.append(f"    powerful tokens: {pts}")
            for m in ev["marks"]:
                lines.append(f"    mark {m['attitude']} from {m['entry']!r} at {m['start']}..{m['end']}")
    for c in doc["conflicts"]:
        if c["term"] == term_id:
            lines.append(f"conflict: {c['left']['ref']} {c['left']['attitude']} vs {c['right']['ref']} "
                         f"{c['right']['attitude']} [{c['rule']}, {c['condition_case']}]")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------- parser


def _add_source_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("root", help="project directory")
    p.add_argument("--config", metavar="PATH", help="ScanConfig JSON file")
    p.add_argument("--spdx-db", metavar="PATH", help="SPDX license directory (falls back to $LIDETECT_SPDX_DB)")
    p.add_argument("--snapshot", metavar="PATH", help="package-index snapshot JSON")
    p.add_argument("--offline", action="store_true", help="never contact the package index")


def _add_analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", metavar="PATH", help="CRF model file (default: bundled model)")
    p.add_argument("--default-absent-right", type=_attitude, choices=[Attitude.CANNOT, Attitude.CAN],
                   default=Attitude.CANNOT, metavar="{cannot|can}", help="attitude for unmentioned rights")
    p.add_argument("--default-absent-obligation", type=_attitude, choices=[Attitude.CAN, Attitude.CANNOT],
                   default=Attitude.CAN, metavar="{can|cannot}", help="attitude for unmentioned obligations")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="licscan", description="License incompatibility detection for source trees.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="list the licenses found in a project")
    _add_source_flags(p)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("analyze", help="detect incompatible license pairs")
    _add_source_flags(p)
    _add_analysis_flags(p)
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="fit a term-identification model")
    p.add_argument("corpus", help="labeled TSV corpus")
    p.add_argument("--unlabeled", metavar="PATH", help="one sentence per line, for self-training")
    p.add_argument("--out", metavar="PATH", default="model.json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--l2", type=float, default=TrainConfig.l2)
    p.add_argument("--max-iter", type=int, default=TrainConfig.max_iter)
    p.add_argument("--semi-supervised", action="store_true")
    p.add_argument("--threshold", type=float, default=TrainConfig.pseudo_threshold)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="entity-level precision, recall and F1")
    p.add_argument("model")
    p.add_argument("testset", help="labeled TSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("explain", help="show the evidence behind one term")
    _add_source_flags(p)
    _add_analysis_flags(p)
    p.add_argument("--term", required=True, help=f"term id 0..{NUM_TERMS - 1} or name")
    p.set_defaults(func=cmd_explain)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except RootNotFound as exc:
        print(f"licscan: project root not found: {exc}", file=sys.stderr)
    except (CliError, TermIdError) as exc:
        print(f"licscan: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"licscan: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
