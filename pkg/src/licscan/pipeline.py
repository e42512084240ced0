"""End-to-end project analysis and the JSON report document.

Official licenses are interpreted once per SPDX id and reused; a text that
contains an official license plus extra clauses gets the official summary
merged with the summary of the extra clauses.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from importlib import resources

from licscan.attitude import AttitudeLexicon, Evidence, LicenseSummary, merge, summarize_text
from licscan.compat import ConcreteSummary, ConflictRecord, DefaultPolicy, ProjectReport, analyze_project
from licscan.extraction import LicenseInstance, ProjectScan, Role, ScanConfig, scan_project
from licscan.preprocess import MatchKind, MatchResult, match_official
from licscan.registry import PackageResolver, SpdxDb, default_db
from licscan.term_id import SequenceModel
from licscan.terms import NUM_TERMS, TERMS, Attitude

SCHEMA_VERSION = "1.0"


# ---------------------------------------------------------------- summaries


class SummaryCache:
    """Interprets license instances, reusing one summary per official license."""

    def __init__(self, model: SequenceModel, lexicon: AttitudeLexicon, db: SpdxDb):
        self.model = model
        self.lexicon = lexicon
        self.db = db
        self._official: dict[str, LicenseSummary] = {}
        self._lock = threading.Lock()

    def official(self, spdx_id: str) -> LicenseSummary:
        with self._lock:
            hit = self._official.get(spdx_id)
        if hit is None:
            hit = summarize_text(self.db[spdx_id].canonical_text, self.model, self.lexicon)
            hit = _tag_source(hit, f"official:{spdx_id}")
            with self._lock:
                hit = self._official.setdefault(spdx_id, hit)
        return hit

    def summarize(self, instance: LicenseInstance) -> tuple[LicenseSummary, MatchResult]:
        match = match_official(instance.text, self.db)
        if match.kind is MatchKind.EXACT:
            base = self.official(match.spdx_id)
            return LicenseSummary(instance, base.attitudes, list(base.conditions), base.evidence, list(base.warnings)), match
        if match.kind is MatchKind.CONTAINS:
            base = self.official(match.spdx_id)
            if not match.residual.strip():
                return LicenseSummary(instance, base.attitudes, list(base.conditions), base.evidence, list(base.warnings)), match
            rest = summarize_text(match.residual, self.model, self.lexicon)
            pairs = [(k, ev) for s in (base, rest) for k, evs in sorted(s.evidence.items()) for ev in evs]
            attitudes, evidence = merge(pairs)
            return LicenseSummary(
                instance, attitudes, base.conditions + rest.conditions, evidence, base.warnings + rest.warnings,
            ), match
        return summarize_text(instance.text, self.model, self.lexicon, instance), match


def _tag_source(summary: LicenseSummary, source: str) -> LicenseSummary:
    evidence = {k: [dataclasses.replace(ev, source=source) for ev in evs] for k, evs in summary.evidence.items()}
    return LicenseSummary(summary.license, summary.attitudes, summary.conditions, evidence, summary.warnings)


# ----------------------------------------------------------------- analysis


@dataclass
class AnalyzeOptions:
    policy: DefaultPolicy = field(default_factory=DefaultPolicy)
    config: ScanConfig = field(default_factory=ScanConfig)
    db: SpdxDb | None = None
    lexicon: AttitudeLexicon | None = None
    resolver: PackageResolver | None = None


@dataclass
class Analysis:
    scan: ProjectScan
    report: ProjectReport
    matches: list[MatchResult]


def bundled_model_path() -> str:
    with resources.as_file(resources.files("licscan.data").joinpath("model.json")) as path:
        return str(path)


def analyze(root: str | os.PathLike, model: SequenceModel, options: AnalyzeOptions | None = None) -> Analysis:
    """Scan ``root``, interpret every license and check every license pair."""
    options = options or AnalyzeOptions()
    db = options.db or default_db()
    lexicon = options.lexicon or AttitudeLexicon.default()
    scan = scan_project(root, options.config, db, options.resolver)
    cache = SummaryCache(model, lexicon, db)
    summaries, matches = [], []
    for inst in scan.instances:
        summary, match = cache.summarize(inst)
        summaries.append(summary)
        matches.append(match)
    report = analyze_project(scan.root, summaries, options.policy)
    # keep match results aligned with the report's sorted summaries
    by_id = {id(s): m for s, m in zip(summaries, matches)}
    return Analysis(scan, report, [by_id[id(s)] for s in report.summaries])


# ------------------------------------------------------------------ documents


def _instance_doc(inst: LicenseInstance) -> dict:
    return {
        "origin": inst.origin,
        "kind": inst.kind.value,
        "role": inst.role.value,
        "scope": inst.scope,
        "spdx_id": inst.spdx_id,
        "sha256": hashlib.sha256(inst.text.encode("utf-8")).hexdigest(),
        "chars": len(inst.text),
    }


def _evidence_doc(ev: Evidence) -> dict:
    return {
        "sentence_index": ev.sentence_index,
        "sentence": ev.sentence,
        "start": ev.start,
        "end": ev.end,
        "text": ev.text,
        "attitude": ev.attitude.value,
        "source": ev.source,
        "powerful_tokens": [
            {"token_index": p.token_index, "word": w, "pos": p.pos, "locality": p.locality.value}
            for p, w in zip(ev.pts, ev.pt_words or ("",) * len(ev.pts))
        ],
        "marks": [{"attitude": m.attitude.value, "entry": m.entry, "start": m.start, "end": m.end} for m in ev.marks],
    }


def _summary_doc(summary: LicenseSummary, concrete: ConcreteSummary, match: MatchResult) -> dict:
    doc = _instance_doc(summary.license)
    doc["ref"] = concrete.ref
    doc["match"] = {"kind": match.kind.value, "spdx_id": match.spdx_id}
    terms = []
    for k in range(NUM_TERMS):
        terms.append({
            "id": k,
            "name": TERMS[k].name,
            "attitude": concrete.attitudes[k].value,
            "inferred": summary.attitudes[k].value,
            "defaulted": k in concrete.defaulted,
            "evidence": [_evidence_doc(ev) for ev in summary.evidence.get(k, [])],
        })
    doc["terms"] = terms
    doc["conditions"] = [
        {"antecedent": c.antecedent.term, "consequent": c.consequent.term, "sentence_index": c.antecedent.sentence_index}
        for c in summary.conditions
    ]
    doc["warnings"] = list(summary.warnings)
    return doc


def _conflict_doc(c: ConflictRecord) -> dict:
    return {
        "term": c.term,
        "term_name": TERMS[c.term].name,
        "left": {"ref": c.left.ref, "attitude": c.left.attitude.value, "defaulted": c.left.defaulted},
        "right": {"ref": c.right.ref, "attitude": c.right.attitude.value, "defaulted": c.right.defaulted},
        "rule": c.rule.value,
        "condition_case": c.condition_case.value,
    }


def scan_document(scan: ProjectScan) -> dict:
    """Report for extraction only."""
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": "scan",
        "project": scan.root,
        "licenses": [_instance_doc(i) for i in scan.instances],
        "package_refs": [{"name": r.name, "version": r.version, "source_file": r.source_file} for r in scan.package_refs],
        "warnings": list(scan.warnings),
        "stats": {
            "licenses": len(scan.instances),
            "project_licenses": sum(i.role is Role.PL for i in scan.instances),
            "component_licenses": sum(i.role is Role.CL for i in scan.instances),
            "package_refs": len(scan.package_refs),
        },
    }


def report_document(analysis: Analysis) -> dict:
    """Full analysis report; ``verdict`` is true when the project is incompatible."""
    scan, report = analysis.scan, analysis.report
    doc = scan_document(scan)
    doc["mode"] = "analyze"
    doc["licenses"] = [
        _summary_doc(s, c, m) for s, c, m in zip(report.summaries, report.concrete, analysis.matches)
    ]
    doc["policy"] = {
        "absent_right": report.concrete[0].policy.absent_right.value if report.concrete else Attitude.CANNOT.value,
        "absent_obligation": report.concrete[0].policy.absent_obligation.value if report.concrete else Attitude.CAN.value,
    }
    doc["pairs"] = [
        {
            "left": p.left,
            "right": p.right,
            "rule": p.rule.value,
            "incompatible": p.verdict.incompatible,
            "result_pairs": [
                {"owner": rp.owner, "antecedent": rp.antecedent, "consequent": rp.consequent,
                 "r_true": rp.r_true, "r_false": rp.r_false}
                for rp in p.verdict.result_pairs
            ],
        }
        for p in report.pairs
    ]
    doc["conflicts"] = [_conflict_doc(c) for c in report.conflicts]
    doc["verdict"] = report.incompatible
    doc["warnings"] = list(scan.warnings) + list(report.warnings)
    doc["stats"].update({
        "pairs_checked": report.pairs_checked,
        "conflicts": len(report.conflicts),
        "defaulted_conflicts": sum(c.left.defaulted or c.right.defaulted for c in report.conflicts),
    })
    return doc


def dumps(doc: dict) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def report_schema() -> dict:
    return json.loads(resources.files("licscan.data").joinpath("report.schema.json").read_text("utf-8"))
