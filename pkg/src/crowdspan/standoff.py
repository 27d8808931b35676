"""brat standoff (.txt + .ann) reading and writing.

Supported constructs: text-bound components (T lines), "Sentiment" attributes
(A lines) and Support/Attack relations (R lines).  Everything else brat can
express (events, normalizations, notes, other attributes) is recorded as an
unsupported-line issue rather than silently dropped.  Offsets are code points.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .argmodel import (
    AnnotationSet,
    CharSpan,
    ComponentAnnotation,
    ComponentLabel,
    RelationAnnotation,
    RelationKind,
    Sentiment,
    ValidationPolicy,
    DEFAULT_POLICY,
    Violation,
    has_errors,
    validate,
)


class ParseError(ValueError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class OffsetError(ParseError):
    """Span out of range, or quoted surface text disagrees with the document."""


class UnknownLabelError(ParseError):
    """Component label, sentiment value or relation kind outside the model."""


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    sentence_spans: Optional[tuple[CharSpan, ...]] = None

    @property
    def length(self) -> int:
        return len(self.text)


@dataclass(frozen=True)
class AnnotationBundle:
    """One document together with every annotator's set (gold kept apart)."""

    document: Document
    sets: tuple[AnnotationSet, ...]
    gold: Optional[AnnotationSet] = None

    @property
    def doc_id(self) -> str:
        return self.document.id


@dataclass
class ParseIssue:
    kind: str  # "unsupported"
    line_no: int
    line: str

    def to_json(self) -> dict:
        return {"kind": self.kind, "line_no": self.line_no, "line": self.line}


GOLD_ANNOTATOR_ID = "gold"

_T_LINE = re.compile(r"^(T\S+)\t(\S+) (\d+) (\d+)\t(.*)$")
_A_LINE = re.compile(r"^(A\S+)\t(\S+) (T\S+)(?: (\S+))?$")
_R_LINE = re.compile(r"^(R\S+)\t(\S+) Arg1:(T\S+) Arg2:(T\S+)\s*$")

_LABELS = {lab.value: lab for lab in ComponentLabel if lab is not ComponentLabel.NA}
_SENTIMENTS = {s.value: s for s in Sentiment}
_KINDS = {k.value: k for k in RelationKind}


def _normalize_surface(text: str) -> str:
    # brat flattens newlines inside a span to spaces when writing .ann files
    return text.replace("\n", " ").replace("\r", " ")


def parse_ann(
    ann_text: str,
    doc: Document,
    annotator_id: str,
    issues: Optional[list[ParseIssue]] = None,
) -> AnnotationSet:
    """Parse one annotator's .ann content against its document.

    Raises ParseError / OffsetError / UnknownLabelError on malformed input;
    appends unsupported-but-well-formed brat lines to `issues` when given.
    """
    ann_text = ann_text.lstrip("﻿")
    components: dict[str, ComponentAnnotation] = {}
    sentiments: dict[str, Sentiment] = {}
    relations: list[RelationAnnotation] = []
    relation_ids: set[str] = set()

    for line_no, raw in enumerate(ann_text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        head = line[0]
        if head == "T":
            m = _T_LINE.match(line)
            if m is None:
                parts = line.split("\t")
                if len(parts) >= 2 and ";" in parts[1]:
                    raise ParseError("discontinuous spans are not supported", line_no)
                raise ParseError(f"malformed text-bound line: {line!r}", line_no)
            tid, label_str, start_s, end_s, surface = m.groups()
            if label_str not in _LABELS:
                raise UnknownLabelError(f"unknown component label {label_str!r}", line_no)
            start, end = int(start_s), int(end_s)
            if not (0 <= start < end <= doc.length):
                raise OffsetError(
                    f"span [{start},{end}) outside document of length {doc.length}", line_no
                )
            slice_ = _normalize_surface(doc.text[start:end])
            if surface != slice_:
                raise OffsetError(
                    f"surface text {surface!r} does not match document slice {slice_!r}", line_no
                )
            if tid in components:
                raise ParseError(f"duplicate component id {tid}", line_no)
            components[tid] = ComponentAnnotation(tid, CharSpan(start, end), _LABELS[label_str])
        elif head == "A":
            m = _A_LINE.match(line)
            if m is None:
                raise ParseError(f"malformed attribute line: {line!r}", line_no)
            aid, name, tid, value = m.groups()
            if name != "Sentiment":
                if issues is not None:
                    issues.append(ParseIssue("unsupported", line_no, line))
                continue
            if value not in _SENTIMENTS:
                raise UnknownLabelError(f"unknown sentiment value {value!r}", line_no)
            if tid not in components:
                raise ParseError(f"sentiment attached to unknown component {tid}", line_no)
            if tid in sentiments:
                raise ParseError(f"component {tid} carries two sentiments", line_no)
            sentiments[tid] = _SENTIMENTS[value]
        elif head == "R":
            m = _R_LINE.match(line)
            if m is None:
                raise ParseError(f"malformed relation line: {line!r}", line_no)
            rid, kind_str, arg1, arg2 = m.groups()
            if kind_str not in _KINDS:
                raise UnknownLabelError(f"unknown relation kind {kind_str!r}", line_no)
            if rid in relation_ids:
                raise ParseError(f"duplicate relation id {rid}", line_no)
            relation_ids.add(rid)
            relations.append(RelationAnnotation(rid, _KINDS[kind_str], arg1, arg2))
        else:
            if issues is not None:
                issues.append(ParseIssue("unsupported", line_no, line))

    final = tuple(
        ComponentAnnotation(c.id, c.span, c.label, sentiments.get(c.id))
        for c in components.values()
    )
    return AnnotationSet(annotator_id, doc.id, final, tuple(relations))


def write_ann(annotation_set: AnnotationSet, doc: Document) -> str:
    """Serialize a set to .ann text; parse_ann(write_ann(s)) == s up to id renumbering."""
    comps = sorted(annotation_set.components, key=lambda c: (c.span.start, c.span.end, c.id))
    new_ids = {c.id: f"T{i}" for i, c in enumerate(comps, start=1)}
    lines: list[str] = []
    for i, comp in enumerate(comps, start=1):
        surface = _normalize_surface(doc.text[comp.span.start:comp.span.end])
        lines.append(f"T{i}\t{comp.label.value} {comp.span.start} {comp.span.end}\t{surface}")
    a_no = 1
    for i, comp in enumerate(comps, start=1):
        if comp.sentiment is not None:
            lines.append(f"A{a_no}\tSentiment T{i} {comp.sentiment.value}")
            a_no += 1
    rels = sorted(
        annotation_set.relations,
        key=lambda r: (new_ids.get(r.source, r.source), new_ids.get(r.target, r.target), r.id),
    )
    for j, rel in enumerate(rels, start=1):
        src = new_ids.get(rel.source)
        tgt = new_ids.get(rel.target)
        if src is None or tgt is None:
            raise ValueError(f"relation {rel.id} references a missing component")
        lines.append(f"R{j}\t{rel.kind.value} Arg1:{src} Arg2:{tgt}")
    return "".join(line + "\n" for line in lines)


@dataclass
class LoadReport:
    """What happened while ingesting a campaign directory."""

    skipped_documents: list[dict] = field(default_factory=list)
    dropped_sets: list[dict] = field(default_factory=list)
    parse_failures: list[dict] = field(default_factory=list)
    unsupported_lines: list[dict] = field(default_factory=list)
    gold_only_documents: list[str] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "skipped_documents": self.skipped_documents,
            "dropped_sets": self.dropped_sets,
            "parse_failures": self.parse_failures,
            "unsupported_lines": self.unsupported_lines,
            "gold_only_documents": self.gold_only_documents,
            "violations": [v.to_json() for v in self.violations],
        }


def _read_text(path: Path) -> str:
    # Binary read: offsets must see the exact code points, no newline translation.
    return path.read_bytes().decode("utf-8").lstrip("﻿")


def load_campaign(
    root_dir: str | Path,
    policy: ValidationPolicy = DEFAULT_POLICY,
    drop_invalid: bool = True,
) -> tuple[list[AnnotationBundle], LoadReport]:
    """Load a campaign directory into bundles.

    Layout: `root/<doc_id>/<doc_id>.txt` beside one `<annotator_id>.ann` per
    annotator; an optional `gold.ann` holds the expert annotation.  Sets whose
    validation yields an error-severity violation are dropped (and logged)
    when `drop_invalid` is set; documents ending up with no sets at all are
    skipped.  Output is sorted by document id, then annotator id.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"campaign root {root} is not a directory")
    report = LoadReport()
    bundles: list[AnnotationBundle] = []

    for doc_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        doc_id = doc_dir.name
        txt_path = doc_dir / f"{doc_id}.txt"
        if not txt_path.is_file():
            report.skipped_documents.append({"doc_id": doc_id, "reason": "missing .txt"})
            continue
        doc = Document(doc_id, _read_text(txt_path))

        sets: list[AnnotationSet] = []
        gold: Optional[AnnotationSet] = None
        for ann_path in sorted(doc_dir.glob("*.ann")):
            annotator_id = ann_path.stem
            issues: list[ParseIssue] = []
            try:
                parsed = parse_ann(_read_text(ann_path), doc, annotator_id, issues)
            except ParseError as exc:
                report.parse_failures.append(
                    {"doc_id": doc_id, "annotator_id": annotator_id, "error": str(exc)}
                )
                continue
            for issue in issues:
                report.unsupported_lines.append({"doc_id": doc_id, "annotator_id": annotator_id, **issue.to_json()})
            violations = validate(parsed, doc.length, policy)
            report.violations.extend(violations)
            if drop_invalid and has_errors(violations) and annotator_id != GOLD_ANNOTATOR_ID:
                report.dropped_sets.append(
                    {
                        "doc_id": doc_id,
                        "annotator_id": annotator_id,
                        "violations": [v.rule for v in violations if v.severity == "Error"],
                    }
                )
                continue
            if annotator_id == GOLD_ANNOTATOR_ID:
                gold = parsed
            else:
                sets.append(parsed)

        if not sets and gold is None:
            report.skipped_documents.append({"doc_id": doc_id, "reason": "no parseable annotation set"})
            continue
        if not sets:
            report.gold_only_documents.append(doc_id)
        sets.sort(key=lambda s: s.annotator_id)
        bundles.append(AnnotationBundle(doc, tuple(sets), gold))

    bundles.sort(key=lambda b: b.doc_id)
    return bundles, report


def write_campaign_files(bundle: AnnotationBundle, root_dir: str | Path) -> None:
    """Write one bundle back out in the campaign directory layout."""
    doc_dir = Path(root_dir) / bundle.doc_id
    doc_dir.mkdir(parents=True, exist_ok=True)
    (doc_dir / f"{bundle.doc_id}.txt").write_bytes(bundle.document.text.encode("utf-8"))
    for s in bundle.sets:
        (doc_dir / f"{s.annotator_id}.ann").write_bytes(write_ann(s, bundle.document).encode("utf-8"))
    if bundle.gold is not None:
        (doc_dir / f"{GOLD_ANNOTATOR_ID}.ann").write_bytes(
            write_ann(bundle.gold, bundle.document).encode("utf-8")
        )


def dump_report(report: LoadReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), ensure_ascii=False, indent=2, sort_keys=True), encoding="utf-8")
