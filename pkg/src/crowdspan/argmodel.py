"""Argumentation annotation model: labels, spans, annotation sets, legality checks.

The model distinguishes four argument component types plus non-argumentative
text (NA).  MajorClaim and Claim carry a sentiment; Premise components must
support or attack a claim; PSIC (premise supporting an implicit claim) stands
alone.  All offsets count Unicode code points, never bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence


class ComponentLabel(Enum):
    MAJOR_CLAIM = "MajorClaim"
    CLAIM = "Claim"
    PREMISE = "Premise"
    PSIC = "PSIC"
    NA = "NA"


# Canonical ordering: fixed index base for one-hot vectors and tie-breaking.
CANONICAL_LABELS: tuple[ComponentLabel, ...] = (
    ComponentLabel.MAJOR_CLAIM,
    ComponentLabel.CLAIM,
    ComponentLabel.PREMISE,
    ComponentLabel.PSIC,
    ComponentLabel.NA,
)
LABEL_INDEX: dict[ComponentLabel, int] = {lab: i for i, lab in enumerate(CANONICAL_LABELS)}
COMPONENT_LABELS: tuple[ComponentLabel, ...] = CANONICAL_LABELS[:-1]
NA_INDEX: int = LABEL_INDEX[ComponentLabel.NA]

#: Labels that must carry a sentiment.
SENTIMENT_BEARING: frozenset[ComponentLabel] = frozenset(
    {ComponentLabel.MAJOR_CLAIM, ComponentLabel.CLAIM}
)


class Sentiment(Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"
    NEUTRAL = "Neutral"


class RelationKind(Enum):
    SUPPORT = "Support"
    ATTACK = "Attack"


class OverlapError(ValueError):
    """Two components of the same annotator occupy overlapping spans."""


@dataclass(frozen=True, order=True)
class CharSpan:
    """Half-open [start, end) span in code-point offsets."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def overlap(self, other: "CharSpan") -> int:
        """Number of positions shared with `other`."""
        return max(0, min(self.end, other.end) - max(self.start, other.start))

    def contains(self, other: "CharSpan") -> bool:
        return self.start <= other.start and other.end <= self.end

    def shift(self, offset: int) -> "CharSpan":
        return CharSpan(self.start + offset, self.end + offset)

    def clip(self, window: "CharSpan") -> Optional["CharSpan"]:
        """Intersection with `window`, or None when disjoint."""
        s, e = max(self.start, window.start), min(self.end, window.end)
        return CharSpan(s, e) if s < e else None


@dataclass(frozen=True)
class ComponentAnnotation:
    id: str
    span: CharSpan
    label: ComponentLabel
    sentiment: Optional[Sentiment] = None

    def __post_init__(self) -> None:
        if self.label is ComponentLabel.NA:
            raise ValueError("components are never labelled NA; leave the text unannotated")


@dataclass(frozen=True)
class RelationAnnotation:
    id: str
    kind: RelationKind
    source: str  # component id
    target: str  # component id


@dataclass(frozen=True)
class AnnotationSet:
    """One annotator's complete labelling of one document."""

    annotator_id: str
    doc_id: str
    components: tuple[ComponentAnnotation, ...] = ()
    relations: tuple[RelationAnnotation, ...] = ()

    def component_by_id(self, cid: str) -> Optional[ComponentAnnotation]:
        for comp in self.components:
            if comp.id == cid:
                return comp
        return None

    def units(self) -> list[tuple[int, int, ComponentLabel]]:
        """Component spans as (start, end, label) triples sorted by position."""
        return sorted((c.span.start, c.span.end, c.label) for c in self.components)


@dataclass(frozen=True)
class ValidationPolicy:
    """Tunable legality rules.

    `premise_to_major_claim`: whether a Premise may support/attack a MajorClaim
    directly.  `warn_only` downgrades the named rules from error to warning.
    """

    premise_to_major_claim: bool = True
    warn_only: frozenset[str] = frozenset()


DEFAULT_POLICY = ValidationPolicy()

# Rule codes emitted by validate().
ILLEGAL_RELATION = "IllegalRelationEndpoints"
MISSING_SENTIMENT = "MissingSentiment"
SPURIOUS_SENTIMENT = "SpuriousSentiment"
UNATTACHED_PREMISE = "UnattachedPremise"
OVERLAPPING_COMPONENTS = "OverlappingComponents"
SPAN_OUT_OF_BOUNDS = "SpanOutOfBounds"
DANGLING_RELATION = "DanglingRelationEndpoint"
SELF_RELATION = "SelfRelation"
DUPLICATE_RELATION = "DuplicateRelation"


@dataclass(frozen=True)
class Violation:
    doc_id: str
    annotator_id: str
    rule: str
    target_id: str
    severity: str  # "Error" | "Warning"
    message: str

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "annotator_id": self.annotator_id,
            "rule": self.rule,
            "target_id": self.target_id,
            "severity": self.severity,
            "message": self.message,
        }


def validate(
    annotation_set: AnnotationSet,
    doc_length: int,
    policy: ValidationPolicy = DEFAULT_POLICY,
) -> list[Violation]:
    """Check one annotator's set against the model's legality rules.

    Violations are findings, not failures: the list is empty for a legal set.
    Pure and idempotent; ordering is deterministic (components, then relations,
    in input order).
    """
    out: list[Violation] = []

    def add(rule: str, target: str, message: str) -> None:
        severity = "Warning" if rule in policy.warn_only else "Error"
        out.append(
            Violation(annotation_set.doc_id, annotation_set.annotator_id, rule, target, severity, message)
        )

    comps = annotation_set.components
    by_id = {c.id: c for c in comps}

    for comp in comps:
        if comp.span.end > doc_length:
            add(SPAN_OUT_OF_BOUNDS, comp.id,
                f"span [{comp.span.start},{comp.span.end}) exceeds document length {doc_length}")
        if comp.label in SENTIMENT_BEARING and comp.sentiment is None:
            add(MISSING_SENTIMENT, comp.id, f"{comp.label.value} lacks a sentiment")
        if comp.label not in SENTIMENT_BEARING and comp.sentiment is not None:
            add(SPURIOUS_SENTIMENT, comp.id, f"{comp.label.value} must not carry a sentiment")

    ordered = sorted(comps, key=lambda c: (c.span.start, c.span.end, c.id))
    for prev, cur in zip(ordered, ordered[1:]):
        if prev.span.overlap(cur.span) > 0:
            add(OVERLAPPING_COMPONENTS, cur.id,
                f"components {prev.id} and {cur.id} overlap")

    legal_targets = {ComponentLabel.CLAIM}
    if policy.premise_to_major_claim:
        legal_targets.add(ComponentLabel.MAJOR_CLAIM)

    seen_pairs: set[tuple[str, str]] = set()
    attached: set[str] = set()
    for rel in annotation_set.relations:
        src, tgt = by_id.get(rel.source), by_id.get(rel.target)
        if src is None or tgt is None:
            add(DANGLING_RELATION, rel.id,
                f"relation references unknown component ({rel.source} -> {rel.target})")
            continue
        if rel.source == rel.target:
            add(SELF_RELATION, rel.id, "relation loops back to its source")
            continue
        if (rel.source, rel.target) in seen_pairs:
            add(DUPLICATE_RELATION, rel.id,
                f"duplicate relation on pair ({rel.source}, {rel.target})")
        seen_pairs.add((rel.source, rel.target))
        if src.label is not ComponentLabel.PREMISE or tgt.label not in legal_targets:
            add(ILLEGAL_RELATION, rel.id,
                f"{src.label.value} -> {tgt.label.value} is not a legal relation")
        else:
            attached.add(src.id)

    for comp in comps:
        if comp.label is ComponentLabel.PREMISE and comp.id not in attached:
            # A premise whose only relations are illegal still counts as unattached.
            add(UNATTACHED_PREMISE, comp.id, "premise supports/attacks no claim")

    return out


def has_errors(violations: Iterable[Violation]) -> bool:
    return any(v.severity == "Error" for v in violations)


def to_char_labels(annotation_set: AnnotationSet, doc_length: int) -> list[ComponentLabel]:
    """Project a set onto a per-character label sequence (NA fills the gaps)."""
    labels = [ComponentLabel.NA] * doc_length
    ordered = sorted(annotation_set.components, key=lambda c: (c.span.start, c.span.end))
    prev_end = -1
    for comp in ordered:
        if comp.span.start < prev_end:
            raise OverlapError(
                f"{annotation_set.annotator_id}/{annotation_set.doc_id}: "
                f"component {comp.id} overlaps a preceding component"
            )
        if comp.span.end > doc_length:
            raise ValueError(f"component {comp.id} exceeds document length {doc_length}")
        for i in range(comp.span.start, comp.span.end):
            labels[i] = comp.label
        prev_end = comp.span.end
    return labels


def spans_from_labels(labels: Sequence[ComponentLabel]) -> list[tuple[CharSpan, ComponentLabel]]:
    """Maximal runs of equal non-NA labels, the inverse of to_char_labels."""
    out: list[tuple[CharSpan, ComponentLabel]] = []
    start = None
    current: ComponentLabel = ComponentLabel.NA
    for i, lab in enumerate(labels):
        if lab is not current:
            if start is not None and current is not ComponentLabel.NA:
                out.append((CharSpan(start, i), current))
            start, current = i, lab
    if start is not None and current is not ComponentLabel.NA:
        out.append((CharSpan(start, len(labels)), current))
    return out
