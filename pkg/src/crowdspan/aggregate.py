"""Consensus building: per-character one-hot centroids, component extraction,
and majority voting for sentiments and relations.

The centroid of a single-cluster K-means run over the annotators' one-hot
vectors is their arithmetic mean, so that is what gets computed; the mass of
the winning label doubles as the confidence score.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .argmodel import (
    CANONICAL_LABELS,
    LABEL_INDEX,
    NA_INDEX,
    SENTIMENT_BEARING,
    AnnotationSet,
    CharSpan,
    ComponentLabel,
    RelationKind,
    Sentiment,
)
from .errors import DegenerateInput


@dataclass
class LabelDistribution:
    """Per-character label-probability vectors in canonical label order."""

    vectors: np.ndarray  # (length, 5), rows sum to 1
    n_annotators: int

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[1] != len(CANONICAL_LABELS):
            raise ValueError("expected a (length x 5) matrix")
        if len(self.vectors) and np.abs(self.vectors.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("rows must sum to 1")

    def __len__(self) -> int:
        return len(self.vectors)

    @property
    def confidence(self) -> np.ndarray:
        """Per-character mass of the winning label."""
        return self.vectors.max(axis=1)

    @property
    def label_codes(self) -> np.ndarray:
        """Per-character argmax label index.

        Canonical order places NA last, so taking the first index attaining
        the maximum prefers argumentative labels and breaks remaining ties in
        canonical order.
        """
        attain = self.vectors == self.vectors.max(axis=1, keepdims=True)
        return attain.argmax(axis=1)

    @property
    def tie_flags(self) -> np.ndarray:
        attain = self.vectors == self.vectors.max(axis=1, keepdims=True)
        return attain.sum(axis=1) >= 2

    def labels(self) -> list[ComponentLabel]:
        return [CANONICAL_LABELS[k] for k in self.label_codes]


@dataclass
class AggregatedComponent:
    span: CharSpan
    label: ComponentLabel
    confidence: float
    tie: bool = False
    sentiment: Optional[Sentiment] = None
    sentiment_confidence: Optional[float] = None
    sentiment_tie: bool = False

    def to_json(self) -> dict:
        out = {
            "start": self.span.start,
            "end": self.span.end,
            "label": self.label.value,
            "confidence": self.confidence,
            "tie": self.tie,
        }
        if self.sentiment is not None:
            out["sentiment"] = self.sentiment.value
            out["sentiment_confidence"] = self.sentiment_confidence
            if self.sentiment_tie:
                out["sentiment_tie"] = True
        return out


@dataclass
class AggregatedRelation:
    source: int  # index into the aggregated component list
    target: int
    kind: RelationKind
    confidence: float

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "target": self.target,
            "kind": self.kind.value,
            "confidence": self.confidence,
        }


@dataclass
class RelationDiagnostics:
    total: int = 0
    unaligned: int = 0

    def to_json(self) -> dict:
        return {"total": self.total, "unaligned": self.unaligned}


def centroid(sets: Sequence[AnnotationSet], doc_length: int) -> LabelDistribution:
    """Mean of the annotators' per-character one-hot vectors.

    A literal 1-cluster K-means converges to this mean after its first
    assignment step, whatever the initialization.
    """
    if len(sets) < 2:
        raise DegenerateInput("need at least 2 annotation sets to aggregate")
    one_hot = np.zeros((len(sets), doc_length, len(CANONICAL_LABELS)))
    one_hot[:, :, NA_INDEX] = 1.0
    for i, s in enumerate(sets):
        for start, end, label in s.units():
            one_hot[i, start:end, NA_INDEX] = 0.0
            one_hot[i, start:end, LABEL_INDEX[label]] = 1.0
    return LabelDistribution(one_hot.mean(axis=0), n_annotators=len(sets))


def extract_components(dist: LabelDistribution) -> list[AggregatedComponent]:
    """Maximal runs of equal winning labels become components; NA runs are gaps.

    A component's confidence is the mean per-character winning mass over its
    span; its tie flag is set if any character's maximum was shared.
    """
    codes = dist.label_codes
    conf = dist.confidence
    ties = dist.tie_flags
    out: list[AggregatedComponent] = []
    start = 0
    for i in range(1, len(codes) + 1):
        if i == len(codes) or codes[i] != codes[start]:
            code = int(codes[start])
            if code != NA_INDEX:
                out.append(
                    AggregatedComponent(
                        span=CharSpan(start, i),
                        label=CANONICAL_LABELS[code],
                        confidence=float(conf[start:i].mean()),
                        tie=bool(ties[start:i].any()),
                    )
                )
            start = i
    return out


def _aligned_overlap(a: CharSpan, b: CharSpan, min_overlap: float) -> int:
    """Overlap size when it reaches the threshold share of the shorter span, else 0."""
    ov = a.overlap(b)
    if ov and ov >= min_overlap * min(len(a), len(b)):
        return ov
    return 0


def vote_sentiment(
    component: AggregatedComponent,
    sets: Sequence[AnnotationSet],
    min_overlap: float = 0.5,
) -> tuple[Optional[Sentiment], Optional[float], bool]:
    """Majority sentiment over the annotators' aligned same-label components.

    Each annotator contributes the sentiment of their best-overlapping
    component of the same label (overlap must reach `min_overlap` of the
    shorter span).  An exact tie falls back to Neutral with the tie flag set;
    no aligned vote at all leaves the sentiment absent.
    """
    votes: list[Sentiment] = []
    for s in sets:
        best: Optional[Sentiment] = None
        best_ov = 0
        for comp in s.components:
            if comp.label is not component.label:
                continue
            ov = _aligned_overlap(comp.span, component.span, min_overlap)
            if ov > best_ov:
                best, best_ov = comp.sentiment, ov
        if best is not None:
            votes.append(best)
    if not votes:
        return None, None, False
    counts = Counter(votes)
    top = max(counts.values())
    winners = [s for s in counts if counts[s] == top]
    if len(winners) == 1:
        return winners[0], top / len(votes), False
    return Sentiment.NEUTRAL, top / len(votes), True


def vote_relations(
    sets: Sequence[AnnotationSet],
    components: Sequence[AggregatedComponent],
    min_overlap: float = 0.5,
) -> tuple[list[AggregatedRelation], RelationDiagnostics]:
    """Majority voting over relations after aligning endpoints to aggregated
    components by maximal overlap.

    A relation is emitted when more than half of the annotators assert some
    relation between an aligned (source, target) pair; its kind is the
    majority among the asserting annotators, Support on a tie.
    """
    diag = RelationDiagnostics()

    def align(span: CharSpan) -> Optional[int]:
        best_idx, best_ov = None, 0
        for idx, comp in enumerate(components):
            ov = _aligned_overlap(span, comp.span, min_overlap)
            if ov > best_ov:
                best_idx, best_ov = idx, ov
        return best_idx

    tallies: dict[tuple[int, int], list[RelationKind]] = {}
    for s in sets:
        by_id = {c.id: c for c in s.components}
        seen_pairs: set[tuple[int, int]] = set()
        for rel in s.relations:
            diag.total += 1
            src_comp, tgt_comp = by_id.get(rel.source), by_id.get(rel.target)
            if src_comp is None or tgt_comp is None:
                diag.unaligned += 1
                continue
            src, tgt = align(src_comp.span), align(tgt_comp.span)
            if src is None or tgt is None or src == tgt:
                diag.unaligned += 1
                continue
            if (src, tgt) in seen_pairs:
                continue  # one voice per annotator per pair
            seen_pairs.add((src, tgt))
            tallies.setdefault((src, tgt), []).append(rel.kind)

    out: list[AggregatedRelation] = []
    n = len(sets)
    for (src, tgt) in sorted(tallies):
        kinds = tallies[(src, tgt)]
        if len(kinds) * 2 <= n:  # strictly more than half required
            continue
        support = sum(1 for k in kinds if k is RelationKind.SUPPORT)
        kind = RelationKind.SUPPORT if support * 2 >= len(kinds) else RelationKind.ATTACK
        out.append(AggregatedRelation(src, tgt, kind, len(kinds) / n))
    return out, diag


@dataclass
class AggregatedDocument:
    doc_id: str
    length: int
    n_annotators: int
    components: list[AggregatedComponent]
    relations: list[AggregatedRelation]
    relation_diagnostics: RelationDiagnostics = field(default_factory=RelationDiagnostics)

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "length": self.length,
            "n_annotators": self.n_annotators,
            "components": [c.to_json() for c in self.components],
            "relations": [r.to_json() for r in self.relations],
            "relation_diagnostics": self.relation_diagnostics.to_json(),
        }


def aggregate_document(
    sets: Sequence[AnnotationSet],
    doc_id: str,
    doc_length: int,
    min_overlap: float = 0.5,
    vote_relations_too: bool = True,
) -> AggregatedDocument:
    """Full per-document aggregation: centroid, components, sentiments, relations."""
    dist = centroid(sets, doc_length)
    components = extract_components(dist)
    for comp in components:
        if comp.label in SENTIMENT_BEARING:
            sentiment, conf, tie = vote_sentiment(comp, sets, min_overlap)
            comp.sentiment, comp.sentiment_confidence, comp.sentiment_tie = sentiment, conf, tie
    if vote_relations_too:
        relations, diag = vote_relations(sets, components, min_overlap)
    else:
        relations, diag = [], RelationDiagnostics()
    return AggregatedDocument(doc_id, doc_length, len(sets), components, relations, diag)
