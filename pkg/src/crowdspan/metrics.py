"""Inter-rater agreement statistics.

Character-level nominal metrics (percentage agreement, Fleiss-style multi-pi,
Krippendorff's nominal alpha) plus Krippendorff's unitized alpha for
annotators who segment and label a continuum.  A score that cannot be
computed is returned as an explicit `Undefined` marker, never coerced to 0.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Optional, Sequence, Union

import numpy as np

from .argmodel import (
    COMPONENT_LABELS,
    CANONICAL_LABELS,
    LABEL_INDEX,
    AnnotationSet,
    CharSpan,
    ComponentLabel,
)
from .errors import DegenerateInput
from .standoff import AnnotationBundle


@dataclass(frozen=True)
class Undefined:
    reason: str

    def __repr__(self) -> str:  # keeps test failure output readable
        return f"Undefined({self.reason!r})"


Score = Union[float, Undefined]


def is_defined(score: Score) -> bool:
    return not isinstance(score, Undefined)


def score_to_json(score: Score):
    if isinstance(score, Undefined):
        return {"undefined": score.reason}
    return score


# ---------------------------------------------------------------------------
# Nominal (per-character) metrics
# ---------------------------------------------------------------------------

MISSING = -1


class LabelMatrix:
    """Rectangular (annotators x items) matrix of category codes.

    Cells hold indices into `categories`; `MISSING` (-1) marks absent values,
    which only Krippendorff's alpha and the pooled corpus statistics make use
    of.  At least two annotators are required.
    """

    def __init__(self, codes: np.ndarray, categories: Sequence[Hashable]):
        codes = np.asarray(codes, dtype=np.int64)
        if codes.ndim != 2:
            raise ValueError("label matrix must be 2-dimensional (annotators x items)")
        if codes.shape[0] < 2:
            raise DegenerateInput("need at least 2 annotators")
        if codes.size and codes.max() >= len(categories):
            raise ValueError("code outside the category set")
        self.codes = codes
        self.categories = tuple(categories)

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[Sequence[Hashable]],
        categories: Optional[Sequence[Hashable]] = None,
        missing: Optional[Hashable] = None,
    ) -> "LabelMatrix":
        """Build from per-annotator label sequences; `missing` marks absent cells."""
        if categories is None:
            seen: dict[Hashable, None] = {}
            for row in rows:
                for value in row:
                    if value != missing or missing is None:
                        seen.setdefault(value, None)
            categories = list(seen)
        index = {c: k for k, c in enumerate(categories)}
        n_items = len(rows[0]) if rows else 0
        codes = np.full((len(rows), n_items), MISSING, dtype=np.int64)
        for i, row in enumerate(rows):
            if len(row) != n_items:
                raise ValueError("ragged label matrix")
            for j, value in enumerate(row):
                if missing is not None and value == missing:
                    continue
                codes[i, j] = index[value]
        return cls(codes, categories)

    @property
    def n_annotators(self) -> int:
        return self.codes.shape[0]

    @property
    def n_items(self) -> int:
        return self.codes.shape[1]


def _category_counts(codes: np.ndarray, n_categories: int) -> np.ndarray:
    """Per-item counts of each category, ignoring missing cells: (items, K)."""
    return np.stack([(codes == k).sum(axis=0) for k in range(n_categories)], axis=1)


class NominalAccumulator:
    """Pools per-item category counts so agreement can be computed across
    many documents with differing annotator rosters.

    Counts are accumulated as integers (grouped by the number of values an
    item carries) and the final ratios are taken in exact rational
    arithmetic, so analytically clean instances come out bit-exact.
    """

    def __init__(self, n_categories: int):
        self.k = n_categories
        # m_u -> [n_items, sum of agreeing ordered-ish pair counts, sum of disagreements]
        self.by_m: dict[int, list[int]] = {}
        self.category_totals = np.zeros(n_categories, dtype=np.int64)

    def add_codes(self, codes: np.ndarray) -> None:
        counts = _category_counts(np.asarray(codes), self.k)
        m_u = counts.sum(axis=1)
        keep = m_u >= 2
        if not keep.any():
            return
        counts, m_u = counts[keep], m_u[keep]
        agree = (counts * (counts - 1)).sum(axis=1)
        disagree = (counts * (m_u[:, None] - counts)).sum(axis=1)
        for m in np.unique(m_u):
            mask = m_u == m
            slot = self.by_m.setdefault(int(m), [0, 0, 0])
            slot[0] += int(mask.sum())
            slot[1] += int(agree[mask].sum())
            slot[2] += int(disagree[mask].sum())
        self.category_totals += counts.sum(axis=0)

    # -- finalizers (exact rational, floated at the end) --------------------

    @property
    def n_items(self) -> int:
        return sum(slot[0] for slot in self.by_m.values())

    @property
    def n_values(self) -> int:
        return sum(m * slot[0] for m, slot in self.by_m.items())

    def _p_bar(self) -> Fraction:
        total = sum(Fraction(slot[1], m * (m - 1)) for m, slot in self.by_m.items())
        return total / self.n_items

    def percentage(self) -> Score:
        if self.n_items == 0:
            return Undefined("no item carries two or more values")
        return float(self._p_bar())

    def multi_pi(self) -> Score:
        if self.n_items == 0:
            return Undefined("no item carries two or more values")
        n = self.n_values
        p_e = sum(Fraction(int(c), n) ** 2 for c in self.category_totals)
        if p_e == 1:
            return Undefined("all annotators use a single category everywhere")
        return float((self._p_bar() - p_e) / (1 - p_e))

    def alpha(self) -> Score:
        n = self.n_values
        if n == 0:
            return Undefined("no pairable values")
        d_o = sum(Fraction(slot[2], m - 1) for m, slot in self.by_m.items()) / n
        d_e = Fraction(int((self.category_totals * (n - self.category_totals)).sum()), n * (n - 1))
        if d_e == 0:
            return Undefined("expected disagreement is zero")
        return float(1 - d_o / d_e)


def percentage_agreement(matrix: LabelMatrix) -> Score:
    """Mean over items of (agreeing annotator pairs / total pairs)."""
    acc = NominalAccumulator(len(matrix.categories))
    acc.add_codes(matrix.codes)
    return acc.percentage()


def multi_pi(matrix: LabelMatrix) -> Score:
    """Multi-rater pi: (observed - expected pair agreement) / (1 - expected),
    with the expectation from pooled category proportions."""
    acc = NominalAccumulator(len(matrix.categories))
    acc.add_codes(matrix.codes)
    return acc.multi_pi()


def krippendorff_alpha(matrix: LabelMatrix) -> Score:
    """Nominal Krippendorff's alpha with the small-sample n(n-1) correction.

    Items with fewer than two values are skipped, so partially missing
    matrices are fine.
    """
    acc = NominalAccumulator(len(matrix.categories))
    acc.add_codes(matrix.codes)
    return acc.alpha()


def binarize(codes: np.ndarray, target_code: int) -> np.ndarray:
    """One-vs-rest view of a code matrix: target -> 1, others -> 0, missing kept."""
    out = np.where(codes == target_code, 1, 0)
    out[codes == MISSING] = MISSING
    return out


# ---------------------------------------------------------------------------
# Unitized alpha
# ---------------------------------------------------------------------------

Unit = tuple[int, int]  # (start, end) in continuum coordinates
SpanUnits = Sequence[tuple[int, int, Hashable]]  # (start, end, category)


def _cat_name(cat: Hashable) -> str:
    return cat.value if isinstance(cat, ComponentLabel) else str(cat)

CLOSED_FORM = "closed-form"
RANDOMIZATION = "randomization"


@dataclass
class AlphaUResult:
    value: Score
    per_category: dict[Hashable, Score]
    observed: dict[Hashable, float]
    expected: dict[Hashable, float]
    method: str
    n_annotators: int
    continuum_length: int
    expected_se: Optional[float] = None  # randomization only

    def to_json(self) -> dict:
        return {
            "value": score_to_json(self.value),
            "per_category": {_cat_name(c): score_to_json(s) for c, s in self.per_category.items()},
            "observed": {_cat_name(c): v for c, v in self.observed.items()},
            "expected": {_cat_name(c): v for c, v in self.expected.items()},
            "method": self.method,
            "n_annotators": self.n_annotators,
            "continuum_length": self.continuum_length,
            "expected_se": self.expected_se,
        }


def _pair_distance_sum(units_a: list[Unit], units_b: list[Unit]) -> int:
    """Observed squared-difference mass of annotator a's units against b's
    partition: intersecting same-category units contribute the squared
    boundary offsets, a unit lying wholly inside b's gap contributes its
    squared length."""
    total = 0
    for (bu, eu) in units_a:
        hit = False
        for (bv, ev) in units_b:
            if bv < eu and bu < ev:  # intersect
                total += (bu - bv) ** 2 + (eu - ev) ** 2
                hit = True
            elif bv >= eu:
                break
        if not hit:
            total += (eu - bu) ** 2
    return total


@functools.lru_cache(maxsize=200_000)
def _expected_unit_pair(ell: int, a: int, b: int) -> float:
    """E[delta^2 * 1(intersect)] for two units of lengths a and b placed
    independently and uniformly on a continuum of length ell."""
    d = np.arange(-a + 1, b, dtype=np.float64)
    count = np.minimum(ell - a, d + ell - b) - np.maximum(0.0, d) + 1.0
    count = np.maximum(count, 0.0)
    delta = d**2 + (d + a - b) ** 2
    return float((count * delta).sum()) / ((ell - a + 1) * (ell - b + 1))


@functools.lru_cache(maxsize=200_000)
def _prob_clear_of_all(ell: int, a: int, other_lengths: tuple[int, ...]) -> float:
    """P(a unit of length a intersects none of the independently placed units
    with the given lengths), averaged over its own uniform placement."""
    if not other_lengths:
        return 1.0
    xs = np.arange(ell - a + 1, dtype=np.float64)
    prob = np.ones_like(xs)
    for b in other_lengths:
        clear = np.maximum(0.0, xs - b + 1) + np.maximum(0.0, ell - b - xs - a + 1)
        prob *= clear / (ell - b + 1)
    return float(prob.mean())


def _expected_pair_sum(units_a: list[Unit], units_b: list[Unit], ell: int) -> float:
    lengths_b = tuple(sorted(e - b for b, e in units_b))
    total = 0.0
    for (bu, eu) in units_a:
        a = eu - bu
        for lb in lengths_b:
            total += _expected_unit_pair(ell, a, lb)
        total += a * a * _prob_clear_of_all(ell, a, lengths_b)
    return total


def _group_units(
    annotator_units: Sequence[SpanUnits], ell: int, categories: Optional[Sequence[Hashable]]
) -> tuple[list[Hashable], list[dict[Hashable, list[Unit]]]]:
    if categories is None:
        seen: dict[Hashable, None] = {}
        for units in annotator_units:
            for _, _, cat in units:
                seen.setdefault(cat, None)
        categories = list(seen)
    grouped: list[dict[Hashable, list[Unit]]] = []
    for units in annotator_units:
        per_cat: dict[Hashable, list[Unit]] = {c: [] for c in categories}
        for start, end, cat in units:
            if not (0 <= start < end <= ell):
                raise ValueError(f"unit [{start},{end}) outside continuum of length {ell}")
            if cat in per_cat:
                per_cat[cat].append((start, end))
        for lst in per_cat.values():
            lst.sort()
            for (b1, e1), (b2, _) in zip(lst, lst[1:]):
                if b2 < e1:
                    raise ValueError("one annotator's units of a category overlap")
        grouped.append(per_cat)
    return list(categories), grouped


def unitized_alpha(
    annotator_units: Sequence[SpanUnits],
    continuum_length: int,
    categories: Optional[Sequence[Hashable]] = None,
    method: str = CLOSED_FORM,
    resamples: int = 10_000,
    seed: int = 0,
) -> AlphaUResult:
    """Krippendorff's unitized alpha over a character continuum.

    Each annotator contributes categorized units (spans) and implicit gaps.
    Observed disagreement compares every ordered annotator pair's
    intersecting sections; expected disagreement is its expectation when
    every unit is independently relocated uniformly at random (lengths
    preserved), either in closed form or as a seeded randomization estimate.
    The headline value combines categories weighted by their expected
    (pairable) disagreement; per-category scores are reported alongside.
    """
    m = len(annotator_units)
    if m < 2:
        raise DegenerateInput("need at least 2 annotators")
    if continuum_length <= 0:
        raise DegenerateInput("empty continuum")
    if method not in (CLOSED_FORM, RANDOMIZATION):
        raise ValueError(f"unknown method {method!r}")
    ell = continuum_length
    cats, grouped = _group_units(annotator_units, ell, categories)

    norm = m * (m - 1) * float(ell) ** 2
    observed: dict[Hashable, float] = {}
    expected: dict[Hashable, float] = {}
    active = [c for c in cats if any(g[c] for g in grouped)]

    for cat in active:
        do_sum = 0
        for i in range(m):
            for j in range(m):
                if i != j:
                    do_sum += _pair_distance_sum(grouped[i][cat], grouped[j][cat])
        observed[cat] = do_sum / norm

    expected_se: Optional[float] = None
    if method == CLOSED_FORM:
        for cat in active:
            de_sum = 0.0
            for i in range(m):
                for j in range(m):
                    if i != j:
                        de_sum += _expected_pair_sum(grouped[i][cat], grouped[j][cat], ell)
            expected[cat] = de_sum / norm
    else:
        rng = np.random.default_rng(seed)
        total_samples = np.zeros(resamples)
        for cat in active:
            positions: list[list[np.ndarray]] = []
            lengths: list[list[int]] = []
            for g in grouped:
                lens = [e - b for b, e in g[cat]]
                lengths.append(lens)
                positions.append(
                    [rng.integers(0, ell - ln + 1, size=resamples) for ln in lens]
                )
            samples = np.zeros(resamples)
            for i in range(m):
                for j in range(m):
                    if i == j:
                        continue
                    for a, xu in zip(lengths[i], positions[i]):
                        clear = np.ones(resamples, dtype=bool)
                        for b, xv in zip(lengths[j], positions[j]):
                            d = xu.astype(np.int64) - xv
                            inter = (d > -a) & (d < b)
                            delta = d * d + (d + (a - b)) ** 2
                            samples += np.where(inter, delta, 0)
                            clear &= ~inter
                        samples += np.where(clear, a * a, 0)
            samples /= norm
            expected[cat] = float(samples.mean())
            total_samples += samples
        if active:
            expected_se = float(total_samples.std(ddof=1) / np.sqrt(resamples))

    per_category: dict[Hashable, Score] = {}
    for cat in cats:
        if cat not in observed:
            per_category[cat] = Undefined("no units of this category")
        elif expected[cat] == 0.0:
            per_category[cat] = Undefined("expected disagreement is zero")
        else:
            per_category[cat] = 1.0 - observed[cat] / expected[cat]

    if not active:
        value: Score = Undefined("no annotator produced a categorized unit")
    else:
        de_total = sum(expected.values())
        if de_total == 0.0:
            value = Undefined("expected disagreement is zero")
        else:
            value = 1.0 - sum(observed.values()) / de_total

    return AlphaUResult(
        value=value,
        per_category=per_category,
        observed=observed,
        expected=expected,
        method=method,
        n_annotators=m,
        continuum_length=ell,
        expected_se=expected_se,
    )


def clip_units(units: Iterable[tuple[int, int, Hashable]], window: CharSpan) -> list[tuple[int, int, Hashable]]:
    """Restrict units to a sub-continuum and shift them to window coordinates."""
    out = []
    for start, end, cat in units:
        s, e = max(start, window.start), min(end, window.end)
        if s < e:
            out.append((s - window.start, e - window.start, cat))
    return out


def set_units(annotation_set: AnnotationSet) -> list[tuple[int, int, ComponentLabel]]:
    return annotation_set.units()


def alpha_u_for_sets(
    sets: Sequence[AnnotationSet],
    continuum: CharSpan,
    **opts,
) -> AlphaUResult:
    """Unitized alpha for annotation sets restricted to a sub-continuum."""
    units = [clip_units(s.units(), continuum) for s in sets]
    return unitized_alpha(units, len(continuum), categories=list(COMPONENT_LABELS), **opts)


# ---------------------------------------------------------------------------
# Agreement reports
# ---------------------------------------------------------------------------


@dataclass
class AgreementReport:
    doc_id: str
    scope: str  # "document" | "sentence"
    sentence_index: Optional[int]
    continuum_length: int
    n_annotators: int
    overall: dict[str, Score]
    per_category: dict[str, dict[str, Score]]  # label value -> metric -> score

    @property
    def alpha_u(self) -> Score:
        return self.overall["alpha_u"]

    def to_json(self) -> dict:
        out = {
            "doc_id": self.doc_id,
            "scope": self.scope,
            "continuum_length": self.continuum_length,
            "n_annotators": self.n_annotators,
            "overall": {k: score_to_json(v) for k, v in self.overall.items()},
            "per_category": {
                lab: {k: score_to_json(v) for k, v in scores.items()}
                for lab, scores in self.per_category.items()
            },
        }
        if self.sentence_index is not None:
            out["sentence_index"] = self.sentence_index
        return out


def char_code_matrix(sets: Sequence[AnnotationSet], doc_length: int) -> np.ndarray:
    """(annotators x characters) matrix of canonical label codes."""
    codes = np.full((len(sets), doc_length), LABEL_INDEX[ComponentLabel.NA], dtype=np.int64)
    for i, s in enumerate(sets):
        for start, end, label in s.units():
            codes[i, start:end] = LABEL_INDEX[label]
    return codes


def _scores_from_codes(codes: np.ndarray, n_categories: int) -> tuple[Score, Score, Score]:
    acc = NominalAccumulator(n_categories)
    acc.add_codes(codes)
    return acc.percentage(), acc.multi_pi(), acc.alpha()


def _build_report(
    sets: Sequence[AnnotationSet],
    continuum: CharSpan,
    doc_id: str,
    scope: str,
    sentence_index: Optional[int],
    alpha_opts: dict,
) -> AgreementReport:
    codes = char_code_matrix(sets, continuum.end)[:, continuum.start:continuum.end]
    pct, pi, alpha = _scores_from_codes(codes, len(CANONICAL_LABELS))
    au = alpha_u_for_sets(sets, continuum, **alpha_opts)

    per_category: dict[str, dict[str, Score]] = {}
    for label in COMPONENT_LABELS:
        bin_codes = binarize(codes, LABEL_INDEX[label])
        b_pct, b_pi, b_alpha = _scores_from_codes(bin_codes, 2)
        per_category[label.value] = {
            "percentage": b_pct,
            "multi_pi": b_pi,
            "alpha": b_alpha,
            "alpha_u": au.per_category[label],
        }

    overall = {"percentage": pct, "multi_pi": pi, "alpha": alpha, "alpha_u": au.value}
    return AgreementReport(
        doc_id=doc_id,
        scope=scope,
        sentence_index=sentence_index,
        continuum_length=len(continuum),
        n_annotators=len(sets),
        overall=overall,
        per_category=per_category,
    )


def document_report(
    bundle: AnnotationBundle, include_gold: bool = False, **alpha_opts
) -> AgreementReport:
    """Whole-document agreement across the bundle's annotators."""
    sets = list(bundle.sets)
    if include_gold and bundle.gold is not None:
        sets.append(bundle.gold)
    if len(sets) < 2:
        raise DegenerateInput(f"document {bundle.doc_id} has fewer than 2 annotation sets")
    return _build_report(
        sets, CharSpan(0, bundle.document.length), bundle.doc_id, "document", None, alpha_opts
    )


def sentence_reports(
    bundle: AnnotationBundle,
    sentence_spans: Optional[Sequence[CharSpan]] = None,
    **alpha_opts,
) -> list[AgreementReport]:
    """Per-sentence agreement; spans default to the document's own segmentation."""
    spans = sentence_spans if sentence_spans is not None else bundle.document.sentence_spans
    if spans is None:
        raise ValueError("no sentence spans available; segment the document first")
    if len(bundle.sets) < 2:
        raise DegenerateInput(f"document {bundle.doc_id} has fewer than 2 annotation sets")
    return [
        _build_report(list(bundle.sets), span, bundle.doc_id, "sentence", idx, alpha_opts)
        for idx, span in enumerate(spans)
    ]


def report(
    bundle: AnnotationBundle,
    scope: str = "document",
    sentence_spans: Optional[Sequence[CharSpan]] = None,
    **alpha_opts,
):
    """Agreement report(s) for one bundle at document or sentence scope."""
    if scope == "document":
        return document_report(bundle, **alpha_opts)
    if scope in ("sentence", "sentences", "per-sentence"):
        return sentence_reports(bundle, sentence_spans, **alpha_opts)
    raise ValueError(f"unknown scope {scope!r}")
