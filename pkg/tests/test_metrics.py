"""Nominal agreement metrics against brute-force pair-enumeration oracles."""

import itertools
import math

import numpy as np
import pytest

from crowdspan.errors import DegenerateInput
from crowdspan.metrics import (
    LabelMatrix,
    Undefined,
    is_defined,
    krippendorff_alpha,
    multi_pi,
    percentage_agreement,
)

MISSING = "?"


# ---------------------------------------------------------------------------
# Independent oracles: literal definitions, explicit pair enumeration.
# ---------------------------------------------------------------------------


def item_values(rows):
    """Per-item lists of the values present (missing cells removed)."""
    items = []
    for j in range(len(rows[0])):
        items.append([row[j] for row in rows if row[j] != MISSING])
    return items


def oracle_percentage(rows):
    shares = []
    for values in item_values(rows):
        if len(values) < 2:
            continue
        pairs = list(itertools.combinations(values, 2))
        shares.append(sum(1 for a, b in pairs if a == b) / len(pairs))
    return sum(shares) / len(shares)


def oracle_multi_pi(rows):
    p_bar = oracle_percentage(rows)
    pooled = [v for values in item_values(rows) if len(values) >= 2 for v in values]
    p_e = sum((pooled.count(c) / len(pooled)) ** 2 for c in set(pooled))
    if p_e == 1.0:
        return None
    return (p_bar - p_e) / (1.0 - p_e)


def oracle_alpha(rows):
    units = [values for values in item_values(rows) if len(values) >= 2]
    pooled = [v for values in units for v in values]
    n = len(pooled)
    if n == 0:
        return None
    d_o = 0.0
    for values in units:
        disagreements = sum(1 for a, b in itertools.permutations(values, 2) if a != b)
        d_o += disagreements / (len(values) - 1)
    d_o /= n
    d_e = sum(
        1 for p, q in itertools.permutations(range(n), 2) if pooled[p] != pooled[q]
    ) / (n * (n - 1))
    if d_e == 0.0:
        return None
    return 1.0 - d_o / d_e


# ---------------------------------------------------------------------------
# Worked instance, frozen from the oracles above.
# ---------------------------------------------------------------------------

WORKED = [["A", "B"], ["A", "B"], ["B", "B"]]  # 3 annotators x 2 items


def test_worked_instance_exact():
    m = LabelMatrix.from_rows(WORKED)
    assert percentage_agreement(m) == pytest.approx(2 / 3, abs=0)
    assert multi_pi(m) == pytest.approx(0.25, abs=0)
    assert krippendorff_alpha(m) == pytest.approx(0.375, abs=0)
    # and the oracles agree with the frozen values
    assert oracle_percentage(WORKED) == pytest.approx(2 / 3, abs=1e-15)
    assert oracle_multi_pi(WORKED) == pytest.approx(0.25, abs=1e-15)
    assert oracle_alpha(WORKED) == pytest.approx(0.375, abs=1e-15)


def test_identical_annotations_are_perfect():
    rows = [["A", "B", "C", "A"]] * 4
    m = LabelMatrix.from_rows(rows)
    assert percentage_agreement(m) == 1.0
    assert multi_pi(m) == 1.0
    assert krippendorff_alpha(m) == 1.0


def test_total_disagreement_two_annotators():
    m = LabelMatrix.from_rows([["A", "A", "A"], ["B", "B", "B"]])
    assert percentage_agreement(m) == 0.0


def test_single_item_two_annotators_disagreeing():
    # The n(n-1)-corrected formula lands exactly on zero here: one unit with
    # values {A, B} has observed disagreement 1 and expected disagreement 1.
    rows = [["A"], ["B"]]
    assert oracle_alpha(rows) == pytest.approx(0.0, abs=1e-15)
    assert krippendorff_alpha(LabelMatrix.from_rows(rows)) == pytest.approx(0.0, abs=0)


def test_crossed_disagreement_goes_negative():
    rows = [["A", "B"], ["B", "A"]]
    assert oracle_alpha(rows) == pytest.approx(-0.5, abs=1e-15)
    alpha = krippendorff_alpha(LabelMatrix.from_rows(rows))
    assert alpha == pytest.approx(-0.5, abs=1e-12)
    assert alpha < 0


def test_undefined_on_single_category():
    m = LabelMatrix.from_rows([["A", "A"], ["A", "A"]])
    assert percentage_agreement(m) == 1.0
    assert isinstance(multi_pi(m), Undefined)
    assert isinstance(krippendorff_alpha(m), Undefined)


def test_requires_two_annotators():
    with pytest.raises(DegenerateInput):
        LabelMatrix.from_rows([["A", "B"]])


def test_missing_cells_skipped_by_alpha():
    rows = [
        ["A", "A", MISSING, "B"],
        ["A", MISSING, "B", "B"],
        [MISSING, "A", "B", MISSING],
    ]
    m = LabelMatrix.from_rows(rows, missing=MISSING)
    assert krippendorff_alpha(m) == pytest.approx(oracle_alpha(rows), abs=1e-12)
    assert percentage_agreement(m) == pytest.approx(oracle_percentage(rows), abs=1e-12)
    assert multi_pi(m) == pytest.approx(oracle_multi_pi(rows), abs=1e-12)


def random_instance(rng):
    m = rng.integers(2, 6)
    n = rng.integers(1, 21)
    k = rng.integers(2, 6)
    cats = [chr(ord("A") + i) for i in range(k)]
    return [[cats[rng.integers(0, k)] for _ in range(n)] for _ in range(m)]


def test_matches_oracle_on_random_instances():
    rng = np.random.default_rng(20240811)
    for _ in range(200):
        rows = random_instance(rng)
        m = LabelMatrix.from_rows(rows, categories=sorted({v for r in rows for v in r}))
        assert percentage_agreement(m) == pytest.approx(oracle_percentage(rows), abs=1e-12)
        pi, o_pi = multi_pi(m), oracle_multi_pi(rows)
        if o_pi is None:
            assert isinstance(pi, Undefined)
        else:
            assert pi == pytest.approx(o_pi, abs=1e-12)
        alpha, o_alpha = krippendorff_alpha(m), oracle_alpha(rows)
        if o_alpha is None:
            assert isinstance(alpha, Undefined)
        else:
            assert alpha == pytest.approx(o_alpha, abs=1e-12)


def test_annotator_permutation_invariance():
    rng = np.random.default_rng(7)
    rows = random_instance(rng)
    cats = sorted({v for r in rows for v in r})
    base = LabelMatrix.from_rows(rows, categories=cats)
    perm = LabelMatrix.from_rows(rows[::-1], categories=cats)
    assert percentage_agreement(base) == percentage_agreement(perm)
    assert multi_pi(base) == multi_pi(perm)
    assert krippendorff_alpha(base) == krippendorff_alpha(perm)


def test_random_labels_have_near_zero_pi():
    rng = np.random.default_rng(99)
    rows = [[("A", "B")[rng.integers(0, 2)] for _ in range(10_000)] for _ in range(3)]
    pi = multi_pi(LabelMatrix.from_rows(rows))
    assert is_defined(pi) and abs(pi) < 0.05


def test_chance_corrected_at_most_one():
    rng = np.random.default_rng(5)
    for _ in range(50):
        rows = random_instance(rng)
        m = LabelMatrix.from_rows(rows)
        for score in (percentage_agreement(m), multi_pi(m), krippendorff_alpha(m)):
            if is_defined(score):
                assert score <= 1.0 + 1e-12
        assert percentage_agreement(m) >= 0.0
