"""brat standoff parsing, writing and campaign loading."""

import pytest
from hypothesis import given, strategies as st

from crowdspan.argmodel import (
    AnnotationSet,
    CharSpan,
    ComponentAnnotation,
    ComponentLabel,
    RelationAnnotation,
    RelationKind,
    Sentiment,
)
from crowdspan.standoff import (
    AnnotationBundle,
    Document,
    OffsetError,
    ParseError,
    ParseIssue,
    UnknownLabelError,
    load_campaign,
    parse_ann,
    write_ann,
    write_campaign_files,
)

DOC = Document("d1", "舒适的环境和周到的服务，房间设施也很齐全。")


def test_parse_component_line():
    s = parse_ann("T1\tClaim 0 6\t舒适的环境和", DOC, "a1")
    (c,) = s.components
    assert c.label is ComponentLabel.CLAIM
    assert (c.span.start, c.span.end) == (0, 6)


def test_parse_relation_line():
    ann = (
        "T1\tClaim 0 6\t舒适的环境和\n"
        "T2\tPremise 6 12\t周到的服务，\n"
        "R1\tSupport Arg1:T2 Arg2:T1\n"
    )
    s = parse_ann(ann, DOC, "a1")
    (r,) = s.relations
    assert r.kind is RelationKind.SUPPORT and (r.source, r.target) == ("T2", "T1")


def test_parse_sentiment_attribute():
    ann = "T1\tClaim 0 6\t舒适的环境和\nA1\tSentiment T1 Positive\n"
    s = parse_ann(ann, DOC, "a1")
    assert s.components[0].sentiment is Sentiment.POSITIVE


def test_parse_empty_file():
    s = parse_ann("", DOC, "a1")
    assert s.components == () and s.relations == ()


def test_parse_tolerates_bom_and_crlf():
    ann = "﻿T1\tClaim 0 6\t舒适的环境和\r\nA1\tSentiment T1 Positive\r\n"
    s = parse_ann(ann, DOC, "a1")
    assert s.components[0].sentiment is Sentiment.POSITIVE


def test_surface_mismatch_is_offset_error():
    with pytest.raises(OffsetError):
        parse_ann("T1\tClaim 0 6\t完全不同的文字", DOC, "a1")


def test_span_out_of_range():
    with pytest.raises(OffsetError):
        parse_ann("T1\tClaim 0 99\t舒适", DOC, "a1")


def test_unknown_component_label():
    with pytest.raises(UnknownLabelError):
        parse_ann("T1\tGadget 0 6\t舒适的环境和", DOC, "a1")


def test_unknown_relation_kind():
    ann = "T1\tClaim 0 6\t舒适的环境和\nT2\tPremise 6 12\t周到的服务，\nR1\tElaborates Arg1:T2 Arg2:T1"
    with pytest.raises(UnknownLabelError):
        parse_ann(ann, DOC, "a1")


def test_malformed_line_reports_line_number():
    with pytest.raises(ParseError) as exc:
        parse_ann("T1\tClaim 0 6\t舒适的环境和\nT2\tbroken", DOC, "a1")
    assert exc.value.line_no == 2


def test_unsupported_lines_are_collected_not_dropped():
    ann = (
        "T1\tClaim 0 6\t舒适的环境和\n"
        "#1\tAnnotatorNotes T1\tsome note\n"
        "E1\tEvent:T1\n"
        "A2\tConfidence T1 High\n"
    )
    issues: list[ParseIssue] = []
    s = parse_ann(ann, DOC, "a1", issues)
    assert len(s.components) == 1
    assert sorted(i.line_no for i in issues) == [2, 3, 4]


def build_set():
    comps = (
        ComponentAnnotation("T9", CharSpan(0, 6), ComponentLabel.CLAIM, Sentiment.POSITIVE),
        ComponentAnnotation("T3", CharSpan(6, 12), ComponentLabel.PREMISE),
    )
    rels = (RelationAnnotation("R7", RelationKind.SUPPORT, "T3", "T9"),)
    return AnnotationSet("a1", "d1", comps, rels)


def canonical(s: AnnotationSet):
    comps = sorted((c.span.start, c.span.end, c.label, c.sentiment) for c in s.components)
    key = {c.id: (c.span.start, c.span.end) for c in s.components}
    rels = sorted((key[r.source], key[r.target], r.kind) for r in s.relations)
    return comps, rels


def test_round_trip_with_sentiment_and_relation():
    s = build_set()
    text = write_ann(s, DOC)
    back = parse_ann(text, DOC, "a1")
    assert canonical(back) == canonical(s)


def test_write_empty_set():
    assert write_ann(AnnotationSet("a1", "d1"), DOC) == ""


def test_write_single_component_quotes_doc_slice():
    s = AnnotationSet(
        "a1", "d1", (ComponentAnnotation("T1", CharSpan(0, 6), ComponentLabel.PSIC),)
    )
    line = write_ann(s, DOC).strip()
    assert line == "T1\tPSIC 0 6\t舒适的环境和"


LABELS = [ComponentLabel.MAJOR_CLAIM, ComponentLabel.CLAIM, ComponentLabel.PREMISE, ComponentLabel.PSIC]


@st.composite
def random_set(draw):
    n = draw(st.integers(0, 4))
    comps = []
    cursor = 0
    for i in range(n):
        start = cursor + draw(st.integers(0, 3))
        end = start + draw(st.integers(1, 5))
        if end > len(DOC.text):
            break
        label = draw(st.sampled_from(LABELS))
        sentiment = (
            draw(st.sampled_from(list(Sentiment)))
            if label in (ComponentLabel.MAJOR_CLAIM, ComponentLabel.CLAIM)
            else None
        )
        comps.append(ComponentAnnotation(f"T{i+1}", CharSpan(start, end), label, sentiment))
        cursor = end
    rels = []
    claims = [c for c in comps if c.label is ComponentLabel.CLAIM]
    premises = [c for c in comps if c.label is ComponentLabel.PREMISE]
    if claims and premises and draw(st.booleans()):
        rels.append(RelationAnnotation("R1", RelationKind.ATTACK, premises[0].id, claims[0].id))
    return AnnotationSet("a1", "d1", tuple(comps), tuple(rels))


@given(random_set())
def test_round_trip_property(s):
    assert canonical(parse_ann(write_ann(s, DOC), DOC, "a1")) == canonical(s)


# ---------------------------------------------------------------------------
# Campaign loading
# ---------------------------------------------------------------------------


def campaign_fixture(tmp_path, extra_ann=None):
    text = "服务员很好，会主动帮我们拿行李。"
    doc = Document("d0001", text)
    claim = ComponentAnnotation("T1", CharSpan(0, 5), ComponentLabel.CLAIM, Sentiment.POSITIVE)
    premise = ComponentAnnotation("T2", CharSpan(6, 15), ComponentLabel.PREMISE)
    rel = RelationAnnotation("R1", RelationKind.SUPPORT, "T2", "T1")
    good = AnnotationSet("a1", "d0001", (claim, premise), (rel,))
    bundle = AnnotationBundle(doc, (good,), gold=AnnotationSet("gold", "d0001", (claim,)))
    write_campaign_files(bundle, tmp_path)
    root = tmp_path / "d0001"
    (root / "a2.ann").write_text(
        "T1\tClaim 0 5\t服务员很好\nA1\tSentiment T1 Positive\n", encoding="utf-8"
    )
    if extra_ann:
        (root / extra_ann[0]).write_text(extra_ann[1], encoding="utf-8")
    return tmp_path


def test_load_campaign_happy_path(tmp_path):
    root = campaign_fixture(tmp_path)
    bundles, report = load_campaign(root)
    (b,) = bundles
    assert [s.annotator_id for s in b.sets] == ["a1", "a2"]
    assert b.gold is not None and b.gold.annotator_id == "gold"
    assert report.dropped_sets == [] and report.skipped_documents == []


def test_load_campaign_drops_illegal_set(tmp_path):
    bad = (
        "T1\tClaim 0 5\t服务员很好\n"
        "A1\tSentiment T1 Positive\n"
        "T2\tClaim 6 15\t会主动帮我们拿行李\n"
        "A2\tSentiment T2 Neutral\n"
        "R1\tSupport Arg1:T1 Arg2:T2\n"
    )
    root = campaign_fixture(tmp_path, extra_ann=("a3.ann", bad))
    bundles, report = load_campaign(root)
    (b,) = bundles
    assert [s.annotator_id for s in b.sets] == ["a1", "a2"]
    assert len(report.dropped_sets) == 1
    assert report.dropped_sets[0]["annotator_id"] == "a3"


def test_load_campaign_gold_only_doc(tmp_path):
    root = campaign_fixture(tmp_path)
    doc2 = tmp_path / "d0002"
    doc2.mkdir()
    (doc2 / "d0002.txt").write_text("空调也是坏的。", encoding="utf-8")
    (doc2 / "gold.ann").write_text("T1\tClaim 0 6\t空调也是坏的\nA1\tSentiment T1 Negative\n", encoding="utf-8")
    bundles, report = load_campaign(root)
    assert [b.doc_id for b in bundles] == ["d0001", "d0002"]
    assert bundles[1].sets == () and bundles[1].gold is not None
    assert report.gold_only_documents == ["d0002"]


def test_load_campaign_deterministic_order(tmp_path):
    for doc_id in ("d0002", "d0001"):
        d = tmp_path / doc_id
        d.mkdir()
        (d / f"{doc_id}.txt").write_text("有一台很老很小的黑白电视。", encoding="utf-8")
        for ann in ("b.ann", "a.ann"):
            (d / ann).write_text("T1\tPSIC 0 12\t有一台很老很小的黑白电视\n", encoding="utf-8")
    bundles, _ = load_campaign(tmp_path)
    assert [b.doc_id for b in bundles] == ["d0001", "d0002"]
    assert [s.annotator_id for s in bundles[0].sets] == ["a", "b"]
