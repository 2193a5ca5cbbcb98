import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from charspot.charset import class_of
from charspot.detections import CharDetection, TextInstance
from charspot.geometry import Polygon, RotatedBox, iou
from charspot.lexicon import LexiconError, lexicon_correct
from charspot.postprocess import group_characters, nms, order_characters
from conftest import random_box
from oracles import brute_force_nms


def char(x, y, label, w=8, h=10, theta=0.0, score=0.99):
    return CharDetection(RotatedBox(x, y, w, h, theta), score, class_of(label) if isinstance(label, str) else label)


def test_nms_single_and_duplicate():
    b = RotatedBox(10, 10, 5, 5)
    assert nms([b], [0.9]) == [0]
    assert nms([b, b], [0.96, 0.99]) == [1]
    assert nms([], []) == []


def test_nms_tie_prefers_earlier_index():
    b = RotatedBox(10, 10, 5, 5)
    assert nms([b, b, b], [0.9, 0.9, 0.9]) == [0]


def test_nms_matches_brute_force(rng):
    for _ in range(20):
        boxes = [random_box(rng, span=80, size=(5, 30)) for _ in range(50)]
        scores = rng.random(50)
        assert nms(boxes, scores) == brute_force_nms(boxes, list(scores), iou)


def test_nms_properties(rng):
    boxes = [random_box(rng, span=60, size=(5, 30)) for _ in range(80)]
    scores = rng.random(80)
    keep = nms(boxes, scores, 0.3)
    again = nms([boxes[k] for k in keep], scores[keep], 0.3)
    assert [keep[i] for i in again] == keep
    for i in keep:
        for j in keep:
            if i < j:
                assert iou(boxes[i], boxes[j]) <= 0.3 + 1e-12


def test_nms_rejects_nan_scores():
    with pytest.raises(ValueError):
        nms([RotatedBox(0, 0, 1, 1)], [float("nan")])


def test_group_basic():
    inst = RotatedBox(20, 10, 40, 12)
    chars = [char(10, 10, "C"), char(20, 10, "A"), char(30, 10, "T"), char(200, 200, "X")]
    g = group_characters([inst], chars)
    assert len(g.instances[0].chars) == 3
    assert len(g.dropped) == 1


def test_group_prefers_larger_overlap():
    a = RotatedBox(5, 5, 10, 10)     # (0,0)-(10,10)
    b = RotatedBox(15, 5, 10, 10)    # (10,0)-(20,10)
    c = CharDetection(RotatedBox(9.25, 5, 2.5, 10), 0.99, 0)  # x in [8, 10.5]
    # IoU with a: 20 / (100 + 25 - 20) = 2/10.5; with b: 5 / (100 + 25 - 5) = 0.5/12
    assert iou(c.box, a) == pytest.approx(2 / 10.5)
    assert iou(c.box, b) == pytest.approx(0.5 / 12)
    g = group_characters([a, b], [c])
    assert len(g.instances[0].chars) == 1 and not g.instances[1].chars


def test_group_with_polygon_instances():
    poly = Polygon([(0, 0), (40, 0), (40, 20), (0, 20)])
    g = group_characters([poly], [char(10, 10, "A"), char(30, 10, "B")])
    assert len(g.instances[0].chars) == 2


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 100)), max_size=20))
def test_group_conserves_characters(centres):
    insts = [RotatedBox(25, 25, 50, 50), RotatedBox(75, 75, 40, 40, 0.3)]
    chars = [char(x, y, 0) for x, y in centres]
    g = group_characters(insts, chars)
    assert sum(len(t.chars) for t in g.instances) + len(g.dropped) == len(chars)


def test_order_horizontal():
    inst = TextInstance(RotatedBox(20, 10, 40, 12), chars=[char(30, 10, "T"), char(10, 10, "C"), char(20, 10, "A")])
    assert order_characters(inst).transcription == "CAT"


def test_order_single_and_empty():
    assert order_characters(TextInstance(RotatedBox(0, 0, 10, 10), chars=[char(0, 0, "Q")])).transcription == "Q"
    assert order_characters(TextInstance(RotatedBox(0, 0, 10, 10))).transcription == ""


def test_order_rotated_quarter_pi():
    # axis (cos pi/4, sin pi/4); chars at t = -15, -5, 5, 15 along it project to those t values
    t = [5, -15, 15, -5]
    labels = ["C", "W", "D", "O"]
    d = math.sqrt(0.5)
    chars = [char(50 + ti * d, 50 + ti * d, lab, theta=math.pi / 4) for ti, lab in zip(t, labels)]
    inst = TextInstance(RotatedBox(50, 50, 44, 12, math.pi / 4), chars=chars)
    assert order_characters(inst).transcription == "WOCD"


def test_order_reads_left_to_right_whatever_the_angle():
    # same physical word, box angle given as theta and as theta - pi (normalized identical)
    for theta in (0.3, -0.3, 1.2, -1.2):
        c, s = math.cos(theta), math.sin(theta)
        chars = [char(50 + k * 12 * c, 50 + k * 12 * s, "ABC"[k], theta=theta) for k in (2, 0, 1)]
        inst = TextInstance(RotatedBox(50 + 12 * c, 50 + 12 * s, 40, 12, theta), chars=chars)
        assert order_characters(inst).transcription == "ABC"


def test_order_vertical_runs_top_to_bottom():
    chars = [char(10, y, lab) for y, lab in ((30, "C"), (10, "A"), (20, "B"))]
    for theta in (math.pi / 2, -math.pi / 2 + 1e-9):
        inst = TextInstance(RotatedBox(10, 20, 36, 10, theta), chars=list(chars))
        assert order_characters(inst).transcription == "ABC"


def test_order_polygon_uses_principal_axis():
    poly = Polygon([(0, 0), (60, 0), (60, 20), (0, 20)])
    chars = [char(50, 12, "C"), char(10, 8, "A"), char(30, 10, "B")]
    assert order_characters(TextInstance(poly, chars=chars)).transcription == "ABC"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 100), st.integers(0, 67)), min_size=1, max_size=12),
       st.floats(-math.pi / 2, math.pi / 2))
def test_order_is_permutation(items, theta):
    chars = [char(x, y, lab) for x, y, lab in items]
    inst = order_characters(TextInstance(RotatedBox(50, 50, 100, 20, theta), chars=list(chars)))
    assert Counter(c.label for c in inst.chars) == Counter(c.label for c in chars)
    assert len(inst.transcription) == len(chars)


def test_lexicon_correct():
    assert lexicon_correct("H0USE", None, "N").text == "H0USE"
    c = lexicon_correct("H0USE", ["HOUSE", "MOUSE"], "S")
    assert (c.text, c.distance) == ("HOUSE", 1)
    assert lexicon_correct("A", ["C", "B"], "G").text == "B"
    assert lexicon_correct("house", ["HOUSE"], "W") == ("HOUSE", 0, "HOUSE")
    with pytest.raises(LexiconError):
        lexicon_correct("A", [], "S")
    with pytest.raises(LexiconError):
        lexicon_correct("A", ["A"], "X")


def test_lexicon_pruning_keeps_ties():
    # the length-difference shortcut must not skip an equally distant, alphabetically earlier word
    assert lexicon_correct("AB", ["ZB", "A"], "G").text == "A"
    assert lexicon_correct("AB", ["ABCD", "XB"], "G").text == "XB"
