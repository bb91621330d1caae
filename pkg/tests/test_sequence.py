import random

import pytest
from hypothesis import given, settings, strategies as st

from zygote.sequence import (BRIDGE, INTRA, CodedSequence, Hinge, PanelRecord, SequenceFormatError,
                             format_sequence, make_sequence, parse_sequence)


def _random_sequence(seed):
    rng = random.Random(seed)
    k = rng.randint(1, 4)
    h = rng.randint(1, 6)
    n = k * h
    ids = list(range(n))
    rng.shuffle(ids)
    panels = [PanelRecord(ids[i], i // h, i % h + 1, rng.randint(0, 1)) for i in range(n)]
    hinges = [Hinge(rng.randrange(v), v, rng.randrange(4), rng.randrange(4), rng.choice((90, 180, 270)),
                    rng.choice((INTRA, BRIDGE))) for v in range(1, n)]
    foot = [(i // 2, i % 2) for i in range(k)]
    breaks = [(rng.randrange(n), rng.randrange(n)) for _ in range(rng.randint(0, 2))]
    return make_sequence(n, k, foot, panels, hinges, breaks)


@settings(max_examples=100)
@given(st.integers(0, 10**9))
def test_text_round_trip(seed):
    cs = _random_sequence(seed)
    text = format_sequence(cs)
    back = parse_sequence(text)
    assert back == cs
    assert format_sequence(back) == text


def test_exact_layout():
    cs = make_sequence(2, 1, [(0, 0)], [PanelRecord(1, 0, 2, 1), PanelRecord(0, 0, 1, 0)],
                       [Hinge(0, 1, 1, 3, 180, INTRA)])
    assert format_sequence(cs) == ("ZYGOTE v1\nN 2 K 1\nFOOT 0 0\nPANEL 0 0 1 0\nPANEL 1 0 2 1\n"
                                   "HINGE 0 1 1 3 180 P\n")
    assert cs.root == 0 and cs.problems() == []


@pytest.mark.parametrize("text, match", [
    ("", "header"),
    ("ZYGOTE v1\nN x K 1\n", "non-integer"),
    ("ZYGOTE v1\nN 1 K 1\nPANEL 0 0 1 2\n", "bad panel"),
    ("ZYGOTE v1\nN 2 K 1\nHINGE 0 1 4 0 90 P\n", "side"),
    ("ZYGOTE v1\nN 2 K 1\nHINGE 0 1 0 0 90 Q\n", "bad hinge"),
    ("ZYGOTE v1\nN 2 K 1\nWHAT 1\n", "unknown record"),
    ("ZYGOTE v1\nN 2 K 1\nPANEL 0 0 1 0\nPANEL 0 0 2 1\n", "duplicate"),
    ("ZYGOTE v1\nN 2 K 1\nHINGE 0 5 0 0 90 P\n", "unknown panel"),
])
def test_parse_errors(text, match):
    with pytest.raises(SequenceFormatError, match=match):
        parse_sequence(text)


def test_problems_flags_shared_side_and_cycle():
    panels = [PanelRecord(i, 0, i + 1, i % 2) for i in range(3)]
    cs = make_sequence(3, 1, [(0, 0)], panels, [Hinge(0, 1, 0, 2, 180, INTRA), Hinge(0, 2, 0, 2, 180, INTRA)])
    assert any("hosts two hinges" in p for p in cs.problems())
    cs = CodedSequence(3, 1, ((0, 0),), tuple(panels), (Hinge(0, 1, 0, 2, 180, INTRA), Hinge(1, 0, 1, 3, 180, INTRA)))
    assert any("spanning tree" in p for p in cs.problems())
