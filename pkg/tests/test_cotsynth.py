"""Hindsight trace synthesis: validation screens, hash conditioning, pairing."""
import itertools
import random

import pytest

from ompworld.answers import render_caliper_answer, render_race_answer
from ompworld.cotsynth import (
    pair_candidates, synth_caliper_pair_cot, synth_race_cot, validate_cot,
)
from ompworld.errors import InsufficientCandidates
from ompworld.gateway import ModelEndpoint
from ompworld.types import (
    CandidateCode, CaliperProfile, RaceFinding, RaceReport, content_hash,
)

from conftest import make_gateway

THINK = ("I will reason about the loop body accesses step by step. " * 40)
REPORT = RaceReport(findings=(RaceFinding("read_write", (("generated.cc", 9),)),))
CANDIDATE = CandidateCode.create("p1", "double f() { return 0; }", "m", "racy", 1)
TEACHER = ModelEndpoint(name="teacher-model")


def test_validate_cot_accepted():
    expected = render_race_answer(REPORT)
    assert validate_cot(THINK, f"Verdict:\n{expected}\n", expected) == "accepted"


def test_validate_cot_rejected_format():
    expected = render_race_answer(REPORT)
    assert validate_cot("", expected, expected) == "rejected_format"
    assert validate_cot("too short", expected, expected) == "rejected_format"
    assert validate_cot(THINK, "", expected) == "rejected_format"


def test_validate_cot_rejected_leakage():
    expected = render_race_answer(REPORT)
    leaky = THINK + " This matches the provided outcome exactly."
    assert validate_cot(leaky, expected, expected) == "rejected_leakage"


def test_validate_cot_rejected_answer_mismatch():
    expected = render_race_answer(REPORT)
    assert validate_cot(THINK, "[]", expected) == "rejected_answer_mismatch"


def test_validate_cot_ordered_chunks():
    assert validate_cot(THINK, "first\nsecond", ["first", "second"]) == "accepted"
    assert validate_cot(THINK, "second\nfirst", ["first", "second"]) == "rejected_answer_mismatch"


def _echo_teacher(think=THINK):
    def transport(ep, messages, params):
        prompt = messages[-1][1]
        # the conditioning outcome is embedded verbatim between answer tags
        import re
        m = re.search(r"<answer>\n(.*?)\n</answer>", prompt, re.DOTALL)
        answer = m.group(1) if m else "[]"
        return f"<think>\n{think}\n</think>\n<answer>\n{answer}\n</answer>"
    return transport


def test_synth_race_cot_accepted_hash_match(tmp_path):
    gw = make_gateway(tmp_path, _echo_teacher())
    record = synth_race_cot(gw, CANDIDATE, REPORT, TEACHER)
    assert record.validation_status == "accepted"
    assert record.conditioned_outcome_hash == content_hash(render_race_answer(REPORT))
    assert render_race_answer(REPORT) in record.answer_text


def test_synth_race_cot_keeps_last_rejected(tmp_path):
    def transport(ep, messages, params):
        return f"<think>\n{THINK}\n</think>\n<answer>\nnothing to report\n</answer>"

    gw = make_gateway(tmp_path, transport)
    record = synth_race_cot(gw, CANDIDATE, REPORT, TEACHER)
    assert record.validation_status == "rejected_answer_mismatch"
    assert record.answer_text == "nothing to report"


def test_synth_race_cot_no_hindsight_skips_answer_check(tmp_path):
    def transport(ep, messages, params):
        assert render_race_answer(REPORT) not in messages[-1][1]  # outcome withheld
        return f"<think>\n{THINK}\n</think>\n<answer>\n[]\n</answer>"

    gw = make_gateway(tmp_path, transport)
    record = synth_race_cot(gw, CANDIDATE, REPORT, TEACHER, hindsight=False)
    assert record.validation_status == "accepted"


def _profile(base):
    return CaliperProfile(
        entries={("region_2_5", tc): base - i * 5 for i, tc in enumerate((4, 16))},
        thread_counts=(4, 16),
    )


def test_synth_caliper_pair_cot(tmp_path):
    a = CandidateCode.create("p1", "double f() { return 1; }", "m", "inefficient", 1)
    b = CandidateCode.create("p1", "double f() { return 2; }", "m", "inefficient", 2)
    pa, pb = _profile(90.0), _profile(60.0)

    def transport(ep, messages, params):
        return (f"<think>\n{THINK}\n</think>\n<answer>\n"
                f"{render_caliper_answer(pa)}\n{render_caliper_answer(pb)}\n</answer>")

    gw = make_gateway(tmp_path, transport)
    record = synth_caliper_pair_cot(gw, a, b, pa, pb, TEACHER)
    assert record.validation_status == "accepted"
    expected_hash = content_hash(render_caliper_answer(pa) + "\n" + render_caliper_answer(pb))
    assert record.conditioned_outcome_hash == expected_hash


def test_synth_caliper_pair_rejects_cross_problem(tmp_path):
    a = CandidateCode.create("p1", "double f() { return 1; }", "m", "inefficient", 1)
    b = CandidateCode.create("p2", "double f() { return 2; }", "m", "inefficient", 1)
    with pytest.raises(ValueError):
        synth_caliper_pair_cot(None, a, b, _profile(90), _profile(60), TEACHER)


def test_pair_candidates_counts():
    assert len(pair_candidates(["a", "b"])) == 1
    assert len(pair_candidates(list("abcd"))) == 6
    assert len(pair_candidates(list("abcd"), pairing_budget=3)) == 3


def test_pair_candidates_distinct_unordered():
    pairs = pair_candidates(list("abcde"), rng=random.Random(1))
    unordered = [frozenset(p) for p in pairs]
    assert len(set(unordered)) == len(pairs) == 10
    assert set(unordered) == {frozenset(c) for c in itertools.combinations("abcde", 2)}


def test_pair_candidates_orientation_varies():
    orientations = set()
    for seed in range(20):
        for a, b in pair_candidates(list("ab"), rng=random.Random(seed)):
            orientations.add((a, b))
    assert orientations == {("a", "b"), ("b", "a")}


def test_pair_candidates_insufficient():
    with pytest.raises(InsufficientCandidates):
        pair_candidates(["only"])
