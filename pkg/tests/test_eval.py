"""Eval harness arithmetic: accuracies, gap buckets, FLOPs, pair preparation."""
import random

import pytest

from ompworld.answers import render_caliper_answer, render_race_answer
from ompworld.errors import InsufficientSolutions
from ompworld.evaluation import (
    FlopsFormula, RaceEvalItem, RankEvalItem, RankingCell, bucket_by_gap,
    estimate_flops, eval_pair_ranking, eval_race_presence,
    prepare_pareval_pairs, response_length_stats,
)
from ompworld.gateway import ModelEndpoint
from ompworld.reports import gap_bucket_csv, race_accuracy_table, ranking_table
from ompworld.types import CaliperProfile, RaceFinding, RaceReport

from conftest import make_gateway

MODEL = ModelEndpoint(name="eval-model")
RACY_ANSWER = render_race_answer(
    RaceReport(findings=(RaceFinding("read_write", (("generated.cc", 9),)),)))

ITEMS = [
    RaceEvalItem("prog_racy", "double f() { return 1; }", True),
    RaceEvalItem("prog_clean", "double g() { return 2; }", False),
]


def _race_reply(predict_race):
    body = RACY_ANSWER if predict_race else "[]"
    return f"<think>\nreasoning\n</think>\n<answer>\n{body}\n</answer>"


def test_race_presence_perfect(tmp_path):
    def transport(ep, messages, params):
        return _race_reply("return 1" in messages[-1][1])

    report = eval_race_presence(make_gateway(tmp_path, transport), MODEL, ITEMS, n_samples=4)
    assert report.mean_accuracy == 100.0
    assert report.majority_accuracy == 100.0
    assert report.n_items == 2 and report.n_samples == 4


def test_race_presence_twelve_of_sixteen(tmp_path):
    calls = {}

    def transport(ep, messages, params):
        prompt = messages[-1][1]
        i = calls[prompt] = calls.get(prompt, -1) + 1
        correct = "return 1" in prompt
        return _race_reply(correct if i < 12 else not correct)

    report = eval_race_presence(make_gateway(tmp_path, transport), MODEL, ITEMS, n_samples=16)
    assert report.mean_accuracy == 75.0
    for row in report.per_item:
        assert row["sample_accuracy"] == 0.75
    assert report.majority_accuracy == 100.0  # 12 of 16 is still a majority


def test_race_presence_unparseable_counts_incorrect(tmp_path):
    def transport(ep, messages, params):
        return "<think>\nhm\n</think>\n<answer>\nno structured verdict here\n</answer>"

    report = eval_race_presence(make_gateway(tmp_path, transport), MODEL, ITEMS, n_samples=2)
    assert report.mean_accuracy == 0.0
    assert all(row["unparseable"] == 2 for row in report.per_item)


def _measurement_reply(pct_a, pct_b, thread_counts):
    def block(pct):
        profile = CaliperProfile(
            entries={("region_2_5", tc): pct for tc in thread_counts},
            thread_counts=tuple(thread_counts),
        )
        return f"<measurements>\n{render_caliper_answer(profile)}\n</measurements>"
    return (f"<think>\nreasoning\n</think>\n<answer>\n"
            f"{block(pct_a)}\n{block(pct_b)}\n</answer>")


def _rank_items(n, gap_for=lambda i: 20.0):
    items = []
    for i in range(n):
        gap = gap_for(i)
        items.append(RankEvalItem(
            problem_id=f"p{i}", code_a=f"// A{i}", code_b=f"// B{i}",
            truth={tc: "a_higher" for tc in (4, 8, 16, 32)},
            gap={tc: gap for tc in (4, 8, 16, 32)},
        ))
    return items


def test_pair_ranking_perfect_and_antisymmetric(tmp_path):
    def transport(ep, messages, params):
        # first presented code is A exactly when the prompt shows A's comment first
        prompt = messages[-1][1]
        a_first = prompt.index("// A") < prompt.index("// B")
        return _measurement_reply(80.0 if a_first else 60.0,
                                  60.0 if a_first else 80.0, (4, 8, 16, 32))

    report = eval_pair_ranking(make_gateway(tmp_path, transport), MODEL,
                               _rank_items(3), (4, 8, 16, 32))
    assert report.average_accuracy == 100.0
    assert all(v == 100.0 for v in report.per_thread_accuracy.values())
    assert len(report.cells) == 3 * 2 * 4
    assert {c.presentation for c in report.cells} == {"ab", "ba"}


def test_pair_ranking_random_near_half(tmp_path):
    rng = random.Random(7)

    def transport(ep, messages, params):
        hi, lo = (80.0, 60.0) if rng.random() < 0.5 else (60.0, 80.0)
        return _measurement_reply(hi, lo, (4, 8, 16, 32))

    report = eval_pair_ranking(make_gateway(tmp_path, transport), MODEL,
                               _rank_items(50), (4, 8, 16, 32))
    assert len(report.cells) == 50 * 2 * 4 >= 400
    assert abs(report.average_accuracy - 50.0) <= 5.0


def test_pair_ranking_ties_excluded(tmp_path):
    items = [RankEvalItem("p0", "// A", "// B",
                          truth={4: "tie", 16: "a_higher"},
                          gap={4: 0.2, 16: 25.0})]

    def transport(ep, messages, params):
        return _measurement_reply(80.0, 60.0, (4, 16))

    report = eval_pair_ranking(make_gateway(tmp_path, transport), MODEL, items, (4, 16))
    assert report.denominators == {4: 0, 16: 2}
    assert report.tie_cells == 2
    assert report.per_thread_accuracy[4] == 0.0


def test_bucket_by_gap_partitions_cells():
    cells = [RankingCell("p", 4, "ab", "a_higher", "a_higher", gap)
             for gap in (5.0, 15.0, 25.0, 35.0, 45.0, 120.0)]
    buckets = bucket_by_gap(cells)
    assert [b["count"] for b in buckets] == [1, 1, 1, 1, 2]
    assert sum(b["count"] for b in buckets) == len(cells)
    assert buckets[-1]["bucket"] == "[40,inf)"
    assert all(b["accuracy"] == 100.0 for b in buckets)
    with pytest.raises(ValueError):
        bucket_by_gap(cells, bucket_edges=(10.0, 0.0))


def test_estimate_flops():
    assert estimate_flops(7e9, 1000, 0) == 0.0
    assert estimate_flops(7e9, 1000, 100) == 2.0 * 7e9 * 100
    quad = FlopsFormula(params_factor=2.0, attn_factor=2.0)
    assert estimate_flops(1.0, 10, 3, quad) == 2.0 * 3 + 2.0 * (10 * 3 + 3)
    with pytest.raises(ValueError):
        estimate_flops(-1, 0, 0)


def test_response_length_stats():
    assert response_length_stats([]) == {"mean": 0.0, "median": 0.0, "max": 0, "count": 0}
    stats = response_length_stats(["x" * 40, "x" * 80], chars_per_token=4.0)
    assert stats == {"mean": 15.0, "median": 15.0, "max": 20, "count": 2}


def _profile_const(pct, counts=(4, 16)):
    return CaliperProfile(entries={("region_2_5", tc): pct for tc in counts},
                          thread_counts=tuple(counts))


def test_prepare_pareval_pairs():
    solutions = {"p1": [("s1", "// s1"), ("s2", "// s2"), ("s3", "// s3")]}
    profiles = {"s1": _profile_const(90.0), "s2": _profile_const(60.0),
                "s3": _profile_const(60.5)}
    items = prepare_pareval_pairs(solutions, profiles)
    assert len(items) == 3  # all unordered pairs of three solutions
    by_pair = {(it.code_a, it.code_b): it for it in items}
    assert by_pair[("// s1", "// s2")].truth == {4: "a_higher", 16: "a_higher"}
    assert by_pair[("// s2", "// s3")].truth == {4: "tie", 16: "tie"}  # gap 0.5 < 1.0
    assert by_pair[("// s1", "// s2")].gap[4] == pytest.approx(30.0)


def test_prepare_pareval_pairs_insufficient():
    with pytest.raises(InsufficientSolutions):
        prepare_pareval_pairs({"p1": [("s1", "// s1")]}, {"s1": _profile_const(50.0)})


def test_report_shapes(tmp_path):
    table = race_accuracy_table([("model-a", 75.0, 100.0, 2, 16)])
    assert "Mean Acc" in table and "75.0%" in table

    cells = [RankingCell("p", tc, "ab", "a_higher", "a_higher", 20.0) for tc in (4, 16)]
    from ompworld.evaluation import RankingReport
    rank = RankingReport(per_thread_accuracy={4: 100.0, 16: 50.0}, average_accuracy=75.0,
                         cells=cells, tie_cells=0, denominators={4: 2, 16: 2})
    table = ranking_table("model-a", rank)
    assert "4 threads" in table and "Average" in table and "75.0%" in table

    csv_path = tmp_path / "gaps.csv"
    gap_bucket_csv(csv_path, bucket_by_gap(cells))
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "bucket,low,high,count,accuracy_pct"
    assert len(lines) == 6  # header + five buckets
