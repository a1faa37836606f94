"""Dataset assembly, SFT export masks, splits, nested subsets, train config."""
import dataclasses
import json

import pytest

from ompworld.dataset import (
    TRAINING_CONFIG, assemble, emit_training_config, export_sft,
    load_training_config, split, subsample, tuple_label,
)
from ompworld.errors import FormatError, TargetExceedsAvailable
from ompworld.store import RunStore
from ompworld.types import CoTRecord, TrainTuple

THINK = "Careful step-by-step reasoning about the shared accesses. " * 30
COT = CoTRecord(THINK, '[{"race_type": "read_write", "code_locations": ["generated.cc:9"]}]',
                "teacher", "abc123", "accepted")


def _tuple(i, tool="tsan", racy=True, problem=None, source="double f();"):
    payload = ({"findings": [{"race_type": "read_write",
                              "code_locations": [["generated.cc", 9]]}]}
               if racy else {"findings": []})
    cand_ids = (f"c{i}",) if tool == "tsan" else (f"c{i}a", f"c{i}b")
    return TrainTuple(
        tool=tool, tuple_id=f"t{i}", problem_id=problem or f"p{i}",
        candidate_ids=cand_ids, candidate_sources=(source,) * len(cand_ids),
        cot=COT, outcome_payload=payload,
    )


def test_assemble_joins_and_audits_rejections(tmp_path):
    store = RunStore(tmp_path)
    store.append("candidates", {"id": "c1", "problem_id": "p1", "source": "double f();"})
    store.append("cots", {"tool": "tsan", "candidate_ids": ["c1"],
                          "cot": dataclasses.asdict(COT),
                          "outcome": {"findings": []}})
    rejected = dataclasses.asdict(COT) | {"validation_status": "rejected_leakage"}
    store.append("cots", {"tool": "tsan", "candidate_ids": ["c1"],
                          "cot": rejected, "outcome": {"findings": []}})
    store.append("cots", {"tool": "tsan", "candidate_ids": ["missing"],
                          "cot": dataclasses.asdict(COT), "outcome": {"findings": []}})

    tuples = assemble(store, "tsan")
    assert len(tuples) == 1
    assert tuples[0].problem_id == "p1"
    events = [row["event"] for row in store.read("audit")]
    assert "rejected_cot_skipped" in events and "missing_candidate" in events


def test_tuple_label():
    assert tuple_label(_tuple(1, racy=True)) == "racy"
    assert tuple_label(_tuple(2, racy=False)) == "race_free"
    assert tuple_label(_tuple(3, tool="caliper")) == "pair"


def test_export_sft_masks_and_shape(tmp_path):
    out = tmp_path / "sft.jsonl"
    n = export_sft([_tuple(i) for i in range(3)], out)
    assert n == 3
    records = [json.loads(line) for line in out.read_text().splitlines()]
    for rec in records:
        assert rec["mask"] == [False, True]
        assert [m["role"] for m in rec["messages"]] == ["user", "assistant"]
        assert "<think>" in rec["messages"][1]["content"]
        assert rec["messages"][1]["content"].rstrip().endswith("</answer>")
        assert rec["provenance"]["outcome_hash"] == "abc123"


def test_export_sft_drops_overlength(tmp_path):
    events = []
    big = _tuple(0, source="x" * (16384 * 4 + 100))
    n = export_sft([big, _tuple(1)], tmp_path / "sft.jsonl",
                   audit=lambda stage, event, **kw: events.append(event))
    assert n == 1
    assert events == ["overlength_dropped"]


def test_export_sft_rejects_unknown_format(tmp_path):
    with pytest.raises(FormatError):
        export_sft([], tmp_path / "x.jsonl", format_spec="parquet")


def test_export_sft_rejects_mixed_tools(tmp_path):
    with pytest.raises(ValueError):
        export_sft([_tuple(1), _tuple(2, tool="caliper")], tmp_path / "x.jsonl")


def test_split_deterministic_and_problem_grouped():
    tuples = [_tuple(i, problem=f"p{i % 40}") for i in range(400)]
    train1, val1 = split(tuples, val_fraction=0.2)
    train2, val2 = split(tuples, val_fraction=0.2)
    assert [t.tuple_id for t in train1] == [t.tuple_id for t in train2]
    assert [t.tuple_id for t in val1] == [t.tuple_id for t in val2]
    assert val1, "expected a non-empty validation split at 20%"
    assert {t.problem_id for t in train1} & {t.problem_id for t in val1} == set()
    assert len(train1) + len(val1) == 400


def test_split_zero_fraction_and_validation():
    tuples = [_tuple(i) for i in range(10)]
    train, val = split(tuples, val_fraction=0.0)
    assert val == [] and len(train) == 10
    with pytest.raises(ValueError):
        split(tuples, val_fraction=1.0)


def test_subsample_nested_and_balanced():
    tuples = [_tuple(i, racy=(i % 2 == 0)) for i in range(40)]
    small, mid, big = subsample(tuples, [6, 13, 27])
    assert [len(s) for s in (small, mid, big)] == [6, 13, 27]
    small_ids = {t.tuple_id for t in small}
    mid_ids = {t.tuple_id for t in mid}
    assert small_ids <= mid_ids <= {t.tuple_id for t in big}
    for subset in (small, mid, big):
        racy = sum(1 for t in subset if tuple_label(t) == "racy")
        assert abs(racy - (len(subset) - racy)) <= 1


def test_subsample_errors():
    tuples = [_tuple(i) for i in range(5)]
    with pytest.raises(TargetExceedsAvailable):
        subsample(tuples, [6])
    with pytest.raises(ValueError):
        subsample(tuples, [3, 2])


def test_training_config_round_trip(tmp_path):
    path = tmp_path / "train.yaml"
    emitted = emit_training_config(path)
    loaded = load_training_config(path)
    assert loaded == emitted == TRAINING_CONFIG
    assert loaded["learning_rate"] == 1.0e-5
    assert loaded["effective_batch_size"] == 32
    assert loaded["sequence_length"] == 16384
    assert loaded["validation_split"] == 0.05
    assert loaded["completion_only_loss"] is True
