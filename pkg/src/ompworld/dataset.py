"""Assemble training tuples and export completion-only SFT datasets."""
from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path

import yaml

from . import prompts
from .errors import FormatError, TargetExceedsAvailable
from .types import (
    CoTRecord, TrainTuple, content_hash, estimate_tokens,
    race_report_from_dict,
)

log = logging.getLogger(__name__)

MAX_SEQUENCE_TOKENS = 16384
EXPORT_FORMATS = ("chat-jsonl",)


def assemble(store, tool: str) -> list:
    """Join accepted traces with candidates and outcomes into TrainTuples."""
    candidates = {row["id"]: row for row in store.read("candidates")}
    tuples = []
    for row in store.read("cots"):
        if row.get("tool") != tool:
            continue
        cot = CoTRecord(**row["cot"])
        if cot.validation_status != "accepted":
            store.audit("dataset", "rejected_cot_skipped", tool=tool,
                        candidate_ids=row["candidate_ids"], status=cot.validation_status)
            continue
        cand_rows = [candidates.get(cid) for cid in row["candidate_ids"]]
        if any(c is None for c in cand_rows):
            store.audit("dataset", "missing_candidate", tool=tool, candidate_ids=row["candidate_ids"])
            continue
        if tool == "caliper" and len({c["problem_id"] for c in cand_rows}) != 1:
            store.audit("dataset", "cross_problem_pair", candidate_ids=row["candidate_ids"])
            continue
        try:
            tuples.append(
                TrainTuple(
                    tool=tool,
                    tuple_id=content_hash(json.dumps([tool, row["candidate_ids"], cot.conditioned_outcome_hash])),
                    problem_id=cand_rows[0]["problem_id"],
                    candidate_ids=tuple(row["candidate_ids"]),
                    candidate_sources=tuple(c["source"] for c in cand_rows),
                    cot=cot,
                    outcome_payload=row["outcome"],
                )
            )
        except ValueError as exc:
            store.audit("dataset", "invariant_violation", error=str(exc))
    _report_balance(store, tool, tuples)
    return tuples


def _report_balance(store, tool, tuples):
    if tool == "tsan":
        racy = sum(1 for t in tuples if tuple_label(t) == "racy")
        store.audit("dataset", "label_balance", tool=tool,
                    racy=racy, race_free=len(tuples) - racy)
    else:
        counts = {}
        for t in tuples:
            for tc in t.outcome_payload.get("thread_counts", []):
                counts[str(tc)] = counts.get(str(tc), 0) + 1
        store.audit("dataset", "thread_count_coverage", tool=tool, counts=counts)


def tuple_label(t: TrainTuple) -> str:
    """Balance label: race presence for tsan, single class for caliper."""
    if t.tool == "tsan":
        report = race_report_from_dict(t.outcome_payload)
        return "racy" if report.race_present else "race_free"
    return "pair"


def build_user_prompt(t: TrainTuple) -> str:
    if t.tool == "tsan":
        return prompts.WORLD_MODEL_RACE_PROMPT.format(generated_cc=t.candidate_sources[0])
    thread_counts = ", ".join(str(tc) for tc in t.outcome_payload.get("thread_counts", []))
    return prompts.WORLD_MODEL_CALIPER_PROMPT.format(
        generated_cc_a=t.candidate_sources[0], generated_cc_b=t.candidate_sources[1],
        thread_counts=thread_counts,
    )


def build_assistant_text(t: TrainTuple) -> str:
    return f"<think>\n{t.cot.think_text}\n</think>\n<answer>\n{t.cot.answer_text}\n</answer>"


def export_sft(tuples, out_path, format_spec: str = "chat-jsonl",
               max_seq_tokens: int = MAX_SEQUENCE_TOKENS,
               chars_per_token: float = 4.0, audit=None) -> int:
    """Write chat-format records with a completion-only supervision mask.

    Returns the number of records written; over-length records are dropped
    with an audit entry.
    """
    if format_spec not in EXPORT_FORMATS:
        raise FormatError(f"unknown format_spec {format_spec!r}")
    tools = {t.tool for t in tuples}
    if len(tools) > 1:
        raise ValueError(f"tuples must be homogeneous in tool, got {sorted(tools)}")

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    written = 0
    with open(out_path, "w", encoding="utf-8") as f:
        for t in tuples:
            user = build_user_prompt(t)
            assistant = build_assistant_text(t)
            total = estimate_tokens(user, chars_per_token) + estimate_tokens(assistant, chars_per_token)
            if total > max_seq_tokens:
                if audit:
                    audit("dataset", "overlength_dropped", tuple_id=t.tuple_id, est_tokens=total)
                continue
            record = {
                "messages": [
                    {"role": "user", "content": user},
                    {"role": "assistant", "content": assistant},
                ],
                "mask": [False, True],
                "tool": t.tool,
                "tuple_id": t.tuple_id,
                "provenance": {
                    "problem_id": t.problem_id,
                    "candidate_ids": list(t.candidate_ids),
                    "teacher_model": t.cot.teacher_model,
                    "outcome_hash": t.cot.conditioned_outcome_hash,
                },
            }
            f.write(json.dumps(record, sort_keys=True) + "\n")
            written += 1
    return written


def _bucket(key: str, salt: str = "split") -> float:
    digest = hashlib.sha256(f"{salt}:{key}".encode("utf-8")).hexdigest()
    return int(digest[:12], 16) / float(16 ** 12)


def split(tuples, val_fraction: float = 0.05, seed: str = "split"):
    """Deterministic problem-grouped train/val split."""
    if not (0 <= val_fraction < 1):
        raise ValueError("val_fraction must be in [0, 1)")
    train, val = [], []
    for t in tuples:
        (val if _bucket(t.problem_id, seed) < val_fraction else train).append(t)
    return train, val


def subsample(tuples, target_sizes):
    """Nested label-balanced subsets by deterministic hash order."""
    targets = list(target_sizes)
    if targets != sorted(targets):
        raise ValueError("target sizes must be ascending")
    if targets and targets[-1] > len(tuples):
        raise TargetExceedsAvailable(f"largest target {targets[-1]} exceeds {len(tuples)} tuples")

    by_label = {}
    for t in tuples:
        by_label.setdefault(tuple_label(t), []).append(t)
    for group in by_label.values():
        group.sort(key=lambda t: _bucket(t.tuple_id, "subsample"))

    # one global order interleaving labels by fractional in-group position;
    # every target is then a prefix, so subsets nest and stay label-balanced
    order = []
    for label, group in sorted(by_label.items()):
        for i, t in enumerate(group):
            order.append(((i + 1) / len(group), _bucket(t.tuple_id, "subsample"), label, t))
    order.sort(key=lambda item: item[:3])
    ranked = [item[3] for item in order]
    return [ranked[:target] for target in targets]


TRAINING_CONFIG = {
    "sequence_length": 16384,
    "precision": "bfloat16",
    "fsdp_sharding_strategy": "full-shard",
    "gradient_checkpointing": True,
    "num_epochs": 1,
    "effective_batch_size": 32,
    "learning_rate": 1.0e-5,
    "lr_scheduler": "cosine",
    "warmup_ratio": 0.05,
    "weight_decay": 1.0e-4,
    "adamw_beta1": 0.9,
    "adamw_beta2": 0.95,
    "validation_split": 0.05,
    "completion_only_loss": True,
}


def emit_training_config(out_path) -> dict:
    """Write the SFT hyperparameter config for an external trainer."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        yaml.safe_dump(TRAINING_CONFIG, f, sort_keys=True)
    return dict(TRAINING_CONFIG)


def load_training_config(path) -> dict:
    with open(path, encoding="utf-8") as f:
        return yaml.safe_load(f)
