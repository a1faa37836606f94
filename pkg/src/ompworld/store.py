"""Append-only JSONL store for all pipeline artifacts under one run directory.

Layout:
    <run_dir>/journal/          content-addressed LLM responses
    <run_dir>/problems.jsonl    ProblemRecords
    <run_dir>/harnesses.jsonl   HarnessBundles keyed by problem_id
    <run_dir>/candidates.jsonl  CandidateCodes
    <run_dir>/tsan_outcomes.jsonl / caliper_profiles.jsonl
    <run_dir>/cots.jsonl        all traces, accepted and rejected
    <run_dir>/audit.jsonl       shortfalls, dedupes, drops
"""
from __future__ import annotations

import json
import threading
from pathlib import Path

from .gateway import Journal


class RunStore:
    def __init__(self, run_dir):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.journal = Journal(self.run_dir / "journal")
        self._lock = threading.Lock()

    def path(self, name: str) -> Path:
        return self.run_dir / f"{name}.jsonl"

    def append(self, name: str, record: dict):
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            with open(self.path(name), "a", encoding="utf-8") as f:
                f.write(line + "\n")

    def read(self, name: str) -> list:
        path = self.path(name)
        if not path.exists():
            return []
        with open(path, encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]

    def existing_ids(self, name: str, key: str = "id") -> set:
        return {row[key] for row in self.read(name) if key in row}

    def audit(self, stage: str, event: str, **details):
        self.append("audit", {"stage": stage, "event": event, **details})
