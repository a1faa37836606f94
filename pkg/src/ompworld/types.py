"""Canonical domain records shared by every pipeline stage.

All records are frozen dataclasses (safe to share across worker threads) and
serialize to one-line JSON dicts carrying a ``schema`` tag.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, asdict
from typing import Optional

SCHEMA_VERSION = "v1"

RACE_TYPES = ("read_write", "write_write")
STRATEGY_MODES = ("racy", "inefficient")
COT_STATUSES = (
    "accepted",
    "rejected_answer_mismatch",
    "rejected_leakage",
    "rejected_format",
)


def content_hash(text: str) -> str:
    """Stable short identifier for a piece of text."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


_LINE_COMMENT = re.compile(r"//[^\n]*")
_BLOCK_COMMENT = re.compile(r"/\*.*?\*/", re.DOTALL)
_WS = re.compile(r"\s+")


def normalize_source(source: str) -> str:
    """Strip C/C++ comments and collapse whitespace for dedupe hashing."""
    text = _BLOCK_COMMENT.sub(" ", source)
    text = _LINE_COMMENT.sub(" ", text)
    return _WS.sub(" ", text).strip()


def normalize_statement(text: str) -> str:
    return _WS.sub(" ", text).strip().lower()


def estimate_tokens(text: str, chars_per_token: float = 4.0) -> int:
    """Cheap character-ratio token estimate; shared by dataset and eval."""
    if not text:
        return 0
    return max(1, round(len(text) / chars_per_token))


@dataclass(frozen=True)
class ProblemRecord:
    id: str
    domain: str
    seed_id: str
    variant_index: int
    statement: str

    def __post_init__(self):
        if not self.statement.strip():
            raise ValueError("problem statement must be non-empty")
        if self.variant_index < 0:
            raise ValueError("variant_index must be >= 0")

    @classmethod
    def create(cls, domain: str, seed_id: str, variant_index: int, statement: str):
        return cls(
            id=content_hash(statement),
            domain=domain,
            seed_id=seed_id,
            variant_index=variant_index,
            statement=statement,
        )


@dataclass(frozen=True)
class HarnessBundle:
    makefile: str
    harness_source: str
    reference_source: str
    signature: str


@dataclass(frozen=True)
class CandidateCode:
    id: str
    problem_id: str
    source: str
    generator_model: str
    strategy_mode: str
    implementation_index: int
    status: str = "generated"

    def __post_init__(self):
        if not self.source.strip():
            raise ValueError("candidate source must be non-empty")
        if self.strategy_mode not in STRATEGY_MODES:
            raise ValueError(f"unknown strategy_mode {self.strategy_mode!r}")

    @classmethod
    def create(cls, problem_id, source, generator_model, strategy_mode, implementation_index):
        return cls(
            id=content_hash(normalize_source(source)),
            problem_id=problem_id,
            source=source,
            generator_model=generator_model,
            strategy_mode=strategy_mode,
            implementation_index=implementation_index,
        )


@dataclass(frozen=True, order=True)
class RaceFinding:
    race_type: str
    code_locations: tuple  # of (file_name, line_number)

    def __post_init__(self):
        if self.race_type not in RACE_TYPES:
            raise ValueError(f"unknown race_type {self.race_type!r}")
        if not self.code_locations:
            raise ValueError("code_locations must be non-empty")
        for _, line in self.code_locations:
            if line < 1:
                raise ValueError("line numbers start at 1")


@dataclass(frozen=True)
class RaceReport:
    findings: tuple = ()

    @property
    def race_present(self) -> bool:
        return bool(self.findings)


@dataclass(frozen=True)
class CaliperProfile:
    """Per-region work percentages across thread counts.

    ``entries`` maps (region_label, thread_count) -> percentage, or None for a
    cell whose measurement failed. ``region_weights`` optionally carries each
    region's share of total measured time, used for program-level reduction.
    """

    entries: dict
    thread_counts: tuple
    region_weights: Optional[dict] = None

    def __post_init__(self):
        for (region, tc), value in self.entries.items():
            if value is not None and not (0.0 <= value <= 100.0):
                raise ValueError(f"work percentage out of range for {(region, tc)}: {value}")
        for region in self.regions:
            for tc in self.thread_counts:
                if (region, tc) not in self.entries:
                    raise ValueError(f"missing cell {(region, tc)}")

    @property
    def regions(self):
        return sorted({region for region, _ in self.entries})

    def program_level(self, thread_count) -> Optional[float]:
        """Single work%% for the whole program at one thread count.

        Duration-weighted mean over regions when weights are known, plain mean
        otherwise. None when any region's cell failed.
        """
        values, weights = [], []
        for region in self.regions:
            value = self.entries[(region, thread_count)]
            if value is None:
                return None
            values.append(value)
            weights.append((self.region_weights or {}).get(region, 1.0))
        total = sum(weights)
        if total <= 0:
            weights = [1.0] * len(values)
            total = float(len(values))
        return sum(v * w for v, w in zip(values, weights)) / total


@dataclass(frozen=True)
class CoTRecord:
    think_text: str
    answer_text: str
    teacher_model: str
    conditioned_outcome_hash: str
    validation_status: str

    def __post_init__(self):
        if self.validation_status not in COT_STATUSES:
            raise ValueError(f"unknown validation_status {self.validation_status!r}")
        if self.validation_status == "accepted":
            if not self.think_text.strip() or not self.answer_text.strip():
                raise ValueError("accepted records need non-empty think and answer text")


@dataclass(frozen=True)
class TrainTuple:
    tool: str  # "tsan" | "caliper"
    tuple_id: str
    problem_id: str
    candidate_ids: tuple
    candidate_sources: tuple
    cot: CoTRecord
    outcome_payload: dict  # serialized RaceReport or pair of CaliperProfiles

    def __post_init__(self):
        if self.tool not in ("tsan", "caliper"):
            raise ValueError(f"unknown tool {self.tool!r}")
        if self.cot.validation_status != "accepted":
            raise ValueError("train tuples require accepted CoTs")
        if self.tool == "caliper" and len(self.candidate_ids) != 2:
            raise ValueError("caliper tuples pair exactly two candidates")


# ---------------------------------------------------------------------------
# JSONL serialization
# ---------------------------------------------------------------------------

def _loc_to_list(locations):
    return [[f, int(line)] for f, line in locations]


def _loc_from_list(raw):
    return tuple((f, int(line)) for f, line in raw)


def race_report_to_dict(report: RaceReport) -> dict:
    return {
        "schema": f"race_report/{SCHEMA_VERSION}",
        "findings": [
            {"race_type": f.race_type, "code_locations": _loc_to_list(f.code_locations)}
            for f in report.findings
        ],
    }


def race_report_from_dict(data: dict) -> RaceReport:
    return RaceReport(
        findings=tuple(
            RaceFinding(race_type=f["race_type"], code_locations=_loc_from_list(f["code_locations"]))
            for f in data["findings"]
        )
    )


def caliper_profile_to_dict(profile: CaliperProfile) -> dict:
    return {
        "schema": f"caliper_profile/{SCHEMA_VERSION}",
        "thread_counts": list(profile.thread_counts),
        "entries": [
            {"region": region, "thread_count": tc, "work_percentage": value}
            for (region, tc), value in sorted(profile.entries.items())
        ],
        "region_weights": profile.region_weights,
    }


def caliper_profile_from_dict(data: dict) -> CaliperProfile:
    return CaliperProfile(
        entries={(e["region"], int(e["thread_count"])): e["work_percentage"] for e in data["entries"]},
        thread_counts=tuple(data["thread_counts"]),
        region_weights=data.get("region_weights"),
    )


_SIMPLE_TYPES = {
    "problem": ProblemRecord,
    "harness": HarnessBundle,
    "candidate": CandidateCode,
    "cot": CoTRecord,
}


def record_to_dict(record) -> dict:
    """Serialize any domain record to a schema-tagged plain dict."""
    if isinstance(record, RaceReport):
        return race_report_to_dict(record)
    if isinstance(record, CaliperProfile):
        return caliper_profile_to_dict(record)
    for name, cls in _SIMPLE_TYPES.items():
        if isinstance(record, cls):
            out = asdict(record)
            out["schema"] = f"{name}/{SCHEMA_VERSION}"
            return out
    if isinstance(record, TrainTuple):
        out = asdict(record)
        out["schema"] = f"train_tuple/{SCHEMA_VERSION}"
        return out
    raise TypeError(f"unsupported record type {type(record).__name__}")


def record_from_dict(data: dict):
    schema = data.get("schema", "")
    kind = schema.split("/", 1)[0]
    body = {k: v for k, v in data.items() if k != "schema"}
    if kind == "race_report":
        return race_report_from_dict(data)
    if kind == "caliper_profile":
        return caliper_profile_from_dict(data)
    if kind in _SIMPLE_TYPES:
        return _SIMPLE_TYPES[kind](**body)
    if kind == "train_tuple":
        body["cot"] = CoTRecord(**body["cot"])
        body["candidate_ids"] = tuple(body["candidate_ids"])
        body["candidate_sources"] = tuple(body["candidate_sources"])
        return TrainTuple(**body)
    raise ValueError(f"unknown schema {schema!r}")


def to_jsonl_line(record) -> str:
    return json.dumps(record_to_dict(record), sort_keys=True)


def from_jsonl_line(line: str):
    return record_from_dict(json.loads(line))
