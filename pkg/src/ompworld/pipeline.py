"""Stage orchestration over the run store: explore, toolrun, trace synthesis.

Every stage is resumable: records already in the store are skipped by id, and
LLM calls replay from the journal, so re-running a completed stage performs
zero new endpoint calls or tool runs.
"""
from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor, as_completed

from . import cotsynth, explore, toolchain
from .answers import canonicalize_race_report
from .config import RunConfig
from .errors import GenerationError, InsufficientCandidates, ToolchainError
from .gateway import Gateway
from .store import RunStore
from .types import (
    CandidateCode, CoTRecord, HarnessBundle, ProblemRecord, RaceFinding,
    caliper_profile_from_dict, caliper_profile_to_dict,
    race_report_from_dict, race_report_to_dict, record_to_dict,
)

log = logging.getLogger(__name__)

STRATEGY_MODES = ("racy", "inefficient")


def stage_explore(store: RunStore, gateway: Gateway, config: RunConfig, seeds) -> int:
    """Seeds -> problem variants. Returns the number of new problem records."""
    existing = store.existing_ids("problems")
    new = 0
    for seed in seeds:
        if seed.id not in existing:
            store.append("problems", record_to_dict(seed))
            existing.add(seed.id)
            new += 1
        try:
            variants = explore.generate_variants(
                gateway, config.endpoint(config.problem_model), seed,
                n=config.variants_per_seed, audit=store.audit,
            )
        except GenerationError as exc:
            store.audit("explore", "variant_shortfall", seed_id=seed.seed_id, error=str(exc))
            continue
        for record in variants:
            if record.id in existing:
                continue
            store.append("problems", record_to_dict(record))
            existing.add(record.id)
            new += 1
    return new


def stage_harness(store: RunStore, gateway: Gateway, config: RunConfig) -> int:
    problems = [p for p in store.read("problems")]
    done = {row["problem_id"] for row in store.read("harnesses")}
    new = 0
    for row in problems:
        if row["id"] in done:
            continue
        problem = ProblemRecord(**{k: v for k, v in row.items() if k != "schema"})
        try:
            bundle = explore.generate_harness(gateway, config.endpoint(config.problem_model), problem)
        except Exception as exc:
            store.audit("harness", "generation_failed", problem_id=problem.id, error=str(exc))
            continue
        record = record_to_dict(bundle)
        record["problem_id"] = problem.id
        store.append("harnesses", record)
        new += 1
    return new


def _load_problems(store):
    return {
        row["id"]: ProblemRecord(**{k: v for k, v in row.items() if k != "schema"})
        for row in store.read("problems")
    }


def _load_harnesses(store):
    out = {}
    for row in store.read("harnesses"):
        out[row["problem_id"]] = HarnessBundle(
            **{k: v for k, v in row.items() if k not in ("schema", "problem_id")}
        )
    return out


def _load_candidates(store):
    return [
        CandidateCode(**{k: v for k, v in row.items() if k != "schema"})
        for row in store.read("candidates")
    ]


def stage_candidates(store: RunStore, gateway: Gateway, config: RunConfig) -> int:
    problems = _load_problems(store)
    harnesses = _load_harnesses(store)
    existing = store.existing_ids("candidates")
    new = 0
    for problem_id, harness in harnesses.items():
        problem = problems.get(problem_id)
        if problem is None:
            continue
        seen = set(existing)
        for model in config.candidate_models:
            for mode in STRATEGY_MODES:
                try:
                    candidates = explore.generate_candidates(
                        gateway, config.endpoint(model), problem, harness, mode,
                        k=config.implementations_per_problem,
                        seen_hashes=seen, audit=store.audit,
                    )
                except GenerationError as exc:
                    store.audit("candidates", "generation_failed", problem_id=problem_id,
                                model=model, mode=mode, error=str(exc))
                    continue
                for candidate in candidates:
                    if candidate.id in existing:
                        continue
                    store.append("candidates", record_to_dict(candidate))
                    existing.add(candidate.id)
                    new += 1
    return new


# ---------------------------------------------------------------------------
# Tool runs (live or stubbed)
# ---------------------------------------------------------------------------

def stub_race_report(candidate: CandidateCode):
    """Deterministic stand-in outcome for dry runs without a compiler."""
    if candidate.strategy_mode != "racy":
        return canonicalize_race_report([])
    lines = candidate.source.split("\n")
    race_line = 1
    for i, line in enumerate(lines):
        if "#pragma omp" in line:
            for j in range(i + 1, min(i + 6, len(lines))):
                if re.search(r"[+\-*/|&]?=", lines[j]):
                    race_line = j + 1
                    break
            break
    return canonicalize_race_report([
        RaceFinding(race_type="read_write", code_locations=(("generated.cc", race_line),)),
        RaceFinding(race_type="write_write", code_locations=(("generated.cc", race_line),)),
    ])


def stub_caliper_profile(candidate: CandidateCode, thread_counts):
    from .types import content_hash
    spans = toolchain.scan_regions(candidate.source)
    if not spans:
        spans = [toolchain.RegionSpan(1, max(1, len(candidate.source.split("\n"))))]
    entries = {}
    for span in spans:
        base = 50 + int(content_hash(candidate.id + span.label)[:4], 16) % 46
        for i, tc in enumerate(sorted(thread_counts)):
            entries[(span.label, tc)] = float(max(5, base - 9 * i))
    return toolchain.CaliperProfile(entries=entries, thread_counts=tuple(sorted(thread_counts)))


def stage_toolrun_tsan(store: RunStore, config: RunConfig, stub: bool = False,
                       profile: toolchain.ToolchainProfile = None) -> int:
    candidates = _load_candidates(store)
    harnesses = _load_harnesses(store)
    done = {row["candidate_id"] for row in store.read("tsan_outcomes")}
    profile = profile or toolchain.ToolchainProfile()
    todo = [c for c in candidates if c.id not in done]

    def run_one(candidate):
        if stub:
            return candidate, stub_race_report(candidate), [], "stub"
        bundle = harnesses.get(candidate.problem_id)
        artifact = toolchain.compile_bundle(bundle, candidate, profile, sanitize=True)
        raw, _ = toolchain.run_with_tsan(artifact, profile)
        report, diagnostics = toolchain.parse_tsan(raw, "generated.cc")
        return candidate, report, diagnostics, "live"

    new = 0
    with ThreadPoolExecutor(max_workers=1 if stub else config.tsan_workers) as pool:
        futures = {pool.submit(run_one, c): c for c in todo}
        for future in as_completed(futures):
            candidate = futures[future]
            try:
                candidate, report, diagnostics, source = future.result()
            except ToolchainError as exc:
                store.audit("toolrun", "tsan_failed", candidate_id=candidate.id, error=str(exc))
                continue
            store.append("tsan_outcomes", {
                "candidate_id": candidate.id,
                "report": race_report_to_dict(report),
                "diagnostics": diagnostics,
                "source": source,
            })
            new += 1
    return new


def stage_toolrun_caliper(store: RunStore, config: RunConfig, stub: bool = False,
                          profile: toolchain.ToolchainProfile = None,
                          gateway: Gateway = None) -> int:
    candidates = _load_candidates(store)
    harnesses = _load_harnesses(store)
    done = {row["candidate_id"] for row in store.read("caliper_profiles")}
    profile = profile or toolchain.ToolchainProfile()
    new = 0
    for candidate in candidates:
        if candidate.id in done:
            continue
        if stub:
            cal = stub_caliper_profile(candidate, config.thread_counts)
            valid = True
        else:
            bundle = harnesses.get(candidate.problem_id)
            valid, detail = toolchain.validate_correctness(bundle, candidate, profile)
            if not valid:
                store.audit("toolrun", "caliper_skipped_incorrect",
                            candidate_id=candidate.id, detail=detail)
                continue
            try:
                cal = toolchain.profile_candidate(bundle, candidate, config.thread_counts,
                                                  profile, gateway=gateway)
            except ToolchainError as exc:
                store.audit("toolrun", "caliper_failed", candidate_id=candidate.id, error=str(exc))
                continue
        store.append("caliper_profiles", {
            "candidate_id": candidate.id,
            "profile": caliper_profile_to_dict(cal),
            "validated": valid,
        })
        new += 1
    return new


# ---------------------------------------------------------------------------
# Trace synthesis
# ---------------------------------------------------------------------------

def _cot_done_keys(store):
    return {tuple(row["candidate_ids"]) for row in store.read("cots")}


def stage_cot_tsan(store: RunStore, gateway: Gateway, config: RunConfig,
                   hindsight: bool = True) -> int:
    candidates = {c.id: c for c in _load_candidates(store)}
    done = _cot_done_keys(store)
    teacher = config.endpoint(config.teacher_model)
    new = 0
    for row in store.read("tsan_outcomes"):
        cid = row["candidate_id"]
        if (cid,) in done or cid not in candidates:
            continue
        report = race_report_from_dict(row["report"])
        record = cotsynth.synth_race_cot(
            gateway, candidates[cid], report, teacher,
            hindsight=hindsight, min_think_tokens=config.min_think_tokens,
        )
        store.append("cots", {
            "tool": "tsan",
            "candidate_ids": [cid],
            "cot": record.__dict__,
            "outcome": row["report"],
            "hindsight": hindsight,
        })
        new += 1
    return new


def stage_cot_caliper(store: RunStore, gateway: Gateway, config: RunConfig) -> int:
    candidates = {c.id: c for c in _load_candidates(store)}
    profiles = {
        row["candidate_id"]: caliper_profile_from_dict(row["profile"])
        for row in store.read("caliper_profiles")
    }
    done = _cot_done_keys(store)
    teacher = config.endpoint(config.teacher_model)

    by_problem = {}
    for cid in profiles:
        candidate = candidates.get(cid)
        if candidate:
            by_problem.setdefault(candidate.problem_id, []).append(cid)

    new = 0
    for problem_id, cids in sorted(by_problem.items()):
        try:
            pairs = cotsynth.pair_candidates(sorted(cids), pairing_budget=config.pairing_budget)
        except InsufficientCandidates:
            store.audit("cot", "too_few_profiled_candidates", problem_id=problem_id, n=len(cids))
            continue
        for cid_i, cid_j in pairs:
            if (cid_i, cid_j) in done or (cid_j, cid_i) in done:
                continue
            record = cotsynth.synth_caliper_pair_cot(
                gateway, candidates[cid_i], candidates[cid_j],
                profiles[cid_i], profiles[cid_j], teacher,
                min_think_tokens=config.min_think_tokens,
            )
            store.append("cots", {
                "tool": "caliper",
                "candidate_ids": [cid_i, cid_j],
                "cot": record.__dict__,
                "outcome": {
                    "schema": "caliper_pair/v1",
                    "a": caliper_profile_to_dict(profiles[cid_i]),
                    "b": caliper_profile_to_dict(profiles[cid_j]),
                    "thread_counts": sorted(profiles[cid_i].thread_counts),
                },
                "hindsight": True,
            })
            new += 1
    return new
