"""Outcome-conditioned hindsight reasoning-trace synthesis and validation.

Accepted traces must terminate in the verbatim ground-truth answer; a
deterministic phrase screen rejects traces that admit prior knowledge of the
outcome.
"""
from __future__ import annotations

import itertools
import logging
import random

from . import prompts
from .answers import render_caliper_answer, render_race_answer
from .errors import FormatError, GenerationError, InsufficientCandidates
from .gateway import Gateway, ModelEndpoint, SamplingParams, extract_tagged_blocks
from .types import CandidateCode, CaliperProfile, CoTRecord, RaceReport, content_hash, estimate_tokens

log = logging.getLogger(__name__)

TEACHER_PARAMS = SamplingParams(temperature=0.999, top_p=0.95, max_tokens=32768)
MAX_SYNTH_ATTEMPTS = 4
MIN_THINK_TOKENS = 200

LEAKAGE_PHRASES = (
    "as given",
    "the provided outcome",
    "we are told",
    "already reported",
    "the given answer",
    "the known races",
    "the expected answer",
    "as stated in the outcome",
)


def validate_cot(think_text: str, answer_text: str, expected_answer_text,
                 min_think_tokens: int = MIN_THINK_TOKENS,
                 leakage_phrases=LEAKAGE_PHRASES) -> str:
    """Deterministic screen returning one of the four validation statuses.

    ``expected_answer_text`` may be one string or a sequence that must all
    appear, in order, in the answer block.
    """
    if isinstance(expected_answer_text, str):
        expected = [expected_answer_text]
    else:
        expected = list(expected_answer_text)

    if not think_text.strip() or not answer_text.strip():
        return "rejected_format"
    if estimate_tokens(think_text) < min_think_tokens:
        return "rejected_format"

    think_l = think_text.lower()
    for phrase in leakage_phrases:
        if phrase in think_l:
            return "rejected_leakage"

    cursor = 0
    for chunk in expected:
        idx = answer_text.find(chunk.strip(), cursor)
        if idx < 0:
            return "rejected_answer_mismatch"
        cursor = idx + len(chunk.strip())
    return "accepted"


def _synth(gateway: Gateway, teacher: ModelEndpoint, prompt: str,
           expected_chunks, outcome_hash: str,
           min_think_tokens: int = MIN_THINK_TOKENS) -> CoTRecord:
    last_status = "rejected_format"
    last = ("", "")
    for attempt in range(MAX_SYNTH_ATTEMPTS):
        text = gateway.complete(teacher, [("user", prompt)], TEACHER_PARAMS, salt=attempt)[0]
        try:
            think = extract_tagged_blocks(text, "think")[0]
            answer = extract_tagged_blocks(text, "answer")[0]
        except FormatError:
            last_status, last = "rejected_format", ("", text)
            continue
        status = validate_cot(think, answer, expected_chunks, min_think_tokens)
        record = CoTRecord(
            think_text=think, answer_text=answer, teacher_model=teacher.model_id,
            conditioned_outcome_hash=outcome_hash, validation_status=status,
        )
        if status == "accepted":
            return record
        last_status, last = status, (think, answer)
        log.info("trace attempt %d rejected: %s", attempt + 1, status)
    # keep the final rejected attempt for audit
    return CoTRecord(
        think_text=last[0], answer_text=last[1], teacher_model=teacher.model_id,
        conditioned_outcome_hash=outcome_hash, validation_status=last_status,
    )


def synth_race_cot(gateway: Gateway, candidate: CandidateCode, report: RaceReport,
                   teacher: ModelEndpoint, hindsight: bool = True,
                   min_think_tokens: int = MIN_THINK_TOKENS) -> CoTRecord:
    """One hindsight trace for a candidate and its canonical race report."""
    answer_block = render_race_answer(report)
    outcome_hash = content_hash(answer_block)
    if hindsight:
        prompt = prompts.RACE_COT_PROMPT.format(
            generated_cc=candidate.source, race_outcome=answer_block)
        expected = [answer_block]
    else:
        # ablation path: outcome withheld, so only format/leakage screens apply
        prompt = prompts.RACE_COT_PROMPT_NO_HINDSIGHT.format(generated_cc=candidate.source)
        expected = []
    return _synth(gateway, teacher, prompt, expected, outcome_hash, min_think_tokens)


def synth_caliper_pair_cot(gateway: Gateway, candidate_i: CandidateCode,
                           candidate_j: CandidateCode, profile_i: CaliperProfile,
                           profile_j: CaliperProfile, teacher: ModelEndpoint,
                           min_think_tokens: int = MIN_THINK_TOKENS) -> CoTRecord:
    """One hindsight trace jointly conditioned on a code pair's profiles."""
    if candidate_i.problem_id != candidate_j.problem_id:
        raise ValueError("paired candidates must solve the same problem")
    measurements_a = render_caliper_answer(profile_i)
    measurements_b = render_caliper_answer(profile_j)
    prompt = prompts.CALIPER_COT_PROMPT.format(
        generated_cc_a=candidate_i.source, generated_cc_b=candidate_j.source,
        measurements_a=measurements_a, measurements_b=measurements_b,
    )
    outcome_hash = content_hash(measurements_a + "\n" + measurements_b)
    record = _synth(gateway, teacher, prompt,
                    [measurements_a, measurements_b], outcome_hash, min_think_tokens)
    return record


def pair_candidates(problem_candidates, pairing_budget=None, rng=None) -> list:
    """Distinct unordered pairs up to budget, each emitted in a random order."""
    rng = rng or random.Random(0)
    candidates = list(problem_candidates)
    if len(candidates) < 2:
        raise InsufficientCandidates(f"need >= 2 profiled candidates, got {len(candidates)}")
    pairs = list(itertools.combinations(candidates, 2))
    if pairing_budget is not None and pairing_budget < len(pairs):
        pairs = rng.sample(pairs, pairing_budget)
    oriented = []
    for a, b in pairs:
        oriented.append((a, b) if rng.random() < 0.5 else (b, a))
    return oriented
