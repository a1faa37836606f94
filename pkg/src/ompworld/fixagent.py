"""Feedback-driven race-fixing loop.

Feedback sources: a live detector oracle, the actor analyzing its own code, or
a world-model endpoint whose full response (reasoning plus answer) is passed
through — the reasoning is included deliberately, since the causal chain is
part of the feedback's value.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import prompts
from .answers import render_race_answer
from .errors import EndpointError, FormatError
from .gateway import Gateway, ModelEndpoint, SamplingParams, extract_code_block

log = logging.getLogger(__name__)

FEEDBACK_SOURCES = ("oracle", "self", "world_model")
ACTOR_PARAMS = SamplingParams(temperature=0.6, top_p=0.95, max_tokens=16384)


@dataclass
class FixAgentConfig:
    actor: ModelEndpoint
    feedback_source: str
    world_model: Optional[ModelEndpoint] = None
    # oracle(code) -> RaceReport from a live detector run
    oracle: Optional[Callable] = None
    # compile_check(code) -> bool; None disables the compile gate
    compile_check: Optional[Callable] = None
    # verdict(code) -> True when race-free (live detector or scripted)
    verdict: Optional[Callable] = None

    def __post_init__(self):
        if self.feedback_source not in FEEDBACK_SOURCES:
            raise ValueError(f"unknown feedback source {self.feedback_source!r}")
        if self.feedback_source == "oracle" and self.oracle is None:
            raise ValueError("oracle feedback requires an oracle callable")
        if self.feedback_source == "world_model" and self.world_model is None:
            raise ValueError("world_model feedback requires a world-model endpoint")


def get_feedback(gateway: Gateway, code: str, config: FixAgentConfig) -> str:
    if config.feedback_source == "oracle":
        report = config.oracle(code)
        return ("Here is a list of data races that ThreadSanitizer caught:\n\n"
                + render_race_answer(report))
    if config.feedback_source == "self":
        prompt = prompts.SELF_FEEDBACK_PROMPT.format(code=code)
        return gateway.complete(config.actor, [("user", prompt)], ACTOR_PARAMS)[0]
    prompt = prompts.WORLD_MODEL_RACE_PROMPT.format(generated_cc=code)
    # full response: reasoning trace plus answer block
    return gateway.complete(config.world_model, [("user", prompt)], ACTOR_PARAMS)[0]


def propose_edit(gateway: Gateway, code: str, feedback: str, actor: ModelEndpoint) -> str:
    prompt = prompts.EDIT_PROMPT.format(code=code, feedback=feedback or "(no feedback)")
    return gateway.complete(actor, [("user", prompt)], ACTOR_PARAMS)[0]


def apply_edit(gateway: Gateway, code: str, edit: str, actor: ModelEndpoint,
               compile_check: Optional[Callable] = None):
    """Apply an edit; one repair re-prompt on failure, else keep the original.

    Returns (new_code, status) with status in {"fixed_code", "fix_failed"}.
    """
    prompt = prompts.APPLY_PROMPT.format(code=code, edit=edit)
    for attempt in range(2):
        try:
            text = gateway.complete(actor, [("user", prompt)], ACTOR_PARAMS, salt=attempt)[0]
            new_code = extract_code_block(text, "cpp")
        except FormatError as exc:
            log.warning("apply attempt %d produced no code block: %s", attempt + 1, exc)
            continue
        if compile_check is not None and not compile_check(new_code):
            log.warning("apply attempt %d failed compile check", attempt + 1)
            continue
        return new_code, "fixed_code"
    return code, "fix_failed"


@dataclass
class FixLoopResult:
    race_free_percentage: float
    n_definitive: int
    n_indeterminate: int
    transcripts: list = field(default_factory=list)


def fix_loop(gateway: Gateway, items, config: FixAgentConfig, passes: int = 1) -> FixLoopResult:
    """Run the feedback -> edit -> apply loop and measure race-free rate.

    ``items`` is a list of (item_id, code). The final verdict comes from
    config.verdict; items without a definitive verdict are reported separately.
    """
    if passes < 1:
        raise ValueError("passes must be >= 1")
    if config.verdict is None:
        raise ValueError("fix_loop requires a verdict callable")

    transcripts = []
    race_free = 0
    definitive = 0
    for item_id, code in items:
        current = code
        transcript = {"item_id": item_id, "passes": []}
        failed = False
        for _ in range(passes):
            try:
                feedback = get_feedback(gateway, current, config)
                edit = propose_edit(gateway, current, feedback, config.actor)
                current, status = apply_edit(gateway, current, edit, config.actor,
                                             config.compile_check)
            except (EndpointError, FormatError) as exc:
                transcript["passes"].append({"error": str(exc)})
                failed = True
                break
            transcript["passes"].append({
                "feedback": feedback, "edit": edit, "status": status,
                "applied_code": current,
            })
        if failed:
            transcript["verdict"] = "indeterminate"
            transcripts.append(transcript)
            continue
        try:
            is_race_free = config.verdict(current)
        except Exception as exc:  # live tool failures leave the item indeterminate
            transcript["verdict"] = f"indeterminate: {exc}"
            transcripts.append(transcript)
            continue
        definitive += 1
        race_free += 1 if is_race_free else 0
        transcript["verdict"] = "race_free" if is_race_free else "racy"
        transcripts.append(transcript)

    return FixLoopResult(
        race_free_percentage=(100.0 * race_free / definitive) if definitive else 0.0,
        n_definitive=definitive,
        n_indeterminate=len(items) - definitive,
        transcripts=transcripts,
    )
