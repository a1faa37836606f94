"""Benchmark harnesses: race-presence accuracy, pairwise work-percentage
ranking with gap buckets, and response-length / FLOPs accounting."""
from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass, field

from . import prompts
from .answers import parse_caliper_answer, parse_race_answer
from .errors import EndpointError, FormatError, InsufficientSolutions
from .gateway import Gateway, ModelEndpoint, SamplingParams, extract_tagged_blocks
from .types import estimate_tokens

log = logging.getLogger(__name__)

RACE_EVAL_PARAMS = SamplingParams(temperature=0.6, top_p=0.95, max_tokens=16384)
DEFAULT_TIE_TOLERANCE = 1.0
DEFAULT_BUCKET_EDGES = (0.0, 10.0, 20.0, 30.0, 40.0)


@dataclass(frozen=True)
class RaceEvalItem:
    program_id: str
    source: str
    label: bool  # race present
    label_source: str = "benchmark_metadata"  # or "live_tsan"


@dataclass(frozen=True)
class RankEvalItem:
    problem_id: str
    code_a: str
    code_b: str
    truth: dict  # thread_count -> "a_higher" | "b_higher" | "tie"
    gap: dict  # thread_count -> |work%_a - work%_b|


@dataclass
class RaceEvalReport:
    mean_accuracy: float
    majority_accuracy: float
    n_items: int
    n_samples: int
    per_item: list = field(default_factory=list)
    completions: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def eval_race_presence(gateway: Gateway, endpoint: ModelEndpoint, items,
                       n_samples: int = 16, params: SamplingParams = RACE_EVAL_PARAMS) -> RaceEvalReport:
    """Race-presence prediction accuracy over n samples per item.

    Primary metric is mean per-sample accuracy; majority vote is reported as
    a secondary column. Unparseable samples count as incorrect.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    per_item, completions, failures = [], [], []
    for item in items:
        prompt = prompts.WORLD_MODEL_RACE_PROMPT.format(generated_cc=item.source)
        try:
            samples = gateway.complete(endpoint, [("user", prompt)], params, n_samples=n_samples)
        except EndpointError as exc:
            failures.append({"program_id": item.program_id, "error": str(exc)})
            continue
        completions.extend(samples)
        correct = 0
        votes = 0
        unparseable = 0
        for text in samples:
            answer = _answer_section(text)
            try:
                predicted = parse_race_answer(answer).race_present
            except FormatError:
                unparseable += 1
                continue  # counted incorrect
            votes += 1 if predicted else 0
            correct += 1 if predicted == item.label else 0
        majority = votes * 2 > (n_samples - unparseable) if n_samples > unparseable else False
        per_item.append({
            "program_id": item.program_id,
            "label": item.label,
            "label_source": item.label_source,
            "sample_accuracy": correct / n_samples,
            "majority_correct": majority == item.label,
            "unparseable": unparseable,
        })
    n = len(per_item)
    return RaceEvalReport(
        mean_accuracy=100.0 * sum(r["sample_accuracy"] for r in per_item) / n if n else 0.0,
        majority_accuracy=100.0 * sum(r["majority_correct"] for r in per_item) / n if n else 0.0,
        n_items=n, n_samples=n_samples,
        per_item=per_item, completions=completions, failures=failures,
    )


def _answer_section(text: str) -> str:
    try:
        return extract_tagged_blocks(text, "answer")[0]
    except FormatError:
        return text


@dataclass
class RankingCell:
    problem_id: str
    thread_count: int
    presentation: str  # "ab" | "ba"
    truth: str
    predicted: str  # ordering, or "unparseable"
    gap: float

    @property
    def evaluated(self) -> bool:
        return self.truth != "tie"

    @property
    def correct(self) -> bool:
        return self.evaluated and self.predicted == self.truth


@dataclass
class RankingReport:
    per_thread_accuracy: dict
    average_accuracy: float
    cells: list
    tie_cells: int
    denominators: dict


def eval_pair_ranking(gateway: Gateway, endpoint: ModelEndpoint, items,
                      thread_counts, params: SamplingParams = RACE_EVAL_PARAMS) -> RankingReport:
    """Pairwise work-percentage ranking accuracy per thread count.

    Every unordered pair is presented in both orders; truth ties are excluded
    from denominators and counted separately.
    """
    cells = []
    for item in items:
        for presentation in ("ab", "ba"):
            code_a, code_b = (item.code_a, item.code_b) if presentation == "ab" else (item.code_b, item.code_a)
            prompt = prompts.WORLD_MODEL_CALIPER_PROMPT.format(
                generated_cc_a=code_a, generated_cc_b=code_b,
                thread_counts=", ".join(str(t) for t in thread_counts),
            )
            try:
                text = gateway.complete(endpoint, [("user", prompt)], params)[0]
                predictions = _parse_pair_prediction(text, thread_counts)
            except (EndpointError, FormatError) as exc:
                log.warning("ranking item %s (%s) failed: %s", item.problem_id, presentation, exc)
                predictions = {tc: "unparseable" for tc in thread_counts}
            for tc in thread_counts:
                truth = item.truth.get(tc, "tie")
                predicted = predictions.get(tc, "unparseable")
                if presentation == "ba" and predicted in ("a_higher", "b_higher"):
                    predicted = "b_higher" if predicted == "a_higher" else "a_higher"
                cells.append(RankingCell(
                    problem_id=item.problem_id, thread_count=tc,
                    presentation=presentation, truth=truth,
                    predicted=predicted, gap=float(item.gap.get(tc, 0.0)),
                ))

    per_thread, denominators = {}, {}
    for tc in thread_counts:
        evaluated = [c for c in cells if c.thread_count == tc and c.evaluated]
        denominators[tc] = len(evaluated)
        per_thread[tc] = (100.0 * sum(c.correct for c in evaluated) / len(evaluated)) if evaluated else 0.0
    evaluated_all = [c for c in cells if c.evaluated]
    average = (100.0 * sum(c.correct for c in evaluated_all) / len(evaluated_all)) if evaluated_all else 0.0
    return RankingReport(
        per_thread_accuracy=per_thread, average_accuracy=average, cells=cells,
        tie_cells=sum(1 for c in cells if not c.evaluated), denominators=denominators,
    )


def _parse_pair_prediction(text: str, thread_counts) -> dict:
    """Extract predicted orderings from a two-measurement-block answer."""
    answer = _answer_section(text)
    blocks = extract_tagged_blocks(answer, "measurements")
    if len(blocks) < 2:
        raise FormatError("expected measurement blocks for both codes")
    profile_a = parse_caliper_answer(blocks[0])
    profile_b = parse_caliper_answer(blocks[1])
    out = {}
    for tc in thread_counts:
        a = profile_a.program_level(tc) if tc in profile_a.thread_counts else None
        b = profile_b.program_level(tc) if tc in profile_b.thread_counts else None
        if a is None or b is None:
            out[tc] = "unparseable"
        elif a > b:
            out[tc] = "a_higher"
        elif b > a:
            out[tc] = "b_higher"
        else:
            out[tc] = "tie"
    return out


def bucket_by_gap(cells, bucket_edges=DEFAULT_BUCKET_EDGES) -> list:
    """Per-bucket accuracy over evaluated cells; buckets partition all cells."""
    edges = list(bucket_edges)
    if edges != sorted(edges):
        raise ValueError("bucket edges must be ascending")
    buckets = []
    for i, low in enumerate(edges):
        high = edges[i + 1] if i + 1 < len(edges) else float("inf")
        members = [c for c in cells if c.evaluated and low <= c.gap < high]
        buckets.append({
            "bucket": f"[{low:g},{high:g})" if high != float("inf") else f"[{low:g},inf)",
            "low": low, "high": high,
            "count": len(members),
            "accuracy": (100.0 * sum(c.correct for c in members) / len(members)) if members else 0.0,
        })
    return buckets


@dataclass(frozen=True)
class FlopsFormula:
    """Configurable FLOPs-per-response estimator.

    Default: dense-decoder 2 * params per generated token; an optional
    quadratic attention term (attn_factor > 0) adds
    attn_factor * (prompt * R + R * (R - 1) / 2) for R generated tokens.
    """

    params_factor: float = 2.0
    attn_factor: float = 0.0


def estimate_flops(param_count: float, prompt_tokens: int, response_tokens: int,
                   formula: FlopsFormula = FlopsFormula()) -> float:
    if min(param_count, prompt_tokens, response_tokens) < 0:
        raise ValueError("all counts must be >= 0")
    r = response_tokens
    flops = formula.params_factor * param_count * r
    if formula.attn_factor > 0 and r > 0:
        flops += formula.attn_factor * (prompt_tokens * r + r * (r - 1) / 2.0)
    return flops


def response_length_stats(completions, chars_per_token: float = 4.0) -> dict:
    lengths = [estimate_tokens(c, chars_per_token) for c in completions]
    if not lengths:
        return {"mean": 0.0, "median": 0.0, "max": 0, "count": 0}
    return {
        "mean": sum(lengths) / len(lengths),
        "median": float(statistics.median(lengths)),
        "max": max(lengths),
        "count": len(lengths),
    }


def prepare_pareval_pairs(problem_solutions: dict, profiles: dict,
                          tie_tolerance: float = DEFAULT_TIE_TOLERANCE) -> list:
    """Build ranking items from correct solutions and measured profiles.

    ``problem_solutions`` maps problem_id -> list of (solution_id, source) for
    solutions that passed correctness validation; ``profiles`` maps
    solution_id -> CaliperProfile.
    """
    items = []
    for problem_id, solutions in sorted(problem_solutions.items()):
        profiled = [(sid, src) for sid, src in solutions if sid in profiles]
        if len(profiled) < 2:
            log.info("problem %s skipped: %d profiled solutions", problem_id, len(profiled))
            continue
        for i in range(len(profiled)):
            for j in range(i + 1, len(profiled)):
                (sid_a, src_a), (sid_b, src_b) = profiled[i], profiled[j]
                prof_a, prof_b = profiles[sid_a], profiles[sid_b]
                counts = sorted(set(prof_a.thread_counts) & set(prof_b.thread_counts))
                truth, gap = {}, {}
                for tc in counts:
                    a, b = prof_a.program_level(tc), prof_b.program_level(tc)
                    if a is None or b is None:
                        continue
                    gap[tc] = abs(a - b)
                    if gap[tc] < tie_tolerance:
                        truth[tc] = "tie"
                    else:
                        truth[tc] = "a_higher" if a > b else "b_higher"
                if truth:
                    items.append(RankEvalItem(
                        problem_id=problem_id, code_a=src_a, code_b=src_b,
                        truth=truth, gap=gap,
                    ))
    if not items:
        raise InsufficientSolutions("no problem yielded >= 2 profiled solutions")
    return items
