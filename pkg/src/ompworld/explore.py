"""Breadth-first generation of problems, harnesses, and candidate implementations."""
from __future__ import annotations

import logging
import math
import re

from . import prompts
from .errors import FormatError, GenerationError, SignatureError
from .gateway import Gateway, ModelEndpoint, SamplingParams, extract_code_block, extract_tagged_blocks
from .types import CandidateCode, HarnessBundle, ProblemRecord, content_hash, normalize_source, normalize_statement

log = logging.getLogger(__name__)

GENERATION_PARAMS = SamplingParams(temperature=0.7, top_p=0.95, max_tokens=8192)
CANDIDATE_PARAMS = SamplingParams(temperature=0.0, top_p=0.95, max_tokens=8192)
MAX_ATTEMPTS = 3

MAKEFILE_TEMPLATE = """\
CXX ?= g++
CXXFLAGS ?= -O1 -g -fopenmp
EXTRA_CXXFLAGS ?=

app: harness.cc reference.cc generated.cc
\t$(CXX) $(CXXFLAGS) $(EXTRA_CXXFLAGS) harness.cc reference.cc generated.cc -o app

clean:
\trm -f app
.PHONY: clean
"""


def generate_variants(gateway: Gateway, endpoint: ModelEndpoint, seed: ProblemRecord,
                      n: int = 20, audit=None) -> list:
    """Produce up to n perturbed variants of a seed problem (deduplicated)."""
    if seed.variant_index != 0:
        raise ValueError("variants are generated from seed problems only")
    if n < 1:
        raise ValueError("n must be >= 1")
    prompt = prompts.VARIANT_PROMPT.format(problem=seed.statement, num_variants=n)
    messages = [("user", prompt)]

    statements = []
    for attempt in range(MAX_ATTEMPTS):
        try:
            text = gateway.complete(endpoint, messages, GENERATION_PARAMS, salt=attempt)[0]
            statements = extract_tagged_blocks(text, "variant")
            break
        except FormatError as exc:
            log.warning("variant generation attempt %d unparseable: %s", attempt + 1, exc)
    if len(statements) < math.ceil(n / 2):
        raise GenerationError(
            f"only {len(statements)} of {n} variants parsed for seed {seed.seed_id}"
        )

    records, seen = [], {content_hash(normalize_statement(seed.statement))}
    for statement in statements[:n]:
        key = content_hash(normalize_statement(statement))
        if key in seen:
            if audit:
                audit("explore", "variant_dedupe", seed_id=seed.seed_id, statement=statement[:80])
            continue
        seen.add(key)
        records.append(
            ProblemRecord.create(
                domain=seed.domain, seed_id=seed.seed_id,
                variant_index=len(records) + 1, statement=statement,
            )
        )
    return records


_SIGNATURE_RE = re.compile(
    r"^[ \t]*((?:[\w:<>,&*\s]+?)\breference\s*\([^;{)]*(?:\([^)]*\))?[^;{]*\))\s*\{",
    re.MULTILINE,
)


def extract_signature(reference_source: str, function_name: str = "reference") -> str:
    """Pull the declared signature of the reference function out of its source."""
    pattern = re.compile(
        r"^[ \t]*([\w:<>,&*~\s]+?\b" + re.escape(function_name) + r"\s*\([^{;]*\))\s*\{",
        re.MULTILINE,
    )
    m = pattern.search(reference_source)
    if not m:
        raise SignatureError(f"no definition of {function_name!r} found in reference source")
    return re.sub(r"\s+", " ", m.group(1)).strip()


def generate_harness(gateway: Gateway, endpoint: ModelEndpoint, problem: ProblemRecord,
                     makefile: str = MAKEFILE_TEMPLATE) -> HarnessBundle:
    """Generate harness + reference sources for one problem and extract the signature."""
    harness_prompt = prompts.HARNESS_PROMPT.format(makefile=makefile, problem=problem.statement)
    harness_text = gateway.complete(endpoint, [("user", harness_prompt)], GENERATION_PARAMS)[0]
    harness_source = extract_code_block(harness_text, "cpp")

    reference_prompt = prompts.REFERENCE_PROMPT.format(
        makefile=makefile, harness_cc=harness_source,
        reference_prompt_cc=prompts.REFERENCE_STUB, problem=problem.statement,
    )
    reference_text = gateway.complete(endpoint, [("user", reference_prompt)], GENERATION_PARAMS)[0]
    reference_source = extract_code_block(reference_text, "cpp")

    signature = extract_signature(reference_source)
    return HarnessBundle(
        makefile=makefile, harness_source=harness_source,
        reference_source=reference_source, signature=signature,
    )


def generate_candidates(gateway: Gateway, endpoint: ModelEndpoint, problem: ProblemRecord,
                        harness: HarnessBundle, mode: str, k: int = 4,
                        seen_hashes=None, audit=None) -> list:
    """Generate up to k candidates in one mode, deduplicated across the problem.

    ``seen_hashes`` is shared by the caller across endpoints and modes so
    byte-identical (modulo comments/whitespace) candidates collapse to one.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    prompt = prompts.candidate_prompt(
        makefile=harness.makefile, harness_cc=harness.harness_source,
        reference_cc=harness.reference_source, problem=problem.statement, mode=mode, k=k,
    )
    messages = [("user", prompt)]

    blocks = []
    for attempt in range(MAX_ATTEMPTS):
        try:
            text = gateway.complete(endpoint, messages, CANDIDATE_PARAMS, salt=attempt)[0]
            blocks = extract_tagged_blocks(text, "implementation")
            break
        except FormatError as exc:
            log.warning("candidate generation attempt %d unparseable: %s", attempt + 1, exc)
    if not blocks:
        raise GenerationError(f"zero candidates parsed for problem {problem.id} ({endpoint.name}, {mode})")

    seen = seen_hashes if seen_hashes is not None else set()
    candidates = []
    for index, block in enumerate(blocks[:k], start=1):
        try:
            source = extract_code_block(block, "cpp")
        except FormatError:
            source = block.strip()
            if not source:
                continue
        key = content_hash(normalize_source(source))
        if key in seen:
            if audit:
                audit("explore", "candidate_dedupe", problem_id=problem.id,
                      endpoint=endpoint.name, mode=mode, implementation_index=index)
            continue
        seen.add(key)
        candidates.append(
            CandidateCode.create(
                problem_id=problem.id, source=source,
                generator_model=endpoint.model_id, strategy_mode=mode,
                implementation_index=index,
            )
        )
    return candidates
