"""Uniform access to chat-completion endpoints with a content-addressed journal.

Every completion is keyed by (endpoint, messages, params, sample index, salt)
and written to the run directory, so re-running any stage replays responses
byte-identically with zero network calls.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .errors import ContextOverflow, EndpointError, FormatError, JsonError
from .types import estimate_tokens

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelEndpoint:
    name: str
    base_url: str = ""
    api_key_env: str = ""
    max_context: int = 131072
    model: str = ""
    requests_per_minute: int = 600

    @property
    def model_id(self) -> str:
        return self.model or self.name


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.7
    top_p: float = 0.95
    max_tokens: int = 8192

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (0 < self.top_p <= 1):
            raise ValueError("top_p must be in (0, 1]")


class _TokenBucket:
    """Simple per-endpoint rate limiter."""

    def __init__(self, per_minute: int):
        self.capacity = max(1, per_minute)
        self.tokens = float(self.capacity)
        self.rate = self.capacity / 60.0
        self.updated = time.monotonic()
        self.lock = threading.Lock()

    def acquire(self):
        while True:
            with self.lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                wait = (1 - self.tokens) / self.rate
            time.sleep(wait)


class Journal:
    """Append-only content-addressed response store under the run directory."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(endpoint: ModelEndpoint, messages, params: SamplingParams, sample_index: int, salt: int = 0) -> str:
        payload = json.dumps(
            {
                "endpoint": endpoint.name,
                "model": endpoint.model_id,
                "messages": list(messages),
                "temperature": params.temperature,
                "top_p": params.top_p,
                "max_tokens": params.max_tokens,
                "sample_index": sample_index,
                "salt": salt,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> Optional[str]:
        path = self._path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))["response"]

    def put(self, key: str, response: str, meta: Optional[dict] = None):
        path = self._path(key)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps({"key": key, "response": response, "meta": meta or {}}, sort_keys=True),
            encoding="utf-8",
        )
        os.replace(tmp, path)

    def __len__(self):
        return sum(1 for _ in self.root.glob("*.json"))


def http_transport(endpoint: ModelEndpoint, messages, params: SamplingParams) -> str:
    """One chat completion over an OpenAI-compatible HTTP endpoint."""
    import requests

    headers = {"Content-Type": "application/json"}
    if endpoint.api_key_env:
        key = os.environ.get(endpoint.api_key_env)
        if not key:
            raise EndpointError(f"environment variable {endpoint.api_key_env} not set")
        headers["Authorization"] = f"Bearer {key}"
    body = {
        "model": endpoint.model_id,
        "messages": [{"role": role, "content": content} for role, content in messages],
        "temperature": params.temperature,
        "top_p": params.top_p,
        "max_tokens": params.max_tokens,
    }
    url = endpoint.base_url.rstrip("/") + "/chat/completions"
    resp = requests.post(url, json=body, headers=headers, timeout=600)
    if resp.status_code != 200:
        raise EndpointError(f"{endpoint.name}: HTTP {resp.status_code}: {resp.text[:500]}")
    data = resp.json()
    return data["choices"][0]["message"]["content"]


class Gateway:
    """Journaled, rate-limited completion client.

    ``transport`` is any callable(endpoint, messages, params) -> str; tests and
    dry runs substitute scripted transports for the HTTP one.
    """

    def __init__(self, journal: Journal, transport: Callable = http_transport,
                 max_retries: int = 4, backoff: float = 1.0):
        self.journal = journal
        self.transport = transport
        self.max_retries = max_retries
        self.backoff = backoff
        self.network_calls = 0
        self.journal_hits = 0
        self._limiters = {}
        self._lock = threading.Lock()

    def _limiter(self, endpoint: ModelEndpoint) -> _TokenBucket:
        with self._lock:
            if endpoint.name not in self._limiters:
                self._limiters[endpoint.name] = _TokenBucket(endpoint.requests_per_minute)
            return self._limiters[endpoint.name]

    def complete(self, endpoint: ModelEndpoint, messages, params: SamplingParams,
                 n_samples: int = 1, salt: int = 0) -> list:
        if not messages:
            raise ValueError("messages must be non-empty")
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        prompt_tokens = estimate_tokens("".join(content for _, content in messages))
        if prompt_tokens > endpoint.max_context:
            raise ContextOverflow(
                f"prompt ~{prompt_tokens} tokens exceeds {endpoint.name} context {endpoint.max_context}"
            )

        out = []
        for i in range(n_samples):
            key = Journal.key(endpoint, messages, params, i, salt)
            cached = self.journal.get(key)
            if cached is not None:
                self.journal_hits += 1
                out.append(cached)
                continue
            response = self._call_with_retry(endpoint, messages, params)
            self.journal.put(key, response, meta={"endpoint": endpoint.name, "sample_index": i, "salt": salt})
            out.append(response)
        return out

    def _call_with_retry(self, endpoint, messages, params) -> str:
        last = None
        for attempt in range(self.max_retries):
            self._limiter(endpoint).acquire()
            try:
                self.network_calls += 1
                return self.transport(endpoint, messages, params)
            except ContextOverflow:
                raise
            except Exception as exc:  # transient transport failures included
                last = exc
                delay = self.backoff * (2 ** attempt)
                log.warning("endpoint %s attempt %d failed: %s (retry in %.1fs)",
                            endpoint.name, attempt + 1, exc, delay)
                time.sleep(delay)
        raise EndpointError(f"{endpoint.name}: retries exhausted: {last}")


# ---------------------------------------------------------------------------
# Response block extraction
# ---------------------------------------------------------------------------

def extract_tagged_blocks(text: str, tag_prefix: str) -> list:
    """Return bodies of <prefix_1>..</prefix_1> blocks in numeric order.

    A bare <prefix>..</prefix> tag (e.g. <think>) yields a single block.
    """
    numbered = re.findall(
        rf"<{re.escape(tag_prefix)}_(\d+)>(.*?)</{re.escape(tag_prefix)}_\1>",
        text, re.DOTALL,
    )
    if numbered:
        ordered = sorted(((int(n), body) for n, body in numbered), key=lambda x: x[0])
        numbers = [n for n, _ in ordered]
        expected = list(range(numbers[0], numbers[0] + len(numbers)))
        if numbers != expected:
            log.warning("tag %s has gaps: got numbers %s", tag_prefix, numbers)
        return [body.strip() for _, body in ordered]
    bare = re.findall(
        rf"<{re.escape(tag_prefix)}>(.*?)</{re.escape(tag_prefix)}>", text, re.DOTALL
    )
    if bare:
        return [body.strip() for body in bare]
    raise FormatError(f"no <{tag_prefix}> blocks found in response")


_FENCE = re.compile(r"```([A-Za-z0-9_+-]*)[ \t]*\n(.*?)```", re.DOTALL)


def extract_code_block(text: str, language_hint: str = "") -> str:
    """First fenced code block matching the language hint (any when empty)."""
    for lang, body in _FENCE.findall(text):
        if not language_hint or lang.lower() == language_hint.lower():
            return body.strip("\n")
    # fall back to an unhinted block if a hint found nothing
    if language_hint:
        for _, body in _FENCE.findall(text):
            return body.strip("\n")
    raise FormatError("no fenced code block found in response")


def extract_json_block(text: str):
    """Parse the first fenced json block (or bare JSON value) in a response."""
    import ast

    candidates = [body for lang, body in _FENCE.findall(text) if lang.lower() in ("json", "")]
    candidates.append(text)
    for snippet in candidates:
        snippet = snippet.strip()
        try:
            return json.loads(snippet)
        except (json.JSONDecodeError, ValueError):
            pass
        try:
            return ast.literal_eval(snippet)
        except (ValueError, SyntaxError):
            continue
    raise JsonError("no parsable JSON block found in response")
