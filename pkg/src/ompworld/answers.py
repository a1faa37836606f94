"""Lossless render/parse between structured tool outcomes and answer text.

The rendered forms are the exact blocks embedded in reasoning-trace prompts
and expected back from trained models, so both directions must round-trip.
Rendering always emits double-quoted JSON; parsing tolerates single quotes
and surrounding prose.
"""
from __future__ import annotations

import ast
import json
import re

from .errors import FormatError
from .types import CaliperProfile, RaceFinding, RaceReport

RACE_TYPE_LABELS = {
    "read_write": "read/write race",
    "write_write": "write/write race",
}
_LABEL_TO_TYPE = {v: k for k, v in RACE_TYPE_LABELS.items()}


def canonicalize_race_report(findings) -> RaceReport:
    """Sort findings, sort locations within each, drop duplicates.

    Idempotent and invariant under input permutation; total over any iterable
    of findings.
    """
    canonical = []
    seen = set()
    for finding in findings:
        locations = tuple(sorted({(f, int(line)) for f, line in finding.code_locations}))
        key = (finding.race_type, locations)
        if key in seen:
            continue
        seen.add(key)
        canonical.append(RaceFinding(race_type=finding.race_type, code_locations=locations))
    canonical.sort(key=lambda f: (f.race_type, f.code_locations))
    return RaceReport(findings=tuple(canonical))


def render_race_answer(report: RaceReport) -> str:
    """Render a canonical report as the JSON answer block."""
    payload = [
        {
            "type": RACE_TYPE_LABELS[f.race_type],
            "code_locations": [f"{name}:{line}" for name, line in f.code_locations],
        }
        for f in report.findings
    ]
    return json.dumps(payload, indent=2)


def _find_bracketed(text: str):
    """Yield candidate [...] slices starting at each '[' in the text.

    Tried in order of appearance so prose with stray brackets before the real
    block cannot mask it.
    """
    for start in (i for i, ch in enumerate(text) if ch == "["):
        depth = 0
        in_string = None
        prev = ""
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if ch == in_string and prev != "\\":
                    in_string = None
            elif ch in "'\"":
                in_string = ch
            elif ch == "[":
                depth += 1
            elif ch == "]":
                depth -= 1
                if depth == 0:
                    yield text[start : i + 1]
                    break
            prev = ch


def _loads_tolerant(snippet: str):
    try:
        return json.loads(snippet)
    except (json.JSONDecodeError, ValueError):
        pass
    try:
        return ast.literal_eval(snippet)
    except (ValueError, SyntaxError):
        return None


def parse_race_answer(text: str) -> RaceReport:
    """Parse an answer block back to a canonical RaceReport.

    Accepts single- or double-quoted keys and ignores prose around the list.
    """
    for snippet in _find_bracketed(text):
        value = _loads_tolerant(snippet)
        if value is None or not isinstance(value, list):
            continue
        findings = []
        valid = True
        for item in value:
            if not isinstance(item, dict) or "type" not in item or "code_locations" not in item:
                valid = False
                break
            race_type = _LABEL_TO_TYPE.get(str(item["type"]).strip().lower())
            if race_type is None:
                valid = False
                break
            locations = []
            for loc in item["code_locations"]:
                name, _, line = str(loc).rpartition(":")
                if not name or not line.isdigit():
                    valid = False
                    break
                locations.append((name, int(line)))
            if not valid or not locations:
                valid = False
                break
            findings.append(RaceFinding(race_type=race_type, code_locations=tuple(locations)))
        if valid:
            return canonicalize_race_report(findings)
    raise FormatError("no parsable race list found in answer text")


# ---------------------------------------------------------------------------
# Caliper measurement blocks
# ---------------------------------------------------------------------------

def format_percentage(value: float) -> str:
    rounded = round(float(value), 2)
    if rounded == int(rounded):
        return str(int(rounded))
    return f"{rounded:.2f}".rstrip("0")


def canonicalize_caliper_profile(profile: CaliperProfile) -> CaliperProfile:
    """Round values to 2 decimals and sort thread counts."""
    return CaliperProfile(
        entries={
            key: (None if value is None else round(float(value), 2))
            for key, value in profile.entries.items()
        },
        thread_counts=tuple(sorted(profile.thread_counts)),
        region_weights=profile.region_weights,
    )


def render_caliper_answer(profile: CaliperProfile, region_snippets=None) -> str:
    """Render the measurement block for every region of a profile.

    ``region_snippets`` maps region label -> source snippet (or is a single
    string when the profile has exactly one region).
    """
    regions = profile.regions
    if isinstance(region_snippets, str):
        if len(regions) != 1:
            raise FormatError("single snippet given for a multi-region profile")
        region_snippets = {regions[0]: region_snippets}
    region_snippets = region_snippets or {}

    blocks = []
    for region in regions:
        lines = [f"## Region {region}"]
        snippet = region_snippets.get(region)
        if snippet:
            lines.append("For code snippet:")
            lines.append(snippet.rstrip("\n"))
            lines.append("")
        lines.append("Caliper measures:")
        for tc in sorted(profile.thread_counts):
            value = profile.entries[(region, tc)]
            if value is None:
                lines.append(f"- For {tc} threads, measurement failed")
            else:
                lines.append(f"- For {tc} threads, a work percentage of {format_percentage(value)}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


_REGION_HEADER = re.compile(r"^##\s+Region\s+(\S+)\s*$", re.MULTILINE)
_MEASURE_LINE = re.compile(
    r"^-\s*For\s+(\d+)\s+threads?,\s*(?:a\s+work\s+percentage\s+of\s+([0-9]+(?:\.[0-9]+)?)|measurement failed)\s*$",
    re.MULTILINE,
)


def parse_caliper_answer(text: str) -> CaliperProfile:
    """Parse rendered measurement blocks back into a CaliperProfile."""
    headers = list(_REGION_HEADER.finditer(text))
    sections = []
    if headers:
        for i, header in enumerate(headers):
            end = headers[i + 1].start() if i + 1 < len(headers) else len(text)
            sections.append((header.group(1), text[header.end() : end]))
    else:
        sections.append(("region", text))

    entries = {}
    counts_by_region = {}
    for region, body in sections:
        matches = list(_MEASURE_LINE.finditer(body))
        if not matches:
            raise FormatError(f"no measurement lines for region {region!r}")
        for m in matches:
            tc = int(m.group(1))
            value = float(m.group(2)) if m.group(2) is not None else None
            if value is not None and not (0.0 <= value <= 100.0):
                raise FormatError(f"work percentage out of range: {value}")
            entries[(region, tc)] = value
            counts_by_region.setdefault(region, set()).add(tc)

    all_counts = set().union(*counts_by_region.values())
    for region, counts in counts_by_region.items():
        if counts != all_counts:
            raise FormatError(f"region {region!r} missing thread counts {sorted(all_counts - counts)}")
    return CaliperProfile(entries=entries, thread_counts=tuple(sorted(all_counts)))
