"""Sandboxed compile/execute with ThreadSanitizer and Caliper, plus the
deterministic instrumentation transform and both tool-output parsers.

Each build runs in an isolated working directory driven by the bundle's
makefile; sanitizer and OpenMP flags come from a ToolchainProfile so hosts can
override the defaults.
"""
from __future__ import annotations

import json
import logging
import re
import shutil
import statistics
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .answers import canonicalize_race_report
from .errors import (
    CompileError, FormatError, JsonError, ProfileMissing, RegionError,
    RuntimeCrash, SpanOutOfRange, ToolTimeout,
)
from .gateway import SamplingParams, extract_json_block
from .types import CaliperProfile, CandidateCode, HarnessBundle, RaceFinding, RaceReport

log = logging.getLogger(__name__)

CALIPER_HEADER = "#include <caliper/cali.h>"


@dataclass(frozen=True)
class ToolchainProfile:
    compiler_command: str = "make"
    cxx: str = "g++"
    tsan_flags: str = "-fsanitize=thread -g -O1"
    openmp_flags: str = "-fopenmp"
    run_timeout: float = 120.0
    repeat_count: int = 3
    env_overrides: dict = field(default_factory=dict)
    work_metrics: tuple = ("work",)
    overhead_metrics: tuple = ("barrier", "sync", "idle")

    def __post_init__(self):
        if self.run_timeout <= 0:
            raise ValueError("run_timeout must be > 0")
        if self.repeat_count < 1:
            raise ValueError("repeat_count must be >= 1")


@dataclass(frozen=True)
class RegionSpan:
    start_line: int
    end_line: int

    def __post_init__(self):
        if not (1 <= self.start_line <= self.end_line):
            raise ValueError(f"invalid span ({self.start_line}, {self.end_line})")

    def contains(self, other: "RegionSpan") -> bool:
        return (self.start_line <= other.start_line and other.end_line <= self.end_line
                and (self.start_line, self.end_line) != (other.start_line, other.end_line))

    def overlaps(self, other: "RegionSpan") -> bool:
        return self.start_line <= other.end_line and other.start_line <= self.end_line

    @property
    def label(self) -> str:
        return f"region_{self.start_line}_{self.end_line}"


def validate_span_set(spans) -> list:
    """Spans must be pairwise disjoint or properly nested; returns them sorted."""
    spans = sorted(set(spans), key=lambda s: (s.start_line, -s.end_line))
    for i, a in enumerate(spans):
        for b in spans[i + 1:]:
            if a.overlaps(b) and not (a.contains(b) or b.contains(a)):
                raise RegionError(f"spans {a} and {b} overlap without nesting")
    return spans


@dataclass(frozen=True)
class BuildArtifact:
    workdir: str
    binary: str
    log: str
    sanitized: bool


def compile_bundle(bundle: HarnessBundle, candidate: CandidateCode,
                   profile: ToolchainProfile, sanitize: bool,
                   candidate_source: str = None, workdir: str = None) -> BuildArtifact:
    """Materialize the bundle in an isolated directory and build via its makefile."""
    workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="ompworld-build-"))
    workdir.mkdir(parents=True, exist_ok=True)
    (workdir / "Makefile").write_text(bundle.makefile, encoding="utf-8")
    (workdir / "harness.cc").write_text(bundle.harness_source, encoding="utf-8")
    (workdir / "reference.cc").write_text(bundle.reference_source, encoding="utf-8")
    (workdir / "generated.cc").write_text(candidate_source or candidate.source, encoding="utf-8")

    flags = profile.openmp_flags + ((" " + profile.tsan_flags) if sanitize else "")
    env = {"CXX": profile.cxx, "CXXFLAGS": f"-O1 -g {flags}", **profile.env_overrides}
    try:
        proc = subprocess.run(
            [profile.compiler_command], cwd=workdir, env={**_base_env(), **env},
            capture_output=True, text=True, timeout=profile.run_timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise ToolTimeout(f"build timed out after {profile.run_timeout}s") from exc
    build_log = proc.stdout + proc.stderr
    if proc.returncode != 0:
        raise CompileError(f"build failed (exit {proc.returncode})", log=build_log)
    binary = workdir / "app"
    if not binary.exists():
        raise CompileError("build produced no 'app' binary", log=build_log)
    return BuildArtifact(workdir=str(workdir), binary=str(binary), log=build_log, sanitized=sanitize)


def _base_env():
    import os
    return dict(os.environ)


def _run_binary(artifact: BuildArtifact, profile: ToolchainProfile, env: dict):
    try:
        return subprocess.run(
            [artifact.binary], cwd=artifact.workdir, env={**_base_env(), **env},
            capture_output=True, text=True, timeout=profile.run_timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise ToolTimeout(f"run timed out after {profile.run_timeout}s") from exc


RUN_SEPARATOR = "\n=== ompworld run {index} ===\n"


def run_with_tsan(artifact: BuildArtifact, profile: ToolchainProfile,
                  thread_count: int = 4) -> tuple:
    """Execute repeat_count times; returns (concatenated stderr, worst exit status).

    Races are schedule-dependent, so findings are unioned over repeats by the
    caller via parse_tsan on the concatenated output.
    """
    if not artifact.sanitized:
        raise ValueError("artifact was not built with the sanitizer")
    env = {
        "OMP_NUM_THREADS": str(thread_count),
        "TSAN_OPTIONS": "exitcode=66 halt_on_error=0",
        **profile.env_overrides,
    }
    chunks, status = [], 0
    for i in range(profile.repeat_count):
        proc = _run_binary(artifact, profile, env)
        chunks.append(RUN_SEPARATOR.format(index=i + 1))
        chunks.append(proc.stderr)
        if proc.returncode < 0:
            raise RuntimeCrash(f"run killed by signal {-proc.returncode}", output=proc.stderr)
        status = max(status, proc.returncode)
    return "".join(chunks), status


# ---------------------------------------------------------------------------
# ThreadSanitizer output parsing
# ---------------------------------------------------------------------------

_TSAN_BLOCK = re.compile(r"^==================$", re.MULTILINE)
_ACCESS_HEADER = re.compile(
    r"^\s*(?:(Previous)\s+)?([Aa]tomic\s+)?(Read|Write|read|write)\s+of\s+size\s+\d+\s+at\s+0x[0-9a-fA-F]+\s+by\s+",
)
_FRAME = re.compile(r"^\s*#\d+\s+(.*?)\s+(\S+?):(\d+)(?::\d+)?\s+\(")
_WARNING = re.compile(r"WARNING: ThreadSanitizer: data race")


def _classify(kinds) -> str:
    writes = sum(1 for k in kinds if k == "write")
    return "write_write" if writes >= 2 else "read_write"


def parse_tsan(raw_output: str, candidate_file_name: str = "generated.cc"):
    """Parse TSan stderr into a canonical RaceReport plus diagnostics.

    Never raises on arbitrary text: unrecognized blocks land in the
    diagnostics list. Location attribution prefers the innermost stack frame
    in the candidate file, else the innermost frame overall (flagged).
    """
    findings, diagnostics = [], []
    parts = _TSAN_BLOCK.split(raw_output or "")
    for block in parts:
        if not _WARNING.search(block):
            continue
        accesses = _parse_accesses(block)
        race_accesses = [a for a in accesses if not a["atomic"]]
        if len(race_accesses) < 2:
            race_accesses = accesses
        if len(race_accesses) < 2:
            diagnostics.append({"event": "unrecognized_block", "snippet": block.strip()[:400]})
            continue
        first, second = race_accesses[0], race_accesses[1]
        race_type = _classify([first["kind"], second["kind"]])
        locations = []
        for access in (first, second):
            loc, in_candidate = _attribute(access["frames"], candidate_file_name)
            if loc is None:
                continue
            if not in_candidate:
                diagnostics.append({"event": "non_candidate_location",
                                    "location": f"{loc[0]}:{loc[1]}"})
            locations.append(loc)
        if not locations:
            diagnostics.append({"event": "no_source_locations", "snippet": block.strip()[:400]})
            continue
        findings.append(RaceFinding(race_type=race_type, code_locations=tuple(sorted(set(locations)))))
    return canonicalize_race_report(findings), diagnostics


def _parse_accesses(block: str) -> list:
    accesses = []
    current = None
    for line in block.split("\n"):
        m = _ACCESS_HEADER.match(line)
        if m:
            current = {
                "kind": m.group(3).lower(),
                "atomic": bool(m.group(2)),
                "previous": bool(m.group(1)),
                "frames": [],
            }
            accesses.append(current)
            continue
        if current is not None:
            fm = _FRAME.match(line)
            if fm:
                current["frames"].append((fm.group(2), int(fm.group(3))))
            elif line.strip() == "":
                current = None
    return accesses


def _attribute(frames, candidate_file_name):
    for path, line in frames:
        name = path.rsplit("/", 1)[-1]
        if name == candidate_file_name:
            return (name, line), True
    for path, line in frames:
        name = path.rsplit("/", 1)[-1]
        if name.endswith((".cc", ".cpp", ".c", ".h", ".hpp")):
            return (name, line), False
    if frames:
        path, line = frames[0]
        return (path.rsplit("/", 1)[-1], line), False
    return None, False


# ---------------------------------------------------------------------------
# Parallel-region identification
# ---------------------------------------------------------------------------

REGION_PARAMS = SamplingParams(temperature=0.0, top_p=0.95, max_tokens=2048)
_PRAGMA = re.compile(r"^\s*#pragma\s+omp\s+(.*)$")


def scan_regions(code: str) -> list:
    """Textual fallback: locate `#pragma omp` regions by brace matching.

    The span runs from the pragma line to the closing brace of the following
    block, or to the end of a single statement when no brace follows.
    """
    lines = code.split("\n")
    spans = []
    for idx, line in enumerate(lines):
        m = _PRAGMA.match(line)
        if not m:
            continue
        directive = m.group(1)
        # clause-only directives that do not open a region of their own
        if re.match(r"\s*(declare|threadprivate|barrier|flush|taskwait|taskyield)\b", directive):
            continue
        start = idx + 1
        end = _find_block_end(lines, idx)
        if end is not None and end >= start:
            spans.append(RegionSpan(start_line=start, end_line=end))
    return validate_span_set(spans)


def _find_block_end(lines, pragma_idx):
    depth = 0
    opened = False
    for j in range(pragma_idx + 1, len(lines)):
        stripped = lines[j].strip()
        if _PRAGMA.match(lines[j]) and not opened:
            # nested pragma immediately following (e.g. parallel then for):
            # keep scanning; the block belongs to both
            continue
        for ch in lines[j]:
            if ch == "{":
                depth += 1
                opened = True
            elif ch == "}":
                depth -= 1
                if opened and depth == 0:
                    return j + 1
        if not opened and stripped.endswith(";"):
            return j + 1
    return None


def identify_regions(code: str, gateway=None, endpoint=None) -> list:
    """LLM-backed region identification with a textual fallback."""
    if not code.strip():
        raise ValueError("code must be non-empty")
    n_lines = len(code.split("\n"))
    if gateway is not None and endpoint is not None:
        prompt = prompts.REGION_ID_PROMPT.format(code_with_line_numbers=prompts.number_lines(code))
        for attempt in range(3):
            try:
                text = gateway.complete(endpoint, [("user", prompt)], REGION_PARAMS, salt=attempt)[0]
                raw = extract_json_block(text)
                spans = [RegionSpan(int(item["start"]), int(item["end"])) for item in raw]
                for span in spans:
                    if span.end_line > n_lines:
                        raise SpanOutOfRange(f"span {span} beyond {n_lines} lines")
                return validate_span_set(spans)
            except (FormatError, JsonError, RegionError, SpanOutOfRange,
                    KeyError, TypeError, ValueError) as exc:
                log.warning("region identification attempt %d rejected: %s", attempt + 1, exc)
    try:
        return scan_regions(code)
    except RegionError as exc:
        raise RegionError(f"both LLM and fallback region scans failed: {exc}") from exc


# ---------------------------------------------------------------------------
# Caliper instrumentation
# ---------------------------------------------------------------------------

_MARKER = re.compile(r'^\s*CALI_MARK_(?:BEGIN|END)\("region_\d+_\d+"\);\s*$')


def instrument_with_caliper(code: str, spans) -> str:
    """Insert begin/end markers around each span and the header at the top.

    Deterministic; stripping all inserted lines recovers the original code
    byte-exactly. Nested spans produce properly nested marker pairs.
    """
    lines = code.split("\n")
    spans = validate_span_set(spans)
    for span in spans:
        if span.end_line > len(lines):
            raise SpanOutOfRange(f"span {span} beyond {len(lines)} code lines")

    # insertion positions in original-line coordinates: BEGIN goes before
    # line s (index s-1), END after line e (index e)
    inserts = {}
    for span in spans:
        indent_begin = _indent_of(lines[span.start_line - 1])
        indent_end = _indent_of(lines[span.end_line - 1])
        inserts.setdefault(span.start_line - 1, {"end": [], "begin": []})["begin"].append(
            (span, f'{indent_begin}CALI_MARK_BEGIN("{span.label}");')
        )
        inserts.setdefault(span.end_line, {"end": [], "begin": []})["end"].append(
            (span, f'{indent_end}CALI_MARK_END("{span.label}");')
        )

    # bottom-to-top so earlier indices stay valid; larger spans open first
    # and close last at shared boundaries
    for pos in sorted(inserts, reverse=True):
        group = inserts[pos]
        ends = [text for _, text in sorted(group["end"], key=lambda x: x[0].end_line - x[0].start_line)]
        begins = [text for _, text in sorted(group["begin"], key=lambda x: -(x[0].end_line - x[0].start_line))]
        lines[pos:pos] = ends + begins

    lines.insert(0, CALIPER_HEADER)
    return "\n".join(lines)


def _indent_of(line: str) -> str:
    return line[: len(line) - len(line.lstrip())]


def strip_instrumentation(code: str) -> str:
    """Inverse of instrument_with_caliper: drop markers and the first header line."""
    out = []
    header_dropped = False
    for line in code.split("\n"):
        if not header_dropped and line.strip() == CALIPER_HEADER:
            header_dropped = True
            continue
        if _MARKER.match(line):
            continue
        out.append(line)
    return "\n".join(out)


# ---------------------------------------------------------------------------
# Caliper runs and report parsing
# ---------------------------------------------------------------------------

def run_with_caliper(artifact: BuildArtifact, profile: ToolchainProfile, thread_count: int) -> str:
    """One profiled run; returns the machine-readable report text (JSON)."""
    report_path = Path(artifact.workdir) / f"caliper-{thread_count}.json"
    env = {
        "OMP_NUM_THREADS": str(thread_count),
        "CALI_CONFIG": f"hatchet-region-profile,output={report_path},output.format=json",
        **profile.env_overrides,
    }
    proc = _run_binary(artifact, profile, env)
    if proc.returncode < 0:
        raise RuntimeCrash(f"profiled run killed by signal {-proc.returncode}", output=proc.stderr)
    if report_path.exists():
        return report_path.read_text(encoding="utf-8")
    # some configs stream the report to stdout instead
    return proc.stdout


def parse_caliper(raw: str, spans, profile: ToolchainProfile = ToolchainProfile()) -> dict:
    """Reduce one run's report to {region_label: work_percentage}.

    The report is a JSON array of records carrying a region path plus timing
    metrics; metric name fragments for work and overhead categories are
    configurable on the ToolchainProfile. work% = 100 * work / (work +
    overhead), clamped to [0, 100].
    """
    try:
        records = json.loads(raw)
    except (json.JSONDecodeError, ValueError) as exc:
        raise FormatError(f"unparsable profile report: {exc}") from exc
    if isinstance(records, dict):
        records = records.get("records", [])

    wanted = {span.label for span in spans}
    sums = {}
    for record in records:
        if not isinstance(record, dict):
            continue
        label = str(record.get("path") or record.get("region") or "").split("/")[-1]
        if wanted and label not in wanted:
            continue
        work = _metric_sum(record, profile.work_metrics)
        overhead = _metric_sum(record, profile.overhead_metrics)
        if work is None:
            continue
        acc = sums.setdefault(label, [0.0, 0.0])
        acc[0] += work
        acc[1] += overhead or 0.0

    out = {}
    for label, (work, overhead) in sums.items():
        total = work + overhead
        pct = 100.0 if total <= 0 else 100.0 * work / total
        out[label] = min(100.0, max(0.0, pct))
    missing = wanted - set(out)
    if missing:
        raise ProfileMissing(f"regions absent from profile report: {sorted(missing)}")
    return out


def _metric_sum(record: dict, fragments) -> float:
    total, found = 0.0, False
    for key, value in record.items():
        if not isinstance(value, (int, float)):
            continue
        key_l = key.lower()
        if any(frag in key_l for frag in fragments):
            total += float(value)
            found = True
    return total if found else None


def profile_candidate(bundle: HarnessBundle, candidate: CandidateCode,
                      thread_counts, profile: ToolchainProfile = ToolchainProfile(),
                      gateway=None, endpoint=None) -> CaliperProfile:
    """Instrument, build, and profile one candidate over all thread counts.

    Cells whose runs fail are marked None rather than failing the profile.
    """
    spans = identify_regions(candidate.source, gateway, endpoint)
    instrumented = instrument_with_caliper(candidate.source, spans)
    shifted = [RegionSpan(s.start_line, s.end_line) for s in spans]  # labels keep original lines
    artifact = compile_bundle(bundle, candidate, profile, sanitize=False,
                              candidate_source=instrumented)
    entries = {}
    for tc in thread_counts:
        per_run = []
        for _ in range(profile.repeat_count):
            try:
                raw = run_with_caliper(artifact, profile, tc)
                per_run.append(parse_caliper(raw, shifted, profile))
            except (FormatError, ProfileMissing, RuntimeCrash, ToolTimeout) as exc:
                log.warning("profiling run failed at %d threads: %s", tc, exc)
        for span in shifted:
            values = [run[span.label] for run in per_run if span.label in run]
            entries[(span.label, tc)] = statistics.median(values) if values else None
    return CaliperProfile(entries=entries, thread_counts=tuple(thread_counts))


def validate_correctness(bundle: HarnessBundle, candidate: CandidateCode,
                         profile: ToolchainProfile = ToolchainProfile(),
                         thread_count: int = 4):
    """True iff the harness validation entry point reports success."""
    try:
        artifact = compile_bundle(bundle, candidate, profile, sanitize=False)
    except (CompileError, ToolTimeout) as exc:
        return False, f"compile failed: {exc}"
    env = {"OMP_NUM_THREADS": str(thread_count), **profile.env_overrides}
    try:
        proc = _run_binary(artifact, profile, env)
    except ToolTimeout as exc:
        return False, str(exc)
    passed = proc.returncode == 0 and "VALIDATION: PASS" in proc.stdout
    return passed, proc.stdout.strip()[:200]


def doctor() -> dict:
    """Report host toolchain availability for the CLI doctor subcommand."""
    report = {}
    report["make"] = shutil.which("make") is not None
    for cxx in ("g++", "clang++"):
        if shutil.which(cxx):
            report["cxx"] = cxx
            break
    else:
        report["cxx"] = None
    report["openmp"] = False
    report["tsan"] = False
    if report["cxx"]:
        with tempfile.TemporaryDirectory() as tmp:
            src = Path(tmp) / "probe.cc"
            src.write_text("#include <omp.h>\nint main(){return omp_get_max_threads()>0?0:1;}\n")
            for name, flags in (("openmp", ["-fopenmp"]), ("tsan", ["-fopenmp", "-fsanitize=thread"])):
                proc = subprocess.run(
                    [report["cxx"], *flags, str(src), "-o", str(Path(tmp) / f"probe-{name}")],
                    capture_output=True,
                )
                report[name] = proc.returncode == 0
    report["caliper"] = _probe_caliper(report.get("cxx"))
    return report


def _probe_caliper(cxx) -> bool:
    if not cxx:
        return False
    with tempfile.TemporaryDirectory() as tmp:
        src = Path(tmp) / "probe.cc"
        src.write_text(f'{CALIPER_HEADER}\nint main() {{ CALI_MARK_BEGIN("x"); CALI_MARK_END("x"); return 0; }}\n')
        proc = subprocess.run([cxx, str(src), "-lcaliper", "-o", str(Path(tmp) / "probe")],
                              capture_output=True)
        return proc.returncode == 0
