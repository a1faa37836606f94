"""Detector output parsing, region scanning, and profiling instrumentation.

The recorded stderr under tests/data/tsan was captured from real sanitizer
runs; goldens.json freezes the hand-derived canonical reports.
"""
import json
import random
import re
import statistics
import time
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from ompworld import toolchain
from ompworld.errors import RegionError, SpanOutOfRange
from ompworld.toolchain import (
    CALIPER_HEADER, RegionSpan, ToolchainProfile, instrument_with_caliper,
    parse_caliper, parse_tsan, scan_regions, strip_instrumentation,
    validate_span_set,
)
from ompworld.types import RaceFinding

DATA = Path(__file__).parent / "data" / "tsan"


def load_goldens():
    return json.loads((DATA / "goldens.json").read_text())["cases"]


# ---------------------------------------------------------------------------
# Recorded-stderr golden suite
# ---------------------------------------------------------------------------

def test_parser_golden_suite():
    cases = load_goldens()
    assert len(cases) >= 10
    start = time.monotonic()
    for name, spec in sorted(cases.items()):
        raw = (DATA / f"{name}.txt").read_text()
        report, diagnostics = parse_tsan(raw, spec["candidate_file"])
        got = [
            {"race_type": f.race_type,
             "code_locations": [list(loc) for loc in f.code_locations]}
            for f in report.findings
        ]
        assert got == spec["findings"], f"golden mismatch for {name}"
        if spec.get("expect_non_candidate_diagnostic"):
            assert any(d["event"] == "non_candidate_location" for d in diagnostics)
    assert time.monotonic() - start < 1.0


def test_golden_suite_has_dual_finding_case():
    cases = load_goldens()
    assert any(len(spec["findings"]) >= 2 for spec in cases.values())


def test_parse_tsan_empty_output():
    report, diagnostics = parse_tsan("", "generated.cc")
    assert report.findings == ()
    assert not report.race_present


def test_parse_tsan_idempotent_canonical():
    raw = (DATA / "mixed_two_findings.txt").read_text()
    report, _ = parse_tsan(raw, "generated.cc")
    from ompworld.answers import canonicalize_race_report
    assert canonicalize_race_report(report.findings) == report


@given(st.text(max_size=3000))
def test_parse_tsan_never_raises(raw):
    report, diagnostics = parse_tsan(raw, "generated.cc")
    assert isinstance(diagnostics, list)
    for finding in report.findings:
        assert finding.race_type in ("read_write", "write_write")


@given(st.text(alphabet="=#:WARNINGThreadSanitizer datarce\n 0123456789byx", max_size=2000))
def test_parse_tsan_never_raises_injected_keywords(raw):
    parse_tsan(raw, "generated.cc")


# ---------------------------------------------------------------------------
# Region scanning
# ---------------------------------------------------------------------------

NESTED_CODE = """\
void h() {
    #pragma omp parallel
    {
        #pragma omp for
        for (int i = 0; i < n; ++i) {
            w[i] += 1;
        }
    }
}"""


def test_scan_regions_none():
    assert scan_regions("int main() { return 0; }") == []


def test_scan_regions_single_braced():
    code = "void f() {\n    #pragma omp parallel for\n    for (int i = 0; i < n; ++i) {\n        a[i] = b[i];\n    }\n}"
    assert scan_regions(code) == [RegionSpan(2, 5)]


def test_scan_regions_braceless_statement():
    code = "void f() {\n    #pragma omp parallel for\n    for (int i = 0; i < n; ++i)\n        a[i] = b[i];\n}"
    assert scan_regions(code) == [RegionSpan(2, 4)]


def test_scan_regions_nested():
    assert set(scan_regions(NESTED_CODE)) == {RegionSpan(2, 8), RegionSpan(4, 7)}


def test_scan_regions_skips_clause_only_directives():
    code = "void f() {\n    #pragma omp barrier\n    x++;\n}"
    assert scan_regions(code) == []


def test_validate_span_set_rejects_partial_overlap():
    with pytest.raises(RegionError):
        validate_span_set([RegionSpan(1, 5), RegionSpan(3, 8)])


# ---------------------------------------------------------------------------
# Instrumentation goldens (hand-derived)
# ---------------------------------------------------------------------------

SIMPLE_CODE = """\
void f() {
    #pragma omp parallel for
    for (int i = 0; i < n; ++i) {
        a[i] = b[i];
    }
}"""

SIMPLE_GOLDEN = """\
#include <caliper/cali.h>
void f() {
    CALI_MARK_BEGIN("region_2_5");
    #pragma omp parallel for
    for (int i = 0; i < n; ++i) {
        a[i] = b[i];
    }
    CALI_MARK_END("region_2_5");
}"""

TWO_REGION_CODE = """\
void g() {
    #pragma omp parallel for
    for (int i = 0; i < n; ++i)
        x[i] = 0;
    #pragma omp parallel for
    for (int i = 0; i < n; ++i)
        y[i] = 1;
}"""

TWO_REGION_GOLDEN = """\
#include <caliper/cali.h>
void g() {
    CALI_MARK_BEGIN("region_2_4");
    #pragma omp parallel for
    for (int i = 0; i < n; ++i)
        x[i] = 0;
        CALI_MARK_END("region_2_4");
    CALI_MARK_BEGIN("region_5_7");
    #pragma omp parallel for
    for (int i = 0; i < n; ++i)
        y[i] = 1;
        CALI_MARK_END("region_5_7");
}"""

NESTED_GOLDEN = """\
#include <caliper/cali.h>
void h() {
    CALI_MARK_BEGIN("region_2_8");
    #pragma omp parallel
    {
        CALI_MARK_BEGIN("region_4_7");
        #pragma omp for
        for (int i = 0; i < n; ++i) {
            w[i] += 1;
        }
        CALI_MARK_END("region_4_7");
    }
    CALI_MARK_END("region_2_8");
}"""

SHARED_START_CODE = """\
void k() {
    for (int i = 0; i < n; ++i) {
        p[i] = q[i];
    }
    s++;
    t++;
}"""

SHARED_START_GOLDEN = """\
#include <caliper/cali.h>
void k() {
    CALI_MARK_BEGIN("region_2_6");
    CALI_MARK_BEGIN("region_2_4");
    for (int i = 0; i < n; ++i) {
        p[i] = q[i];
    }
    CALI_MARK_END("region_2_4");
    s++;
    t++;
    CALI_MARK_END("region_2_6");
}"""

GOLDEN_CONFIGS = [
    ("single_region", SIMPLE_CODE, [RegionSpan(2, 5)], SIMPLE_GOLDEN),
    ("empty_span_set", SIMPLE_CODE, [], CALIPER_HEADER + "\n" + SIMPLE_CODE),
    ("two_disjoint", TWO_REGION_CODE, [RegionSpan(2, 4), RegionSpan(5, 7)], TWO_REGION_GOLDEN),
    ("nested_pair", NESTED_CODE, [RegionSpan(2, 8), RegionSpan(4, 7)], NESTED_GOLDEN),
    ("shared_start", SHARED_START_CODE, [RegionSpan(2, 6), RegionSpan(2, 4)], SHARED_START_GOLDEN),
]


@pytest.mark.parametrize("name,code,spans,golden", GOLDEN_CONFIGS, ids=[g[0] for g in GOLDEN_CONFIGS])
def test_instrumentation_golden(name, code, spans, golden):
    assert instrument_with_caliper(code, spans) == golden


@pytest.mark.parametrize("name,code,spans,golden", GOLDEN_CONFIGS, ids=[g[0] for g in GOLDEN_CONFIGS])
def test_instrumentation_deterministic(name, code, spans, golden):
    assert instrument_with_caliper(code, spans) == instrument_with_caliper(code, list(reversed(spans)))


def test_instrumentation_span_out_of_range():
    with pytest.raises(SpanOutOfRange):
        instrument_with_caliper(SIMPLE_CODE, [RegionSpan(2, 99)])


_MARKER = re.compile(r'^\s*CALI_MARK_(BEGIN|END)\("(region_\d+_\d+)"\);\s*$')


def assert_markers_paired_and_nested(instrumented, expected_labels):
    stack = []
    seen = []
    for line in instrumented.split("\n"):
        m = _MARKER.match(line)
        if not m:
            continue
        kind, label = m.groups()
        if kind == "BEGIN":
            stack.append(label)
            seen.append(label)
        else:
            assert stack, f"END {label} with empty stack"
            assert stack.pop() == label, f"mismatched END {label}"
    assert not stack, f"unclosed markers: {stack}"
    assert sorted(seen) == sorted(expected_labels)


def random_code(rng, n_lines):
    fragments = ["int a = 0;", "x[i] += 1;", "// comment", "{", "}", "", "    call();"]
    return "\n".join(rng.choice(fragments) for _ in range(n_lines))


def random_span_set(rng, n_lines):
    spans = []
    for _ in range(rng.randint(0, 6)):
        s = rng.randint(1, n_lines)
        e = rng.randint(s, n_lines)
        cand = RegionSpan(s, e)
        ok = True
        for other in spans:
            same = (cand.start_line, cand.end_line) == (other.start_line, other.end_line)
            if same or (cand.overlaps(other) and not (cand.contains(other) or other.contains(cand))):
                ok = False
                break
        if ok:
            spans.append(cand)
    return spans


def test_strip_inverse_randomized():
    rng = random.Random(42)
    for _ in range(100):
        n_lines = rng.randint(1, 40)
        code = random_code(rng, n_lines)
        spans = random_span_set(rng, n_lines)
        instrumented = instrument_with_caliper(code, spans)
        assert strip_instrumentation(instrumented) == code
        assert_markers_paired_and_nested(instrumented, [s.label for s in spans])


def test_golden_outputs_satisfy_marker_invariant():
    for _, code, spans, golden in GOLDEN_CONFIGS:
        assert_markers_paired_and_nested(golden, [s.label for s in spans])
        assert strip_instrumentation(golden) == code


# ---------------------------------------------------------------------------
# Profile report reduction
# ---------------------------------------------------------------------------

def records_json(rows):
    return json.dumps(rows)


def test_parse_caliper_basic_ratio():
    raw = records_json([
        {"path": "region_2_5", "sum#time.work": 75.0, "sum#time.barrier": 20.0, "sum#time.idle": 5.0},
    ])
    out = parse_caliper(raw, [RegionSpan(2, 5)])
    assert out["region_2_5"] == pytest.approx(75.0)


def test_parse_caliper_scale_invariance():
    rng = random.Random(3)
    for _ in range(25):
        work, barrier = rng.uniform(0.01, 50), rng.uniform(0, 50)
        scale = rng.uniform(0.1, 1000)
        base = records_json([{"path": "region_1_3", "time.work": work, "time.sync": barrier}])
        scaled = records_json([{"path": "region_1_3", "time.work": work * scale, "time.sync": barrier * scale}])
        spans = [RegionSpan(1, 3)]
        assert parse_caliper(base, spans)["region_1_3"] == pytest.approx(
            parse_caliper(scaled, spans)["region_1_3"])


def test_parse_caliper_clamped():
    raw = records_json([{"path": "region_1_1", "time.work": 5.0, "time.barrier": -1.0}])
    out = parse_caliper(raw, [RegionSpan(1, 1)])
    assert 0.0 <= out["region_1_1"] <= 100.0


def test_parse_caliper_zero_total_is_full_work():
    raw = records_json([{"path": "region_1_1", "time.work": 0.0, "time.barrier": 0.0}])
    assert parse_caliper(raw, [RegionSpan(1, 1)])["region_1_1"] == 100.0


def test_parse_caliper_missing_region_raises():
    from ompworld.errors import ProfileMissing
    raw = records_json([{"path": "region_1_1", "time.work": 5.0}])
    with pytest.raises(ProfileMissing):
        parse_caliper(raw, [RegionSpan(1, 1), RegionSpan(3, 4)])


def test_parse_caliper_bad_json_raises():
    from ompworld.errors import FormatError
    with pytest.raises(FormatError):
        parse_caliper("not json", [RegionSpan(1, 1)])


def test_profile_candidate_median_over_repeats(monkeypatch, tmp_path):
    from ompworld.types import CandidateCode, HarnessBundle

    candidate = CandidateCode.create(
        "p", SIMPLE_CODE, "m", "inefficient", 1)
    bundle = HarnessBundle(makefile="", harness_source="", reference_source="",
                           signature="double reference()")

    class FakeArtifact:
        workdir = str(tmp_path)
        binary_path = str(tmp_path / "app")

    runs = iter([60.0, 80.0, 70.0])

    monkeypatch.setattr(toolchain, "compile_bundle", lambda *a, **k: FakeArtifact())
    monkeypatch.setattr(
        toolchain, "run_with_caliper",
        lambda artifact, profile, tc: records_json(
            [{"path": "region_2_5", "time.work": next(runs), "time.barrier": 40.0}]))

    profile = toolchain.profile_candidate(bundle, candidate, [4],
                                          ToolchainProfile(repeat_count=3))
    # ratios: 60/100, 80/120, 70/110 -> median of (60.0, 66.67, 63.64)
    expected = statistics.median([60.0, 80.0 / 1.2, 70.0 / 1.1])
    assert profile.entries[("region_2_5", 4)] == pytest.approx(expected)
