"""Scripted transport for dry runs and tests: no network, no compiler.

The transport inspects the incoming prompt, recognizes which pipeline stage
produced it, and fabricates a deterministic well-formed response. Stage
recognition keys off the formatting-instruction markers each template embeds.
"""
from __future__ import annotations

import hashlib
import re

from .types import content_hash

_THINK_FILLER = (
    "Let me walk through the code line by line. The function sets up its data "
    "and then enters the parallel construct, where the iteration space is "
    "divided among the team of threads. Each thread executes its share of the "
    "loop body, touching the shared variables visible at that point. I need to "
    "check every read and write against accesses from sibling threads: whether "
    "two threads can touch the same location, whether one of those accesses is "
    "a write, and whether any synchronization orders them. The loop body reads "
    "its inputs, computes a value, and stores it. Reads of distinct elements "
    "indexed by the loop variable are private to each iteration, so those are "
    "fine. The interesting part is any accumulation or shared scalar update, "
    "because a read-modify-write sequence is not atomic: one thread can read a "
    "stale value while another is mid-update. After weighing the scheduling "
    "possibilities and re-checking each access pair once more, I can settle on "
    "a conclusion consistent with how the threads actually interleave. "
)


def _det_int(seed: str, lo: int, hi: int) -> int:
    digest = hashlib.sha256(seed.encode("utf-8")).hexdigest()
    return lo + int(digest[:8], 16) % (hi - lo + 1)


def _extract(pattern, text, default=""):
    m = re.search(pattern, text, re.DOTALL)
    return m.group(1).strip() if m else default


class ScriptedTransport:
    """Deterministic stand-in for an LLM endpoint, one response per prompt."""

    def __init__(self):
        self.calls = 0

    def __call__(self, endpoint, messages, params) -> str:
        self.calls += 1
        prompt = messages[-1][1]
        for detect, respond in (
            ("closely related but distinct", self._variants),
            ("write the complete `harness.cc`", self._harness),
            ("complete the `reference.cc`", self._reference),
            ("implementations for the required dependency file", self._candidates),
            ("in-fill a long chain of thought for the given", self._race_cot),
            ("in-fill a long chain of thought analyzing Code A and Code B", self._caliper_cot),
            ("Identify all OpenMP parallel regions", self._regions),
            ("Predict the data races that ThreadSanitizer would catch", self._wm_race),
            ("Predict the work percentages of Code A and Code B", self._wm_caliper),
            ("Analyze the above OpenMP code for data races", self._self_feedback),
            ("propose an edit to fix the data race", self._edit),
            ("Apply the proposed edit", self._apply),
        ):
            if detect in prompt:
                return respond(prompt)
        return "<answer>\n[]\n</answer>"

    # -- explore ------------------------------------------------------------

    def _variants(self, prompt: str) -> str:
        n = int(_extract(r"propose (\d+) parallel programming problems", prompt, "2"))
        problem = _extract(r"<problem>\n(.*?)\n</problem>", prompt, "Compute a reduction over a vector.")
        perturbations = [
            "Use single-precision floats instead of doubles.",
            "Operate on a matrix stored in row-major order instead of a vector.",
            "Accumulate the maximum instead of the sum.",
            "Process only the even-indexed elements.",
            "Use integer inputs and saturate on overflow.",
            "Square each element before combining.",
        ]
        blocks = []
        for i in range(1, n + 1):
            tweak = perturbations[(i - 1) % len(perturbations)]
            blocks.append(f"<variant_{i}>\n{problem} Variation {i}: {tweak}\n</variant_{i}>")
        return "\n\n".join(blocks)

    def _harness(self, prompt: str) -> str:
        return (
            "```cpp\n"
            "#include <cmath>\n"
            "#include <cstdio>\n"
            "#include <random>\n"
            "#include <vector>\n"
            "\n"
            "double reference(const std::vector<double>& v, const std::vector<double>& w);\n"
            "double generated(const std::vector<double>& v, const std::vector<double>& w);\n"
            "\n"
            "bool validate() {\n"
            "    const size_t numTries = 10;\n"
            "    const size_t vectorSize = 1000;\n"
            "    std::mt19937 gen(12345);\n"
            "    std::uniform_real_distribution<> dis(-100.0, 100.0);\n"
            "    for (size_t i = 0; i < numTries; i++) {\n"
            "        std::vector<double> v(vectorSize), w(vectorSize);\n"
            "        for (size_t j = 0; j < vectorSize; ++j) { v[j] = dis(gen); w[j] = dis(gen); }\n"
            "        double correctResult = reference(v, w);\n"
            "        double testResult = generated(v, w);\n"
            "        if (std::abs(correctResult - testResult) > 1e-6) return false;\n"
            "    }\n"
            "    return true;\n"
            "}\n"
            "\n"
            "int main() {\n"
            "    bool ok = validate();\n"
            "    std::printf(ok ? \"VALIDATION: PASS\\n\" : \"VALIDATION: FAIL\\n\");\n"
            "    return ok ? 0 : 1;\n"
            "}\n"
            "```"
        )

    def _reference(self, prompt: str) -> str:
        return (
            "```cpp\n"
            "#include <vector>\n"
            "\n"
            "double reference(const std::vector<double>& v, const std::vector<double>& w) {\n"
            "    double acc = 0.0;\n"
            "    for (size_t i = 0; i < v.size(); ++i) {\n"
            "        acc += v[i] * w[i];\n"
            "    }\n"
            "    return acc;\n"
            "}\n"
            "```"
        )

    def _candidates(self, prompt: str) -> str:
        k = int(_extract(r"write (\d+) implementations", prompt, "2"))
        racy = "must have a data race" in prompt
        problem = _extract(r"<problem>\n(.*?)\n</problem>", prompt, "")
        salt = content_hash(problem + ("racy" if racy else "ineff"))[:6]
        blocks = []
        for i in range(1, k + 1):
            blocks.append(f"<implementation_{i}>\n```cpp\n{self._impl(i, racy, salt)}\n```\n</implementation_{i}>")
        return "\n\n".join(blocks)

    @staticmethod
    def _impl(index: int, racy: bool, salt: str) -> str:
        header = (
            "#include <vector>\n"
            "#include <omp.h>\n"
            "\n"
            f"double generated(const std::vector<double>& v, const std::vector<double>& w) {{\n"
            f"    double acc_{salt}_{index} = 0.0;\n"
            f"    double acc = acc_{salt}_{index};\n"
        )
        if racy:
            body = (
                "    #pragma omp parallel for\n"
                "    for (size_t i = 0; i < v.size(); ++i) {\n"
                "        acc += v[i] * w[i];\n"
                "    }\n"
            )
        else:
            variants = [
                "    #pragma omp parallel for reduction(+:acc) schedule(static,1)\n"
                "    for (size_t i = 0; i < v.size(); ++i) {\n"
                "        acc += v[i] * w[i];\n"
                "    }\n",
                "    #pragma omp parallel for\n"
                "    for (size_t i = 0; i < v.size(); ++i) {\n"
                "        #pragma omp critical\n"
                "        { acc += v[i] * w[i]; }\n"
                "    }\n",
                "    #pragma omp parallel for reduction(+:acc) schedule(dynamic,1)\n"
                "    for (size_t i = 0; i < v.size(); ++i) {\n"
                "        acc += v[i] * w[i];\n"
                "    }\n",
                "    #pragma omp parallel for\n"
                "    for (size_t i = 0; i < v.size(); ++i) {\n"
                "        #pragma omp atomic\n"
                "        acc += v[i] * w[i];\n"
                "    }\n",
            ]
            body = variants[(index - 1) % len(variants)]
        return header + body + "    return acc;\n}"

    # -- trace synthesis ------------------------------------------------------

    def _race_cot(self, prompt: str) -> str:
        answer = _extract(
            r"<answer>\n(Here is a list of data races.*?)</answer>", prompt)
        if not answer:
            answer = "Here is a list of data races that ThreadSanitizer will catch:\n\n[]\n"
        return f"<think>\n{_THINK_FILLER}\n</think>\n<answer>\n{answer}</answer>"

    def _caliper_cot(self, prompt: str) -> str:
        answer = _extract(r"<answer>\n(.*?)</answer>", prompt)
        return f"<think>\n{_THINK_FILLER}\n</think>\n<answer>\n{answer}</answer>"

    # -- toolchain ------------------------------------------------------------

    def _regions(self, prompt: str) -> str:
        code_block = _extract(r"```cpp\n(.*?)```", prompt)
        spans = []
        for line in code_block.split("\n"):
            m = re.match(r"(\d+): (.*)", line)
            if m and "#pragma omp parallel" in m.group(2):
                start = int(m.group(1))
                spans.append({"start": start, "end": start + 3})
        import json
        return "```json\n" + json.dumps(spans) + "\n```"

    # -- eval / fixing ----------------------------------------------------------

    def _wm_race(self, prompt: str) -> str:
        code = _extract(r"```cpp\n(.*?)```", prompt)
        racy = "reduction" not in code and "critical" not in code and "atomic" not in code
        if racy and "#pragma omp" in code:
            line = next((i + 1 for i, l in enumerate(code.split("\n")) if "+=" in l), 1)
            body = (f'[{{"type": "read/write race", "code_locations": ["generated.cc:{line}"]}}, '
                    f'{{"type": "write/write race", "code_locations": ["generated.cc:{line}"]}}]')
        else:
            body = "[]"
        return (f"<think>\n{_THINK_FILLER}\n</think>\n<answer>\n"
                f"Here is a list of data races that ThreadSanitizer will catch:\n\n{body}\n</answer>")

    def _wm_caliper(self, prompt: str) -> str:
        counts = [int(x) for x in re.findall(r"\d+", _extract(r"at thread counts ([\d, ]+)", prompt, "4, 16"))]
        code_a = _extract(r"# Code A\n```cpp\n(.*?)```", prompt)
        code_b = _extract(r"# Code B\n```cpp\n(.*?)```", prompt)
        def block(code, tag):
            base = _det_int(code + tag, 40, 95)
            lines = [f"## Region region_1_{4 + _det_int(code, 0, 3)}", "Caliper measures:"]
            for i, tc in enumerate(sorted(counts)):
                lines.append(f"- For {tc} threads, a work percentage of {max(5, base - 8 * i)}")
            return "\n".join(lines)
        return (f"<think>\n{_THINK_FILLER}\n</think>\n<answer>\n\n"
                f"## Caliper Measurements for Code A\n<measurements>\n{block(code_a, 'A')}\n</measurements>\n\n"
                f"## Caliper Measurements for Code B\n<measurements>\n{block(code_b, 'B')}\n</measurements>\n\n</answer>")

    def _self_feedback(self, prompt: str) -> str:
        return ("The accumulation into the shared scalar happens without synchronization, "
                "so concurrent read-modify-write sequences race (read/write and write/write).")

    def _edit(self, prompt: str) -> str:
        return ("Add a reduction clause to the parallel for directive so each thread "
                "accumulates privately and the results are combined at the join point.")

    def _apply(self, prompt: str) -> str:
        code = _extract(r"```cpp\n(.*?)```", prompt)
        fixed = []
        for line in code.split("\n"):
            if "#pragma omp parallel for" in line and "reduction" not in line:
                line = line.replace("#pragma omp parallel for", "#pragma omp parallel for reduction(+:acc)")
            fixed.append(line)
        return "```cpp\n" + "\n".join(fixed) + "\n```"
