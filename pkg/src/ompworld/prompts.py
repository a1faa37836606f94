"""Prompt templates for every LLM stage of the pipeline.

Templates for edit/apply steps and the world-model user prompt are our own
defaults (configurable); the generation and trace-synthesis templates define
the tag/fence contract the extractors in `gateway` rely on.
"""

VARIANT_PROMPT = """\
<problem>
{problem}
</problem>

# Instructions
For the following problem, propose {num_variants} parallel programming problems that are closely related but distinct from the above problem (a small perturbation).

In your perturbed problem variants, you can slightly change one or more of the following about the problem: (1) the input data type and data structure (e.g., arrays can become matrices, integers can become floats, etc.), (2) the algorithmic details (e.g., slightly different operations, slightly different control flow, etc.), (3) the problem statement, or (4) the size or dimensionality of the inputs.

# Formatting Instructions
Your response must only contain {num_variants} problem descriptions inside numbered tags as follows:

<variant_1>
{{PERTURBED PROBLEM STATEMENT 1 GOES HERE.}}
</variant_1>

...

<variant_{num_variants}>
{{PERTURBED PROBLEM STATEMENT {num_variants} GOES HERE.}}
</variant_{num_variants}>

Do NOT include any additional text or explanations.
"""

HARNESS_PROMPT = """\
<Makefile>
```
{makefile}
```
</Makefile>

# Instructions
For the following problem, write the complete `harness.cc` file:

<problem>
{problem}
</problem>

Requirements for `harness.cc`:
    1. Declare the `reference` and `generated` functions with identical signatures appropriate for the problem (both are defined in separate files `reference.cc` and `generated.cc`).
    2. Define a `bool validate()` function that generates randomized test inputs, calls both `reference` and `generated` on the same inputs, and compares their outputs, returning true only when all comparisons pass.
    3. Define a `main` function that calls `validate()`, prints "VALIDATION: PASS" or "VALIDATION: FAIL", and returns 0 on pass and 1 on fail.
    4. The file must compile as a dependency in the compilation process provided in the given Makefile.

# Formatting Instructions
Your response must only contain a Markdown code block as follows:

```cpp
{{THE COMPLETE `harness.cc` CODE GOES HERE.}}
```

Do NOT include any additional code or explanations.
"""

REFERENCE_PROMPT = """\
<Makefile>
```
{makefile}
```
</Makefile>

<harness.cc>
```cpp
{harness_cc}
```
</harness.cc>

<reference.cc>
```cpp
{reference_prompt_cc}
```
</reference.cc>

# Instructions
For the following problem, complete the `reference.cc` code by following the coding instructions given in-line:

<problem>
{problem}
</problem>

# Formatting Instructions
Your response must only contain a Markdown code block as follows:

```cpp
{{THE COMPLETED `reference.cc` CODE GOES HERE.}}
```

Do NOT include any additional code or explanations.
"""

REFERENCE_STUB = """\
// Complete this file with a serial reference implementation for the problem.
// It must define exactly one function named `reference` whose signature matches
// the declaration in harness.cc. Do not use OpenMP here.
"""

_CANDIDATE_COMMON = """\
<Makefile>
```
{makefile}
```
</Makefile>

<harness.cc>
```cpp
{harness_cc}
```
</harness.cc>

<reference.cc>
```cpp
{reference_cc}
```
</reference.cc>

# Instructions
For the following problem, write {k} implementations for the required dependency file `generated.cc`.

<problem>
{problem}
</problem>

Keep in mind for each of the {k} implementations:
    1. Your `generated.cc` must include a definition of the `generated` function. Do not forget to `#include` anything that is necessary for the `generated` function.
    2. Your `generated.cc` needs to be compatible as a dependency in the compilation process provided in the given Makefile.
    3. Your implementation of the `generated` function must use a function signature identical to the one declared in `reference.cc`.
    4. Your implementation of the `generated` function must use OpenMP.
    5. {mode_instruction}
    6. Do NOT write any code comments whatsoever within your generated code.
    7. Each of the {k} implementations must be distinct from one another in terms of the OpenMP directive(s) or the parallelization strategy used{mode_distinct}.

# Formatting Instructions
Your response must only contain {k} Markdown code blocks inside numbered tags as follows:

<implementation_1>
```cpp
{{THE COMPLETE `generated.cc` CODE GOES HERE. THERE MUST BE NO CODE COMMENTS.}}
```
</implementation_1>

...

<implementation_{k}>
```cpp
{{THE COMPLETE `generated.cc` CODE GOES HERE. THERE MUST BE NO CODE COMMENTS.}}
```
</implementation_{k}>

Do NOT include any additional code or explanations.
"""

MODE_INSTRUCTIONS = {
    "racy": (
        "Your implementation of the `generated` function must have a data race.",
        " in order to exhibit distinct data race scenarios",
    ),
    "inefficient": (
        "Your implementation of the `generated` function must have some parallelization "
        "inefficiency, e.g., synchronization overhead, load imbalance, thread management "
        "overhead, inefficient scheduling, limited parallelism, etc.",
        " in order to exhibit distinct inefficiency scenarios",
    ),
}


def candidate_prompt(makefile, harness_cc, reference_cc, problem, mode, k):
    instruction, distinct = MODE_INSTRUCTIONS[mode]
    return _CANDIDATE_COMMON.format(
        makefile=makefile, harness_cc=harness_cc, reference_cc=reference_cc,
        problem=problem, k=k, mode_instruction=instruction, mode_distinct=distinct,
    )


RACE_COT_PROMPT = """\
# Given OpenMP Code
```cpp
{generated_cc}
```

# Instructions
Your job is to think and predict data races that would be caught by ThreadSanitizer in the above OpenMP code.

## Step 1: Think
- Inside the tags <think> and </think>, in-fill a long chain of thought for the given OpenMP code line by line.
- In this chain of thought, go over each code line, write that code line, what the code line does and a verbose logical explanation why that line would or wouldn't lead ThreadSanitizer to catch a data race. Thoroughly explore every important or non-trivial code line or code block by engaging in a comprehensive cycle of analysis, summarizing, exploration, reassessment, reflection, back-tracking, and iteration to develop a well-considered thinking process about the detection of data races.
- Inside <think> and </think>, NEVER mention or talk about you having prior knowledge of data race(s) present or prior knowledge of races thrown by ThreadSanitizer. You are only in-filling the thought for the given code.
- The conclusion of the in-filled chain of thought, however, must lead to the correct answer i.e., the ThreadSanitizer's race detections as provided below.

## Step 2: Answer
After writing the thought inside the tags <think> and </think>, write verbatim (remember verbatim) the following answer inside the tags <answer> and </answer>:
<answer>
Here is a list of data races that ThreadSanitizer will catch:

{race_outcome}

</answer>

# Formatting Instructions
In summary, your overall response will be:

<think>
{{IN-FILLED CHAIN OF THOUGHT GOES HERE LEADING TO CORRECT CONCLUSION.}}
</think>
<answer>
Here is a list of data races that ThreadSanitizer will catch:

{race_outcome}

</answer>
"""

RACE_COT_PROMPT_NO_HINDSIGHT = """\
# Given OpenMP Code
```cpp
{generated_cc}
```

# Instructions
Your job is to think and predict data races that would be caught by ThreadSanitizer in the above OpenMP code.

## Step 1: Think
- Inside the tags <think> and </think>, write a long chain of thought for the given OpenMP code line by line, analyzing for each line whether it would lead ThreadSanitizer to catch a data race.

## Step 2: Answer
After thinking, write inside the tags <answer> and </answer> the sentence "Here is a list of data races that ThreadSanitizer will catch:" followed by a JSON array where each element has the keys "type" (either "read/write race" or "write/write race") and "code_locations" (a list of "file:line" strings). Use an empty array [] when no races will be caught.

# Formatting Instructions
In summary, your overall response will be:

<think>
{{CHAIN OF THOUGHT GOES HERE.}}
</think>
<answer>
Here is a list of data races that ThreadSanitizer will catch:

{{JSON ARRAY OF RACES GOES HERE.}}

</answer>
"""

CALIPER_COT_PROMPT = """\
# Code A
```cpp
{generated_cc_a}
```

# Code B
```cpp
{generated_cc_b}
```

# Broad Definition of Caliper's Work Percentage
The percentage of total OpenMP thread time spent doing useful application work, as opposed to OpenMP runtime overhead (e.g., barriers, synchronization, idle time, etc.).

# Instructions
Code A and Code B are two alternative implementations of the same functionality. Your job is to think and predict work percentages of the given Code A and Code B as would be measured by Caliper, by identifying analogous parallel region pairs from Code A and Code B and focusing on the difference in work percentages between regions within a pair.

## Step 1: Think
- Inside the tags <think> and </think>, in-fill a long chain of thought analyzing Code A and Code B.
- In this chain of thought, identify pairs of analogous parallel regions from Code A and Code B and analyze the two parallel regions together side by side in terms of their differences.
- Inside <think> and </think>, NEVER mention or talk about you having prior knowledge of Caliper measurements. You are in-filling or smoothing the chain of thought analyzing codes A and B -- NOT post-hoc explaining of Caliper measurements.
- The conclusion of the in-filled chain of thought, however, must lead to the correct answer i.e., the correct relative difference in Caliper measurements between analogous parallel regions from codes A and B.

## Step 2: Answer
After writing the thought inside the tags <think> and </think>, write verbatim (remember verbatim) the following answer inside the tags <answer> and </answer>:
<answer>

## Caliper Measurements for Code A
<measurements>
{measurements_a}
</measurements>

## Caliper Measurements for Code B
<measurements>
{measurements_b}
</measurements>

</answer>

# Formatting Instructions
In summary, your overall response will be:

<think>
{{IN-FILLED CHAIN OF THOUGHT GOES HERE LEADING TO CORRECT ANSWER.}}
</think>
<answer>

## Caliper Measurements for Code A
<measurements>
{measurements_a}
</measurements>

## Caliper Measurements for Code B
<measurements>
{measurements_b}
</measurements>

</answer>
"""

REGION_ID_PROMPT = """\
# Given OpenMP Code with Line Numbers
```cpp
{code_with_line_numbers}
```

# Instructions
Identify all OpenMP parallel regions. Return the identified regions as a JSON array with each element in the array containing integer fields called 'start' and 'end'.

Specifically,
- Focus on identifying all OpenMP parallel regions in the given code (start = #pragma line, end = closing brace of that parallel region).
- Regions may be nested as long as each region captures a distinct #pragma and its associated parallel region.
- Use the original line numbers from the given code above in your returned JSON array to demarcate the regions.

# Formatting Instructions
Your response must ONLY contain a valid Markdown JSON block containing a JSON array like:
```json
[
  {{"start": integer, "end": integer}},
  ...
]
```
Do NOT include any additional code or explanations, just the valid Markdown JSON block.
"""

# World-model user prompts (the inference/training-time prompt). Our own
# construction; shared between dataset export and eval so supervision and
# benchmark inputs stay aligned.

WORLD_MODEL_RACE_PROMPT = """\
# Given OpenMP Code
```cpp
{generated_cc}
```

# Instructions
Predict the data races that ThreadSanitizer would catch in the above OpenMP code. First think step by step inside <think> and </think> tags, reasoning line by line about thread interactions and synchronization. Then, inside <answer> and </answer> tags, write the sentence "Here is a list of data races that ThreadSanitizer will catch:" followed by a JSON array where each element has the keys "type" (either "read/write race" or "write/write race") and "code_locations" (a list of "file:line" strings). Use an empty array [] when no races will be caught.
"""

WORLD_MODEL_CALIPER_PROMPT = """\
# Code A
```cpp
{generated_cc_a}
```

# Code B
```cpp
{generated_cc_b}
```

# Broad Definition of Caliper's Work Percentage
The percentage of total OpenMP thread time spent doing useful application work, as opposed to OpenMP runtime overhead (e.g., barriers, synchronization, idle time, etc.).

# Instructions
Code A and Code B are two alternative implementations of the same functionality. Predict the work percentages of Code A and Code B as would be measured by Caliper at thread counts {thread_counts}. First think step by step inside <think> and </think> tags. Then, inside <answer> and </answer> tags, write a section "## Caliper Measurements for Code A" with a <measurements> block, then "## Caliper Measurements for Code B" with a <measurements> block. Each measurements block lists, per region, lines of the form "- For N threads, a work percentage of P".
"""

SELF_FEEDBACK_PROMPT = """\
# Given OpenMP Code
```cpp
{code}
```

# Instructions
Analyze the above OpenMP code for data races. Describe each potential data race you find: the racing accesses, the lines involved, and the race type (read/write or write/write). If you believe the code is race-free, say so and explain why.
"""

EDIT_PROMPT = """\
# Given OpenMP Code
```cpp
{code}
```

# Race Analysis Feedback
{feedback}

# Instructions
Based on the feedback above, propose an edit to fix the data race(s) in the given OpenMP code. Describe precisely what to change and why. Do not rewrite the whole file here; just describe the edit.
"""

APPLY_PROMPT = """\
# Given OpenMP Code
```cpp
{code}
```

# Proposed Edit
{edit}

# Instructions
Apply the proposed edit to the given OpenMP code and return the complete corrected file.

# Formatting Instructions
Your response must only contain a Markdown code block as follows:

```cpp
{{THE COMPLETE CORRECTED CODE GOES HERE.}}
```

Do NOT include any additional code or explanations.
"""


def number_lines(code: str) -> str:
    return "\n".join(f"{i + 1}: {line}" for i, line in enumerate(code.split("\n")))
