"""Pipeline toolkit for training world models of parallel-programming tools.

Generates OpenMP problems and candidate implementations, executes them under
ThreadSanitizer and Caliper to record ground-truth outcomes, synthesizes
outcome-conditioned reasoning traces, exports completion-only SFT datasets,
and evaluates models on race prediction, work-percentage ranking, and
feedback-guided race fixing.
"""

__version__ = "0.1.0"
