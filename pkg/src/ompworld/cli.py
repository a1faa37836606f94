"""Command-line entry point: one subcommand per pipeline stage.

All outputs land under --run-dir; every stage resumes from the journal and
the store, so re-invocation performs no duplicate LLM calls or tool runs.

Exit codes: 2 config, 3 endpoint/generation, 4 toolchain, 5 format.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import dataset as dataset_mod
from . import evaluation, pipeline, reports, toolchain
from .config import load_config, load_seeds
from .errors import OmpWorldError
from .fixagent import FixAgentConfig, fix_loop
from .gateway import Gateway, http_transport
from .mockmodel import ScriptedTransport
from .store import RunStore
from .types import TrainTuple, race_report_from_dict

log = logging.getLogger("ompworld")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ompworld")
    parser.add_argument("--run-dir", required=True, help="run directory for all artifacts")
    parser.add_argument("--config", default=None, help="YAML run configuration")
    parser.add_argument("--mock-endpoint", action="store_true",
                        help="use the scripted offline transport instead of HTTP")
    parser.add_argument("--dry-run", action="store_true",
                        help="stub tool executions (no compiler needed)")
    parser.add_argument("--seeds", default=None, help="seeds YAML (defaults to bundled corpus)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("explore", help="generate problem variants from seeds")
    sub.add_parser("harness", help="generate harness + reference per problem")
    sub.add_parser("candidates", help="generate candidate implementations")

    p = sub.add_parser("toolrun", help="execute candidates under a tool")
    p.add_argument("--tool", choices=("tsan", "caliper"), required=True)

    p = sub.add_parser("cot", help="synthesize hindsight reasoning traces")
    p.add_argument("--tool", choices=("tsan", "caliper"), required=True)
    p.add_argument("--no-hindsight", action="store_true",
                   help="ablation: withhold the outcome from the teacher prompt")

    p = sub.add_parser("dataset", help="assemble/export/subsample SFT data")
    p.add_argument("action", choices=("build", "export", "subsample"))
    p.add_argument("--tool", choices=("tsan", "caliper"), default="tsan")
    p.add_argument("--sizes", default=None, help="comma-separated nested subset sizes")

    p = sub.add_parser("eval", help="benchmark a model endpoint")
    p.add_argument("mode", choices=("race", "ranking"))
    p.add_argument("--endpoint", default="world-model")
    p.add_argument("--bench-dir", default=None, help="directory of benchmark sources")
    p.add_argument("--labels", default=None, help="JSON labels file {program_id: bool}")
    p.add_argument("--n-samples", type=int, default=16)

    p = sub.add_parser("fix", help="run the race-fixing loop")
    p.add_argument("--actor", default="actor-model")
    p.add_argument("--feedback", choices=("oracle", "self", "world_model"), default="self")
    p.add_argument("--world-model", default="world-model")
    p.add_argument("--bench-dir", default=None)
    p.add_argument("--passes", type=int, default=1)

    sub.add_parser("report", help="emit summary tables from stored results")
    sub.add_parser("doctor", help="check host toolchain availability")
    return parser


def _gateway(store: RunStore, args) -> Gateway:
    transport = ScriptedTransport() if args.mock_endpoint else http_transport
    return Gateway(store.journal, transport=transport)


def _load_tuples(store, tool):
    path = store.run_dir / f"tuples_{tool}.jsonl"
    if not path.exists():
        return []
    from .types import from_jsonl_line
    with open(path, encoding="utf-8") as f:
        return [from_jsonl_line(line) for line in f if line.strip()]


def _save_tuples(store, tool, tuples):
    from .types import to_jsonl_line
    path = store.run_dir / f"tuples_{tool}.jsonl"
    with open(path, "w", encoding="utf-8") as f:
        for t in tuples:
            f.write(to_jsonl_line(t) + "\n")
    return path


def cmd_dataset(store, config, args) -> int:
    if args.action == "build":
        tuples = dataset_mod.assemble(store, args.tool)
        path = _save_tuples(store, args.tool, tuples)
        print(f"built {len(tuples)} {args.tool} tuples -> {path}")
        return 0
    tuples = _load_tuples(store, args.tool)
    if not tuples:
        tuples = dataset_mod.assemble(store, args.tool)
        _save_tuples(store, args.tool, tuples)
    if args.action == "export":
        train, val = dataset_mod.split(tuples, config.val_fraction)
        out_train = store.run_dir / f"sft_{args.tool}_train.jsonl"
        out_val = store.run_dir / f"sft_{args.tool}_val.jsonl"
        n_train = dataset_mod.export_sft(train, out_train, audit=store.audit)
        n_val = dataset_mod.export_sft(val, out_val, audit=store.audit)
        cfg_path = store.run_dir / "training_config.yaml"
        dataset_mod.emit_training_config(cfg_path)
        print(f"exported {n_train} train / {n_val} val records; config -> {cfg_path}")
        return 0
    sizes = [int(s) for s in (args.sizes or "").split(",") if s]
    if not sizes:
        raise OmpWorldError("subsample requires --sizes")
    subsets = dataset_mod.subsample(tuples, sizes)
    for size, subset in zip(sizes, subsets):
        out = store.run_dir / f"sft_{args.tool}_subset_{size}.jsonl"
        dataset_mod.export_sft(subset, out, audit=store.audit)
        print(f"subset {size}: {out}")
    return 0


def _read_bench(bench_dir, labels_path):
    bench_dir = Path(bench_dir)
    labels = {}
    if labels_path:
        labels = json.loads(Path(labels_path).read_text(encoding="utf-8"))
    items = []
    for path in sorted(bench_dir.glob("*.c*")):
        program_id = path.stem
        if program_id in labels:
            items.append(evaluation.RaceEvalItem(
                program_id=program_id, source=path.read_text(encoding="utf-8"),
                label=bool(labels[program_id]), label_source="benchmark_metadata",
            ))
    return items


def cmd_eval(store, config, args, gateway) -> int:
    endpoint = config.endpoint(args.endpoint)
    if args.mode == "race":
        if not args.bench_dir:
            raise OmpWorldError("eval race requires --bench-dir")
        items = _read_bench(args.bench_dir, args.labels)
        report = evaluation.eval_race_presence(gateway, endpoint, items, n_samples=args.n_samples)
        table = reports.race_accuracy_table(
            [(endpoint.name, report.mean_accuracy, report.majority_accuracy,
              report.n_items, report.n_samples)])
        print(table)
        reports.write_csv(store.run_dir / "eval_race.csv",
                          ["program_id", "label", "sample_accuracy", "majority_correct", "unparseable"],
                          [(r["program_id"], r["label"], f"{r['sample_accuracy']:.4f}",
                            r["majority_correct"], r["unparseable"]) for r in report.per_item])
        stats = evaluation.response_length_stats(report.completions)
        print(f"response tokens: mean {stats['mean']:.1f}, median {stats['median']:.1f}, "
              f"max {stats['max']} over {stats['count']} completions")
        return 0
    # ranking mode consumes profiled candidates from the store
    from .types import caliper_profile_from_dict
    profiles = {row["candidate_id"]: caliper_profile_from_dict(row["profile"])
                for row in store.read("caliper_profiles")}
    candidates = {c.id: c for c in pipeline._load_candidates(store)}
    by_problem = {}
    for cid, profile in profiles.items():
        c = candidates.get(cid)
        if c:
            by_problem.setdefault(c.problem_id, []).append((cid, c.source))
    items = evaluation.prepare_pareval_pairs(by_problem, profiles)
    report = evaluation.eval_pair_ranking(gateway, endpoint, items, tuple(config.thread_counts))
    print(reports.ranking_table(endpoint.name, report))
    buckets = evaluation.bucket_by_gap(report.cells)
    reports.gap_bucket_csv(store.run_dir / "eval_ranking_buckets.csv", buckets)
    print(f"tie cells excluded: {report.tie_cells}; buckets -> eval_ranking_buckets.csv")
    return 0


def cmd_fix(store, config, args, gateway) -> int:
    if not args.bench_dir:
        raise OmpWorldError("fix requires --bench-dir")
    items = [(p.stem, p.read_text(encoding="utf-8"))
             for p in sorted(Path(args.bench_dir).glob("*.c*"))]
    profile = toolchain.ToolchainProfile()

    def live_oracle(code):
        from .explore import MAKEFILE_TEMPLATE
        raise OmpWorldError("live oracle feedback requires fixture bundles; use the API directly")

    def stub_verdict(code):
        return "reduction" in code or "critical" in code or "atomic" in code

    fix_config = FixAgentConfig(
        actor=config.endpoint(args.actor),
        feedback_source=args.feedback,
        world_model=config.endpoint(args.world_model),
        oracle=live_oracle if args.feedback == "oracle" else None,
        verdict=stub_verdict if args.dry_run else _live_verdict_factory(profile),
    )
    result = fix_loop(gateway, items, fix_config, passes=args.passes)
    print(reports.fix_loop_table({args.actor: {args.feedback: result.race_free_percentage}}))
    print(f"definitive {result.n_definitive}, indeterminate {result.n_indeterminate}")
    (store.run_dir / "fix_transcripts.json").write_text(
        json.dumps(result.transcripts, indent=2), encoding="utf-8")
    return 0


def _live_verdict_factory(profile):
    from .explore import MAKEFILE_TEMPLATE
    from .types import CandidateCode, HarnessBundle

    def verdict(code):
        # standalone single-file verdict: compile the code alone with a stub main
        import subprocess, tempfile
        from pathlib import Path as P
        with tempfile.TemporaryDirectory() as tmp:
            src = P(tmp) / "generated.cc"
            src.write_text(code, encoding="utf-8")
            binary = P(tmp) / "app"
            proc = subprocess.run(
                [profile.cxx, *profile.openmp_flags.split(), *profile.tsan_flags.split(),
                 str(src), "-o", str(binary)], capture_output=True, text=True)
            if proc.returncode != 0:
                raise OmpWorldError(f"verdict compile failed: {proc.stderr[:200]}")
            out = subprocess.run([str(binary)], capture_output=True, text=True,
                                 timeout=profile.run_timeout,
                                 env={**__import__('os').environ, "OMP_NUM_THREADS": "4",
                                      "TSAN_OPTIONS": "exitcode=66"})
            report, _ = toolchain.parse_tsan(out.stderr, "generated.cc")
            return not report.race_present

    return verdict


def cmd_report(store) -> int:
    counts = {name: len(store.read(name)) for name in
              ("problems", "harnesses", "candidates", "tsan_outcomes",
               "caliper_profiles", "cots", "audit")}
    accepted = sum(1 for row in store.read("cots")
                   if row["cot"]["validation_status"] == "accepted")
    print(reports.render_table(["Artifact", "Count"],
                               sorted(counts.items()) + [("accepted_cots", accepted)]))
    return 0


def cmd_doctor() -> int:
    report = toolchain.doctor()
    for key, value in sorted(report.items()):
        print(f"{key}: {value}")
    if not (report.get("cxx") and report["make"] and report["openmp"]):
        print("remediation: install make plus g++ or clang++ with OpenMP support "
              "(e.g. apt install build-essential) to enable live tool runs")
        return 4
    if not report["tsan"]:
        print("remediation: the compiler lacks -fsanitize=thread support")
        return 4
    if not report["caliper"]:
        print("note: Caliper not found; caliper tool runs will be skipped (optional)")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "doctor":
            return cmd_doctor()
        store = RunStore(args.run_dir)
        config = load_config(args.config)
        gateway = _gateway(store, args)
        if args.command == "explore":
            seeds = load_seeds(args.seeds)
            n = pipeline.stage_explore(store, gateway, config, seeds)
            print(f"explore: {n} new problems")
        elif args.command == "harness":
            n = pipeline.stage_harness(store, gateway, config)
            print(f"harness: {n} new bundles")
        elif args.command == "candidates":
            n = pipeline.stage_candidates(store, gateway, config)
            print(f"candidates: {n} new candidates")
        elif args.command == "toolrun":
            if args.tool == "tsan":
                n = pipeline.stage_toolrun_tsan(store, config, stub=args.dry_run)
            else:
                n = pipeline.stage_toolrun_caliper(store, config, stub=args.dry_run,
                                                   gateway=gateway)
            print(f"toolrun {args.tool}: {n} new outcomes")
        elif args.command == "cot":
            if args.tool == "tsan":
                n = pipeline.stage_cot_tsan(store, gateway, config,
                                            hindsight=not args.no_hindsight)
            else:
                n = pipeline.stage_cot_caliper(store, gateway, config)
            print(f"cot {args.tool}: {n} new traces "
                  f"(endpoint calls this run: {gateway.network_calls})")
        elif args.command == "dataset":
            return cmd_dataset(store, config, args)
        elif args.command == "eval":
            return cmd_eval(store, config, args, gateway)
        elif args.command == "fix":
            return cmd_fix(store, config, args, gateway)
        elif args.command == "report":
            return cmd_report(store)
        return 0
    except OmpWorldError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
