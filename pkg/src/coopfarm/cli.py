"""Command-line entry point.

Commands
    generate     write each farm's synthetic dataset as CSV plus a manifest
    equilibrium  enumerate Nash equilibria and run both theorem checkers
    fair         run the fair strategy (score -> cluster -> blocs)
    naive        run the everyone-in-one-bloc baseline
    simulate     run an arm's repeated-round defection dynamics
    report       re-render the summary of an existing report file

Human-readable summaries go to stdout (suppressed by --json-only),
diagnostics to stderr; machine-readable output only ever lands in files.
Exit codes: 0 success, 2 scenario/config error, 3 I/O error, 4 guard
violation (profile space too large).

Seed priority: --seed beats the COOPFARM_SEED environment variable, which
beats the scenario file's seed.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .datagen import GenConfig, generate_dataset, write_dataset_csv
from .equilibrium import MAX_ENUM_FARMS, ProfileSpaceError, analyze_equilibrium
from .scenario import (
    REPORT_VERSION,
    ScenarioConfig,
    ScenarioError,
    SimulationReport,
    build_farms,
    canonical_json,
    load_scenario,
    read_report,
    write_report,
)
from .strategy import run_fair_pipeline, run_naive_coop, simulate_rounds

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_GUARD = 4

SEED_ENV_VAR = "COOPFARM_SEED"


def _resolve_seed(config: ScenarioConfig, cli_seed: int | None) -> ScenarioConfig:
    if cli_seed is not None:
        return config.with_seed(cli_seed)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            return config.with_seed(int(env_seed))
        except ValueError:
            raise ScenarioError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}")
    return config


def _emit(args: argparse.Namespace, text: str) -> None:
    if not getattr(args, "json_only", False):
        print(text)


def render_summary(report: SimulationReport) -> str:
    lines = [f"farms: {len(report.scenario.farms)}", f"seed: {report.scenario.seed}"]
    if report.scores is not None:
        scores = " ".join(f"{s.farm_id}:{s.accuracy:.3f}" for s in report.scores)
        lines.append(f"scored accuracies: {scores}")
    if report.clustering is not None:
        centroids = " ".join(f"{c:.3f}" for c in report.clustering.centroids)
        lines.append(f"clusters (k={report.clustering.k}): centroids {centroids}")
    if report.blocs is not None:
        lines.append(f"blocs: {len(report.blocs.blocs)}")
        for bloc in report.blocs.blocs:
            members = ",".join(str(i) for i in bloc.member_ids)
            lines.append(f"  bloc {bloc.cluster_index}: farms [{members}] "
                         f"coop accuracy {bloc.coop_accuracy:.4f}")
        defectors = [i for i, s in enumerate(report.blocs.strategy_of) if s.value == "DF"]
        lines.append(f"stand-alone farms: {defectors if defectors else 'none'}")
    if report.equilibrium is not None:
        eq = report.equilibrium
        lines.append(f"profiles checked: {eq.report.profiles_checked}")
        lines.append(f"nash equilibria: {len(eq.report.nash_profiles)}")
        lines.append(f"All-DF NE: {str(eq.report.all_df_is_ne).lower()}")
        lines.append(f"All-CP NE: {str(eq.report.all_cp_is_ne).lower()}")
        lines.append(f"theorem 1 (All-DF equilibrium): holds="
                     f"{str(eq.theorem1.holds).lower()} "
                     f"condition_met={str(eq.theorem1.condition_met).lower()}")
        lines.append(f"theorem 2 (All-CP never an equilibrium): claim_holds="
                     f"{str(eq.theorem2.paper_claim_holds).lower()}")
        if eq.theorem2.counterexample is not None:
            lines.append("  counterexample: All-CP is an equilibrium under these "
                         "parameters; the universal claim is parameter-dependent")
    if report.rounds:
        total_defections = sum(len(t.defections_this_round) for t in report.rounds)
        lines.append(f"rounds simulated: {len(report.rounds)}")
        lines.append(f"total defections: {total_defections}")
        for trace in report.rounds:
            if trace.defections_this_round:
                ids = ",".join(str(i) for i in trace.defections_this_round)
                lines.append(f"  round {trace.round}: farms [{ids}] defected")
        final = report.rounds[-1]
        remaining = sum(1 for s in final.strategy_of if s.value == "CP") \
            - len(final.defections_this_round)
        lines.append(f"cooperators after final round: {remaining}")
    return "\n".join(lines)


def _write_and_summarize(report: SimulationReport, args: argparse.Namespace) -> None:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report(report, out_dir / "report.json", csv_tables=args.csv)
    _emit(args, render_summary(report))
    _emit(args, f"report written to {out_dir / 'report.json'}")


def cmd_generate(args: argparse.Namespace) -> int:
    config = _resolve_seed(load_scenario(args.scenario), args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    gen_config = GenConfig(records_per_device=config.pipeline.records_per_device,
                           golden_records=config.pipeline.golden_records)
    manifest = {"version": REPORT_VERSION, "seed": config.seed, "files": []}
    for farm in build_farms(config):
        dataset = generate_dataset(farm, gen_config, config.seed)
        name = f"farm_{farm.id:03d}.csv"
        write_dataset_csv(dataset, out_dir / name)
        manifest["files"].append({"farm_id": farm.id, "path": name,
                                  "records": len(dataset.records)})
    (out_dir / "manifest.json").write_text(canonical_json(manifest), encoding="utf-8")
    _emit(args, f"wrote {len(manifest['files'])} dataset files to {out_dir}")
    return EXIT_OK


def cmd_equilibrium(args: argparse.Namespace) -> int:
    config = _resolve_seed(load_scenario(args.scenario), args.seed)
    farms = build_farms(config)
    if len(farms) > MAX_ENUM_FARMS:
        raise ProfileSpaceError("profile space too large")
    analysis = analyze_equilibrium(farms, config.costs, config.payoff,
                                   epsilon=config.dynamics.epsilon,
                                   penalty_in_coop_cost=config.penalty_in_coop_cost)
    report = SimulationReport(version=REPORT_VERSION, scenario=config, scores=None,
                              clustering=None, blocs=None, equilibrium=analysis,
                              rounds=())
    _write_and_summarize(report, args)
    return EXIT_OK


def cmd_fair(args: argparse.Namespace) -> int:
    config = _resolve_seed(load_scenario(args.scenario), args.seed)
    result = run_fair_pipeline(config)
    report = SimulationReport(version=REPORT_VERSION, scenario=config,
                              scores=result.scores, clustering=result.clustering,
                              blocs=result.assignment, equilibrium=None, rounds=())
    _write_and_summarize(report, args)
    return EXIT_OK


def cmd_naive(args: argparse.Namespace) -> int:
    config = _resolve_seed(load_scenario(args.scenario), args.seed)
    assignment = run_naive_coop(config)
    report = SimulationReport(version=REPORT_VERSION, scenario=config, scores=None,
                              clustering=None, blocs=assignment, equilibrium=None,
                              rounds=())
    _write_and_summarize(report, args)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _resolve_seed(load_scenario(args.scenario), args.seed)
    if args.arm == "fair":
        result = run_fair_pipeline(config)
        scores, clustering, assignment = result.scores, result.clustering, result.assignment
    else:
        scores, clustering, assignment = None, None, run_naive_coop(config)
    rounds = simulate_rounds(config, assignment, rounds=args.rounds)
    report = SimulationReport(version=REPORT_VERSION, scenario=config, scores=scores,
                              clustering=clustering, blocs=assignment,
                              equilibrium=None, rounds=rounds)
    _write_and_summarize(report, args)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report = read_report(args.report_path)
    print(render_summary(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopfarm",
        description="Co-op farming game simulator: payoffs, equilibria, and the "
                    "quality-clustered fair strategy over synthetic farm data.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("scenario", help="path to the scenario JSON file")
        sub.add_argument("--out", default=".", help="output directory (default: .)")
        sub.add_argument("--seed", type=int, default=None,
                         help="override the scenario seed")
        sub.add_argument("--csv", action="store_true",
                         help="also write CSV tables next to the report")
        sub.add_argument("--json-only", action="store_true",
                         help="suppress the stdout summary")

    add_common(subparsers.add_parser("generate", help="write per-farm dataset CSVs"))
    add_common(subparsers.add_parser("equilibrium",
                                     help="enumerate equilibria and check the theorems"))
    add_common(subparsers.add_parser("fair", help="run the fair strategy pipeline"))
    add_common(subparsers.add_parser("naive", help="run the single-bloc baseline"))
    simulate = subparsers.add_parser("simulate", help="run repeated-round dynamics")
    add_common(simulate)
    simulate.add_argument("--arm", choices=("fair", "naive"), default="fair",
                          help="which assignment to start from (default: fair)")
    simulate.add_argument("--rounds", type=int, default=None,
                          help="override the scenario's round count")
    report = subparsers.add_parser("report", help="summarize an existing report file")
    report.add_argument("report_path", help="path to a report.json")
    return parser


_HANDLERS = {
    "generate": cmd_generate,
    "equilibrium": cmd_equilibrium,
    "fair": cmd_fair,
    "naive": cmd_naive,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ProfileSpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
