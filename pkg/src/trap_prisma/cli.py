"""
Command-line front end.

    trap-prisma baseline  --config run.json
    trap-prisma simulate  --config run.json --trials 1000 --jobs 8 --out results/
    trap-prisma benchmark --config run.json
    trap-prisma threshold --config run.json [--records results/trials.json]
    trap-prisma replay    --trace results/traces/trial_00000.jsonl

Exit codes: 0 on success, 2 for configuration errors, 3 when a planner breaks the
control-operation contract.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import pandas as pd

from trap_prisma.analytics.baseline import baseline_success, largest_certain_target
from trap_prisma.analytics.benchmark import run_benchmark
from trap_prisma.analytics.cycle_stats import cycle_statistics
from trap_prisma.analytics.figure_data import (
    baseline_figures,
    benchmark_figures,
    cycle_figures,
    scan_figures,
    sweep_figures,
    threshold_figures,
    write_figures,
)
from trap_prisma.analytics.sweeps import baseline_surface, success_sweep, transition_curve
from trap_prisma.analytics.threshold import raw_wait_time, threshold_optimizer
from trap_prisma.configs.ExperimentConfig import ExperimentConfig
from trap_prisma.control.operations import ContractError
from trap_prisma.control.trace import read_trace, replay_trace
from trap_prisma.simulation.monte_carlo import run_monte_carlo, survival_scan
from trap_prisma.simulation.protocol import TrialRecord
from trap_prisma.simulation.rng import set_seed
from trap_prisma.utils.config_utils import apply_overrides
from trap_prisma.utils.saving_utils import get_version, save_json, save_metadata, save_table

logger = logging.getLogger("trap_prisma")

EXIT_CONFIG = 2
EXIT_CONTRACT = 3


class ConfigError(ValueError):
    pass


def load_config(path=None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        with open(path) as f:
            return ExperimentConfig.from_dict(json.load(f))
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as e:
        raise ConfigError(f"Invalid config {path}: {e}") from e


def _summary(config: ExperimentConfig, command: str, **results) -> dict:
    return {
        "command": command,
        "schema_version": config.schema_version,
        "version": get_version(),
        "config": config.to_dict(),
        **results,
    }


def _finish(config: ExperimentConfig, command: str, out: Path, summary: dict) -> None:
    save_json(summary, out / "summary.json")
    save_metadata(out / "metadata.json", command=command, argv=sys.argv[1:])
    logger.info("Wrote %s results to %s", command, out)


def cmd_baseline(config: ExperimentConfig, out: Path, args) -> int:
    epsilon = config.loss.epsilon
    surface = baseline_surface(config.sweep_targets, config.sweep_traps, epsilon)
    save_table(surface.to_frame(), out / "baseline.csv")
    write_figures(out, baseline_figures(surface, config.certain_p_min))

    spec = config.grid()
    _finish(config, "baseline", out, _summary(
        config, "baseline",
        grid_success=baseline_success(spec.n_traps, epsilon, spec.n_target),
        largest_certain_target={
            str(n): largest_certain_target(n, epsilon, config.certain_p_min)
            for n in sorted(set(config.sweep_traps) | {spec.n_traps})
        },
    ))
    return 0


def cmd_simulate(config: ExperimentConfig, out: Path, args) -> int:
    spec = config.grid()
    run = dict(
        planner=config.planner,
        trials=config.trials,
        seed=config.seed,
        threshold=config.threshold,
        sampling=config.sampling,
        jobs=config.jobs,
    )
    records, summary = run_monte_carlo(
        spec, config.loss,
        trace_dir=out / "traces" if config.trace_trials else None,
        trace_trials=config.trace_trials,
        **run,
    )
    save_table([r.to_row() for r in records], out / "trials.csv")
    save_json([r.to_dict() for r in records], out / "trials.json")

    stats = cycle_statistics(records)
    figures = cycle_figures(stats)
    results = {
        "summary": summary.to_dict(),
        "baseline_success": baseline_success(spec.n_traps, config.loss.epsilon, spec.n_target),
        "median_cycles_success": stats.median_cycles_success,
        "median_cycles_failure": stats.median_cycles_failure,
        "wait_time": raw_wait_time(records),
    }

    if config.survival_scan:
        scan = survival_scan(spec, config.loss, config.survival_scan, progress=False, **run)
        figures.update(scan_figures(scan))
        results["survival_scan"] = [{"p": p, **s.to_dict()} for p, s in scan]

    if args.sweep:
        sweep = success_sweep(
            config.sweep_targets, config.sweep_traps, config.loss,
            planner=config.planner, trials=config.trials, seed=config.seed,
            geometry=config.sweep_geometry, sampling=config.sampling, jobs=config.jobs,
        )
        transition = transition_curve(sweep)
        save_table(sweep.to_frame(), out / "sweep.csv")
        figures.update(sweep_figures(sweep, transition))
        results["transition"] = {
            "excluded": list(transition.excluded),
            "fit_linear": transition.fit_linear.to_dict() if transition.fit_linear else None,
            "fit_sqrt": transition.fit_sqrt.to_dict() if transition.fit_sqrt else None,
        }

    write_figures(out, figures)
    _finish(config, "simulate", out, _summary(config, "simulate", **results))
    return 0


def cmd_benchmark(config: ExperimentConfig, out: Path, args) -> int:
    results = run_benchmark(
        config.benchmark_sides, config.benchmark_eta, config.benchmark_samples, config.seed
    )
    save_table([r.summary() for r in results], out / "benchmark.csv")
    instances = [r.instances_frame() for r in results]
    if instances:
        save_table(pd.concat(instances, ignore_index=True), out / "instances.csv")
    write_figures(out, benchmark_figures(results))
    _finish(config, "benchmark", out, _summary(
        config, "benchmark", sizes=[r.summary() for r in results]
    ))
    return 0


def cmd_threshold(config: ExperimentConfig, out: Path, args) -> int:
    spec = config.grid()
    if args.records:
        try:
            with open(args.records) as f:
                records = [TrialRecord.from_dict(d) for d in json.load(f)]
        except (OSError, ValueError, KeyError) as e:
            raise ConfigError(f"Cannot read trial records {args.records}: {e}") from e
        logger.info("Loaded %d trial records from %s", len(records), args.records)
    else:
        records, _ = run_monte_carlo(
            spec, config.loss, planner=config.planner, trials=config.trials, seed=config.seed,
            sampling=config.sampling, jobs=config.jobs,
        )

    start = config.threshold_min if config.threshold_min is not None else spec.n_target
    stop = config.threshold_max if config.threshold_max is not None else max(r.initial_atoms for r in records)
    curve = threshold_optimizer(
        records, spec, config.loss, range(start, stop + 1, config.threshold_step)
    )
    save_table(curve.to_frame(), out / "threshold.csv")
    write_figures(out, threshold_figures(curve))
    _finish(config, "threshold", out, _summary(
        config, "threshold",
        reference=curve.reference,
        optimum=curve.optimum,
        excluded=list(curve.excluded),
    ))
    return 0


def cmd_replay(config: ExperimentConfig, out: Path, args) -> int:
    path = args.trace or config.trace_path
    if path is None:
        raise ConfigError("replay needs --trace or trace_path in the config")
    try:
        trace = read_trace(path)
    except (OSError, ValueError, KeyError) as e:
        raise ConfigError(f"Cannot read trace {path}: {e}") from e
    result = replay_trace(trace)
    _finish(config, "replay", out, _summary(
        config, "replay",
        trace=str(path),
        final_atoms=len(result.final),
        contains_target=result.final.contains_target(),
        final=[[p.col, p.row] for p in result.final.sorted_positions()],
        counts=result.counts.totals(),
        violations=[
            {"cycle": cycle, "batch": ordinal, "reason": str(violation)}
            for cycle, ordinal, violation in result.violations
        ],
    ))
    return 0


COMMANDS = {
    "baseline": cmd_baseline,
    "simulate": cmd_simulate,
    "benchmark": cmd_benchmark,
    "threshold": cmd_threshold,
    "replay": cmd_replay,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="JSON experiment config")
    common.add_argument("--seed", type=int, default=None, help="Override the config seed")
    common.add_argument("--trials", type=int, default=None, help="Override the number of trials")
    common.add_argument("--jobs", type=int, default=None, help="Worker processes")
    common.add_argument("--out", type=str, default=None, help="Output directory")
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        prog="trap-prisma", description="Atom reconfiguration planners and loss simulations"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("baseline", parents=[common], help="Lossless success probability surface")
    simulate = sub.add_parser("simulate", parents=[common], help="Monte Carlo protocol trials")
    simulate.add_argument("--sweep", action="store_true", help="Also run the success sweep")
    sub.add_parser("benchmark", parents=[common], help="Red-rec against the assignment baseline")
    threshold = sub.add_parser("threshold", parents=[common], help="Rejection threshold wait times")
    threshold.add_argument("--records", type=str, default=None, help="trials.json from a simulate run")
    replay = sub.add_parser("replay", parents=[common], help="Replay a protocol trace without loss")
    replay.add_argument("--trace", type=str, default=None, help="Trace file (JSON lines)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        config = load_config(args.config)
        apply_overrides(config, seed=args.seed, trials=args.trials, jobs=args.jobs, out=args.out)
    except (ConfigError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_CONFIG

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    set_seed(config.seed)
    try:
        return COMMANDS[args.command](config, out, args)
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except ContractError as e:
        logger.error("Planner contract violation: %s", e)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
