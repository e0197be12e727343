# app/main.py
import sys
import argparse
import logging
from pathlib import Path
from typing import Dict, List, Optional

from .config import configure_logging, settings
from .exceptions import ConfigurationError, SimulatorError
from .models.scenario import HandoffAlgorithm, MobilityModel
from .services.batch import RunOptions, algorithms_for, batch_service, seeds_for
from .services.export import export_service, staged_output
from .services.scenario_loader import SWEEP_AXES, load_scenario, parse_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_BAD_CONFIG = 2
MAX_ORACLE_UES = 10


def _oracle_size(value: str) -> int:
    k = int(value)
    if not 0 <= k <= MAX_ORACLE_UES:
        raise argparse.ArgumentTypeError(f"must be between 0 and {MAX_ORACLE_UES}")
    return k


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mec-handoff-sim",
        description="Discrete-event simulation of computation-aware handoff between MEC-enabled cells",
    )
    parser.add_argument("--config", metavar="PATH", help="scenario file of KEY=VALUE lines")
    parser.add_argument(
        "--algo",
        default="all",
        choices=[a.value for a in HandoffAlgorithm] + ["all"],
        help="handoff algorithm to run (default: all)",
    )
    parser.add_argument("--seeds", type=int, metavar="N", help="number of seeds")
    parser.add_argument("--seed-base", type=int, metavar="K", help="first seed (default 1)")
    parser.add_argument("--speed", type=float, metavar="M/S", help="UE speed")
    parser.add_argument("--fps", type=float, metavar="HZ", help="frames per second per UE")
    parser.add_argument("--mobility", choices=[m.value for m in MobilityModel], help="mobility model")
    parser.add_argument(
        "--sweep",
        metavar="AXIS=V1,V2,...",
        help=f"run one batch per value of AXIS ({', '.join(SWEEP_AXES)})",
    )
    parser.add_argument(
        "--set",
        dest="assignments",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any scenario key, may be repeated",
    )
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--trace", action="store_true", help="write the event log of every run")
    parser.add_argument("--sinr-map", action="store_true", help="write the best-server SINR grid")
    parser.add_argument("--trajectories", action="store_true", help="write UE trajectories")
    parser.add_argument(
        "--oracle-snapshot",
        type=_oracle_size,
        default=0,
        metavar="K",
        help="compare the first K UEs' final assignment with the optimum",
    )
    parser.add_argument("--workers", type=int, default=settings.MAX_WORKERS, help="parallel runs")
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, str]:
    overrides: Dict[str, str] = {}
    for assignment in args.assignments:
        key, sep, value = assignment.partition("=")
        if not sep:
            raise ConfigurationError(f"--set expects KEY=VALUE, got '{assignment}'")
        overrides[key.strip()] = value.strip()
    if args.speed is not None:
        overrides["MOBILITY_SPEED"] = repr(args.speed)
    if args.fps is not None:
        overrides["FPS"] = repr(args.fps)
    if args.mobility is not None:
        overrides["MOBILITY_MODEL"] = args.mobility
    if args.out is not None:
        overrides["OUTPUT_DIR"] = args.out
    return overrides


def run(args: argparse.Namespace) -> int:
    overrides = collect_overrides(args)
    scenario = load_scenario(args.config, overrides)
    if args.seeds is not None or args.seed_base is not None:
        seeds = seeds_for(args.seeds, args.seed_base, scenario.seeds)
        overrides["SEEDS"] = ",".join(str(s) for s in seeds)
        scenario = load_scenario(args.config, overrides)

    algorithms = algorithms_for(args.algo)
    options = RunOptions(
        trace=args.trace,
        trajectories=args.trajectories,
        oracle_snapshot=args.oracle_snapshot,
        workers=max(1, args.workers),
    )
    out_dir = Path(scenario.output_dir)

    sweep_scenarios = None
    if args.sweep:
        axis, values = parse_sweep(args.sweep)
        # resolve every value first so a bad one fails before any run starts
        sweep_scenarios = {
            value: load_scenario(args.config, {**overrides, SWEEP_AXES[axis]: value}) for value in values
        }

    logger.info(
        f"{settings.APP_NAME} {settings.APP_VERSION}: {len(algorithms)} algorithm(s) x "
        f"{len(scenario.seeds)} seed(s) into {out_dir}"
    )
    with staged_output(out_dir) as staging:
        export_service.write_scenario(scenario, staging)
        if args.sinr_map:
            batch_service.write_sinr_map(scenario, staging)
        if sweep_scenarios is None:
            batch_service.run_batch(scenario, algorithms, scenario.seeds, staging, options)
        else:
            for value, value_scenario in sweep_scenarios.items():
                value_dir = staging / "sweep" / f"{axis}={value}"
                value_dir.mkdir(parents=True, exist_ok=True)
                export_service.write_scenario(value_scenario, value_dir)
            batch_service.run_sweep(
                sweep_scenarios.__getitem__, axis, values, algorithms, scenario.seeds, staging, options
            )
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigurationError as e:
        logger.error(f"Invalid configuration: {e}")
        for line in e.diagnostics:
            print(line, file=sys.stderr)
        return EXIT_BAD_CONFIG
    except SimulatorError as e:
        logger.error(f"Run failed: {e}")
        print(str(e), file=sys.stderr)
        return EXIT_RUN_FAILED


if __name__ == "__main__":
    sys.exit(main())
