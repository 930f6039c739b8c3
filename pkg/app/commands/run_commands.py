import argparse
from pathlib import Path

from app.services.config_service import parse_config
from app.services.experiment_service import resume_experiment, run_experiment
from app.utils.errors import ConfigError
from app.utils.logger import logger


def _print_summary(result) -> None:
    print(f"bundle: {result.bundle}")
    print(f"snapshots: {result.snapshot_count}")
    if result.halt_reason:
        print(f"halted: {result.halt_reason}")
    if result.bound_fit is not None:
        fit = result.bound_fit
        print(f"fit ({fit.model}): A_hat={fit.A_hat:.6g} B_hat={fit.B_hat:.6g} max_violation={fit.max_violation:.3e}")


def run_command(args: argparse.Namespace) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError([f"{args.config}: {e.strerror or e}"])
    config = parse_config(text)
    if args.output_dir:
        config = config.model_copy(update={"output_dir": args.output_dir})
    logger.info("config %s validated", args.config)
    _print_summary(run_experiment(config))
    return 0


def resume_command(args: argparse.Namespace) -> int:
    _print_summary(resume_experiment(args.checkpoint, t_end=args.t_end, output_dir=args.output_dir))
    return 0


def register(subparsers) -> None:
    run = subparsers.add_parser("run", help="run an experiment from a config file")
    run.add_argument("config", help="path to an INI run configuration")
    run.add_argument("--output-dir", help="override output_dir from the config")
    run.set_defaults(handler=run_command)

    resume = subparsers.add_parser("resume", help="continue a run from a checkpoint")
    resume.add_argument("checkpoint", help="path to a .flck checkpoint")
    resume.add_argument("--t-end", type=float, help="new end time (defaults to the original)")
    resume.add_argument("--output-dir", help="bundle directory (defaults to <output_dir>/resumed)")
    resume.set_defaults(handler=resume_command)
