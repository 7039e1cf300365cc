"""Main entry point for the SEMS scoring engine."""

import argparse
import logging
import sys
from typing import List, Optional

from src.cli import (
    cmd_crossval,
    cmd_generate,
    cmd_interpret,
    cmd_predict,
    cmd_sweep,
    cmd_trace,
    cmd_train,
    exit_code_for,
)
from src.config import get_settings, load_run_config, parse_overrides
from src.utils import setup_logging
from src.utils.errors import SemsError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Handwriting-difficulty (SEMS) scoring from smart-pen sensor data"
    )
    base = argparse.ArgumentParser(add_help=False)
    base.add_argument('--out', type=str, default='out', help='Output directory')
    base.add_argument('--log-level', type=str, help='Logging level (default from LOG_LEVEL)')
    base.add_argument('--log-file', type=str, help='Also write log records to this file')

    common = argparse.ArgumentParser(add_help=False, parents=[base])
    common.add_argument('--config', type=str, help='KEY=VALUE run configuration file')
    common.add_argument('--seed', type=int, help='Root seed for every random stream')
    common.add_argument('--jobs', type=int, help='Parallel cross-validation trials')
    common.add_argument(
        '--set',
        action='append',
        default=[],
        metavar='KEY=VALUE',
        help='Override one configuration key, e.g. TRAIN_EPOCHS=50',
    )

    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('generate', parents=[common], help='Write a synthetic cohort')
    for name, help_text in (
        ('train', 'Train the LSTM and combiner on a cohort'),
        ('crossval', 'Monte-Carlo cross-validation over children'),
        ('interpret', 'Channel and combiner-input importance'),
        ('sweep', 'Cross-validate each network architecture'),
    ):
        cmd = sub.add_parser(name, parents=[common], help=help_text)
        cmd.add_argument('--cohort', required=True, help='Cohort directory or manifest.csv')

    for name, help_text in (
        ('predict', 'Score one session CSV with a trained bundle'),
        ('trace', 'Export the activations of one window'),
    ):
        cmd = sub.add_parser(name, parents=[base], help=help_text)
        cmd.add_argument('--bundle', required=True, help='model_bundle.json from train')
        cmd.add_argument('--session', required=True, help='Session CSV file')
        cmd.add_argument('--age', type=float, default=8.0, help='Age in years')
        cmd.add_argument('--gender', choices=['f', 'm'], default='f')
        cmd.add_argument('--child-id', type=str, help='Defaults to the file name')
    sub.choices['trace'].add_argument('--window', type=int, default=0, help='Window index')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)

    try:
        settings = get_settings()
        setup_logging(args.log_level or settings.log_level, args.log_file)
        logger.info(f"Running {args.command}")

        if args.command == 'predict':
            cmd_predict(args.bundle, args.session, args.out, args.age, args.gender, args.child_id)
            return 0
        if args.command == 'trace':
            cmd_trace(args.bundle, args.session, args.out, args.window, args.age, args.gender, args.child_id)
            return 0

        overrides = parse_overrides(args.set)
        if args.seed is not None:
            overrides["PIPELINE_RNG_SEED"] = args.seed
        if args.jobs is not None:
            overrides["PIPELINE_JOBS"] = args.jobs
        config = load_run_config(
            args.config,
            overrides,
            defaults={
                "PIPELINE_RNG_SEED": settings.default_seed,
                "PIPELINE_JOBS": settings.jobs,
            },
        )

        if args.command == 'generate':
            cmd_generate(config, args.out)
        elif args.command == 'train':
            cmd_train(config, args.cohort, args.out)
        elif args.command == 'crossval':
            cmd_crossval(config, args.cohort, args.out)
        elif args.command == 'interpret':
            cmd_interpret(config, args.cohort, args.out)
        elif args.command == 'sweep':
            cmd_sweep(config, args.cohort, args.out)
        return 0
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 130
    except SemsError as e:
        print(f"error[{e.kind}]: {e}", file=sys.stderr)
        return exit_code_for(e)
    except OSError as e:
        print(f"error[io]: {e}", file=sys.stderr)
        return 3
    except Exception as e:
        logger.error(f"Error: {e}", exc_info=True)
        print(f"error[internal]: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
