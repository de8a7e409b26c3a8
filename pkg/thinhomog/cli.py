"""
Command line entry point: ``thinhomog <study-kind> --config PATH``.
"""

from argparse import ArgumentParser
import logging
import sys

from .config import KINDS, apply_environment, load_config
from .errors import ConfigError
from .studies import run_study

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2


def build_parser():
    parser = ArgumentParser(
        prog="thinhomog",
        description="Run a thin-domain homogenization study.",
    )
    parser.add_argument("kind", choices=KINDS, help="Study kind")
    parser.add_argument(
        "-c", "--config", required=True, help="Path to the study file"
    )
    parser.add_argument(
        "-o",
        "--out",
        default=None,
        help="Output directory (default: output.directory of the config)",
    )
    parser.add_argument(
        "-j", "--jobs", type=int, default=1, help="Worker threads per sweep"
    )
    parser.add_argument(
        "--svg", action="store_true", help="Also render SVG figures"
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="Debug logging"
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)
    if args.jobs < 1:
        logger.error("--jobs must be at least 1.")
        return EXIT_CONFIG
    try:
        cfg = apply_environment(load_config(args.config))
    except ConfigError as err:
        for line in str(err).splitlines():
            logger.error(line)
        return EXIT_CONFIG
    except OSError as err:
        logger.error(f"Cannot read {args.config}: {err}")
        return EXIT_CONFIG
    if cfg.kind != args.kind:
        logger.info(f"Study kind {args.kind!r} overrides {cfg.kind!r}.")
        try:
            cfg = cfg.replace("study", kind=args.kind)
            if cfg["geometry"]["out_of_hypothesis"] and args.kind != "ladder":
                raise ConfigError([(None, "out-of-hypothesis specs are "
                                          "allowed in ladder studies only")])
        except ConfigError as err:
            logger.error(str(err))
            return EXIT_CONFIG

    result = run_study(cfg, out_dir=args.out, jobs=args.jobs,
                       svg=args.svg or None)
    for path in result.paths:
        logger.info(f"Wrote {path}")
    for eps, msg in result.failures:
        where = f"eps={eps:g}" if eps is not None else "study"
        logger.error(f"{where}: {msg}")
    if result.passed:
        logger.info("All checks passed.")
        return EXIT_OK
    logger.warning("Some checks failed.")
    return EXIT_CHECKS_FAILED


if __name__ == "__main__":
    sys.exit(main())
