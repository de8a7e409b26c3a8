from argparse import ArgumentParser
import logging
from pathlib import Path
import sys
import time

import thinhomog as th
from thinhomog.config import apply_environment, load_config

logger = logging.getLogger(__name__)
logging.basicConfig(level=logging.INFO)

parser = ArgumentParser(description="Run every golden study configuration")
parser.add_argument(
    "-d",
    "--configs",
    type=str,
    default=str(Path(__file__).resolve().parent.parent / "configs"),
    help="Directory of study files",
)
parser.add_argument(
    "-j", "--jobs", type=int, default=1, help="Worker threads per sweep"
)
parser.add_argument(
    "-s", "--svg", action="store_true", help="Render SVG figures too"
)
args = parser.parse_args()

status = 0
for path in sorted(Path(args.configs).glob("*.yaml")):
    start = time.time()
    try:
        cfg = apply_environment(load_config(path))
    except th.ConfigError as err:
        logger.error(f"{path.name}: {err}")
        status = max(status, 2)
        continue
    result = th.run_study(cfg, jobs=args.jobs, svg=args.svg or None)
    verdict = "passed" if result.passed else "FAILED"
    logger.info(
        f"{path.name}: {cfg.kind} study {verdict} "
        f"in {time.time() - start:.1f} s"
    )
    if not result.passed:
        status = max(status, 1)

sys.exit(status)
