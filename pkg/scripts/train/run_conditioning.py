#!/usr/bin/env python3
"""
Run the CCS-vs-NC conditioning experiment over several seeds and
correlation levels and write the per-run CSV and summary JSON.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src.training import ConditioningExperiment
from src.utils import load_config, setup_logging


def parse_arguments():
    parser = argparse.ArgumentParser(description="CCS vs NC conditioning experiment")
    parser.add_argument(
        "--config",
        type=str,
        default="configs/experiments/ccs_vs_nc.yaml",
        help="Experiment configuration file"
    )
    parser.add_argument(
        "--output-dir",
        type=str,
        default=None,
        help="Override the output directory"
    )
    parser.add_argument(
        "--log-level",
        type=str,
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level"
    )
    return parser.parse_args()


def main():
    args = parse_arguments()
    setup_logging(args.log_level)

    config = load_config(args.config)
    if args.output_dir:
        config["output_dir"] = args.output_dir

    experiment = ConditioningExperiment(config)
    try:
        results = experiment.run()
    finally:
        experiment.cleanup()

    for corr, stats in results["summary"].items():
        print(f"{corr}: CCS wins {stats['ccs_wins']}/{stats['matched']} matched, "
              f"mean gap {stats['mean_relative_gap']:+.2%}, skipped {stats['skipped']}/{stats['runs']}")


if __name__ == "__main__":
    main()
