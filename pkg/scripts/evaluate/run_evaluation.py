#!/usr/bin/env python3
"""
Rate-distortion evaluation of a CCS model on a directory of PPM images.

One weights directory per lambda index yields one RD point per index; the
resulting curve is written as an RD CSV (bpp, PSNR) for ``ccs bdrate``.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from src.codec import CCSCodec, CCSModelSet, get_preset
from src.color import read_ppm
from src.evaluation import CodecEvaluator
from src.utils import RDCurve, RDPoint, setup_logging, write_rd_csv


def parse_arguments():
    parser = argparse.ArgumentParser(description="CCS rate-distortion evaluation")
    parser.add_argument("--images", type=str, required=True, help="Directory of PPM images")
    parser.add_argument("--preset", type=str, default="ccs-y128-uv64", help="Model preset")
    parser.add_argument(
        "--weights",
        type=str,
        nargs="+",
        required=True,
        help="Weights directories, one per lambda index in increasing order"
    )
    parser.add_argument("--workers", type=int, choices=[1, 2], default=1)
    parser.add_argument("--out", type=str, default="experiments/results/rd.csv", help="RD CSV output")
    parser.add_argument("--log-level", type=str, default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser.parse_args()


def main():
    args = parse_arguments()
    setup_logging(args.log_level)

    images = [read_ppm(path) for path in sorted(Path(args.images).glob("*.ppm"))]
    if not images:
        sys.exit(f"no .ppm images in {args.images}")

    evaluator = CodecEvaluator({"workers": args.workers})
    points = []
    for lambda_id, weights in enumerate(args.weights):
        config = get_preset(args.preset, lambda_id)
        codec = CCSCodec(CCSModelSet.load(config, weights))
        results = evaluator.evaluate_codec(codec, images, name=f"{config.name}@{config.lam}")
        print(evaluator.get_summary_report(results))
        points.append(RDPoint(results["avg_bpp"], results["avg_psnr"]))

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_rd_csv(args.out, RDCurve(points))
    print(f"RD curve written to {args.out}")


if __name__ == "__main__":
    main()
