"""
Evaluator for the CCS codec.

Runs a codec over a set of images and reports rate, RGB PSNR and timing,
and compares codecs through BD-rate.
"""

import json
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..codec import Bitstream, CCSCodec
from ..color import ImageRGB, rgb_to_yuv420, yuv420_to_rgb
from ..utils.metrics import RDCurve, RDPoint, bd_rate, psnr_rgb, summarize


def evaluate_rd(codec: CCSCodec, images: Sequence[ImageRGB], workers: Optional[int] = None) -> List[RDPoint]:
    """
    Code every image and measure (bpp, RGB PSNR).

    The reference for PSNR is the original RGB image; the decoded YUV420
    image is converted back to RGB before comparison.
    """
    points = []
    for image in images:
        yuv = rgb_to_yuv420(image)
        data = codec.encode(yuv, workers).serialize()
        decoded = codec.decode(Bitstream.parse(data), workers)
        bpp = 8 * len(data) / (image.width * image.height)
        points.append(RDPoint(bpp, psnr_rgb(image, yuv420_to_rgb(decoded))))
    return points


class CodecEvaluator:
    """Per-image rate, quality and timing evaluator."""

    def __init__(self, config: Dict[str, Any] = None):
        self.config = config or {}
        self.logger = logging.getLogger(self.__class__.__name__)

        self.workers = self.config.get("workers", 1)
        self.results: List[Dict[str, Any]] = []

        self.logger.info("Initialized codec evaluator")

    def evaluate_codec(self, codec: CCSCodec, images: Sequence[ImageRGB], name: str = "codec") -> Dict[str, Any]:
        """
        Evaluate a codec on a set of images.

        Args:
            codec: Codec to evaluate
            images: RGB images with even dimensions
            name: Label used in logs and reports

        Returns:
            Evaluation results
        """
        self.logger.info(f"Starting evaluation of {name}: {len(images)} images")
        self.results = []

        for index, image in enumerate(images):
            self.results.append(self._run_image(codec, image, index))

        results = self._compile_results(name)
        self.logger.info(f"{name}: {results['avg_bpp']:.4f} bpp, {results['avg_psnr']:.2f} dB")
        return results

    def _run_image(self, codec: CCSCodec, image: ImageRGB, index: int) -> Dict[str, Any]:
        yuv = rgb_to_yuv420(image)

        start = time.perf_counter()
        data = codec.encode(yuv, self.workers).serialize()
        encode_seconds = time.perf_counter() - start

        start = time.perf_counter()
        decoded = codec.decode(Bitstream.parse(data), self.workers)
        decode_seconds = time.perf_counter() - start

        return {
            "image": index,
            "bpp": 8 * len(data) / (image.width * image.height),
            "psnr": psnr_rgb(image, yuv420_to_rgb(decoded)),
            "encode_seconds": encode_seconds,
            "decode_seconds": decode_seconds,
        }

    def _compile_results(self, name: str) -> Dict[str, Any]:
        avg_bpp, std_bpp = summarize(r["bpp"] for r in self.results)
        avg_psnr, std_psnr = summarize(r["psnr"] for r in self.results)
        return {
            "codec": name,
            "total_images": len(self.results),
            "avg_bpp": avg_bpp,
            "std_bpp": std_bpp,
            "avg_psnr": avg_psnr,
            "std_psnr": std_psnr,
            "avg_encode_seconds": float(np.mean([r["encode_seconds"] for r in self.results])) if self.results else 0.0,
            "avg_decode_seconds": float(np.mean([r["decode_seconds"] for r in self.results])) if self.results else 0.0,
            "per_image": list(self.results),
            "evaluation_config": self.config,
        }

    def compare_curves(self, anchor: Tuple[str, RDCurve], tests: List[Tuple[str, RDCurve]]) -> Dict[str, float]:
        """BD-rate of every test curve against the anchor."""
        anchor_name, anchor_curve = anchor
        comparison = {}
        for name, curve in tests:
            comparison[name] = bd_rate(anchor_curve, curve)
            self.logger.info(f"BD-rate {name} vs {anchor_name}: {comparison[name]:+.2f}%")
        return comparison

    def save_results(self, results: Dict[str, Any], filepath: str):
        """Save evaluation results to file."""
        Path(filepath).parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, "w") as f:
            json.dump(results, f, indent=2, default=str)
        self.logger.info(f"Saved evaluation results to {filepath}")

    def load_results(self, filepath: str) -> Dict[str, Any]:
        with open(filepath, "r") as f:
            results = json.load(f)
        self.logger.info(f"Loaded evaluation results from {filepath}")
        return results

    def get_summary_report(self, results: Dict[str, Any]) -> str:
        """Generate summary report from results."""
        if not results:
            return "No results available"

        return f"""
=== Codec Evaluation Report: {results.get('codec', 'N/A')} ===

Images Evaluated: {results.get('total_images', 'N/A')}
Average Rate: {results.get('avg_bpp', 0):.4f} +/- {results.get('std_bpp', 0):.4f} bpp
Average RGB PSNR: {results.get('avg_psnr', 0):.2f} +/- {results.get('std_psnr', 0):.2f} dB
Average Encode Time: {results.get('avg_encode_seconds', 0):.2f}s
Average Decode Time: {results.get('avg_decode_seconds', 0):.2f}s

===============================
"""
