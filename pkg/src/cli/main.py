"""
Command-line front end: ``ccs <subcommand> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
3 data or format error, 4 internal invariant violation.
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from ..analysis import count_macs
from ..codec import CCSCodec, CCSModelSet, LatentBundle, ModelConfig, config_component_specs, get_preset, parse
from ..codec.pipeline import LATENT_STRIDE_UV, LATENT_STRIDE_Y
from ..color import ImageRGB, ImageYUV420, read_image, read_ppm, rgb_to_yuv420, write_image, yuv420_to_rgb
from ..networks import Role
from ..training import MicroConfig, grad_check, synth_dataset, train_micro
from ..utils.config import load_config, load_default_config, merge_config
from ..utils.errors import (
    ConfigError,
    EntropyCodingError,
    FormatError,
    InvariantViolation,
    ShapeError,
    TrainingDivergedError,
)
from ..utils.logging_utils import setup_logging
from ..utils.metrics import bd_rate, psnr_rgb, read_rd_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

SELFTEST_PRESET = "ccs-y8-uv8"
SELFTEST_SIZE = 128


class UsageError(Exception):
    """Invalid command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _codec_options(args) -> Dict[str, Any]:
    options = load_default_config("codec/default")
    if getattr(args, "config", None):
        options = merge_config(options, load_config(args.config))
    return merge_config(options, {
        "mixtures": getattr(args, "mixtures", None),
        "table_mode": getattr(args, "table_mode", None),
        "prior_support": getattr(args, "prior_support", None),
        "workers": getattr(args, "workers", None),
    })


def _load_models(config: ModelConfig, weights: Optional[str], seed: int) -> CCSModelSet:
    if weights:
        return CCSModelSet.load(config, weights)
    logger.warning(f"No weights directory given: using seeded random weights (seed {seed}), analysis-only mode")
    return CCSModelSet.random(config, seed=seed)


def _read_input(args) -> ImageYUV420:
    image = read_image(args.input, args.format, args.width or 0, args.height or 0)
    return rgb_to_yuv420(image) if isinstance(image, ImageRGB) else image


# Subcommands

def cmd_encode(args) -> int:
    options = _codec_options(args)
    config = get_preset(args.preset, args.lambda_id, options)
    codec = CCSCodec(_load_models(config, args.weights, args.seed), options)

    result = codec.encode_with_stats(_read_input(args), options.get("workers", 1))
    data = result.bitstream.serialize()
    Path(args.out).write_bytes(data)

    print(f"bpp={result.bpp:.4f} bytes={len(data)} encode_seconds={result.seconds:.3f}")
    return EXIT_OK


def cmd_decode(args) -> int:
    options = _codec_options(args)
    bitstream = parse(Path(args.input).read_bytes())
    if args.preset:
        config = get_preset(args.preset, bitstream.lambda_id, options)
    else:
        kind = "ccs" if bitstream.conditional else "nc"
        config = get_preset(f"{kind}-y{bitstream.n_y}-uv{bitstream.n_uv}", bitstream.lambda_id, options)
    codec = CCSCodec(_load_models(config, args.weights, args.seed), options)

    result = codec.decode_with_stats(bitstream, options.get("workers", 1))
    image = yuv420_to_rgb(result.image) if args.format == "ppm" else result.image
    write_image(args.out, image)

    width, height = bitstream.output_size
    bpp = 8 * len(bitstream.serialize()) / (width * height)
    print(f"bpp={bpp:.4f} decode_seconds={result.seconds:.3f}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    report = count_macs(get_preset(args.preset), args.height, args.width)
    text = report.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    print(f"total {report.kmac_per_pixel:.1f} KMAC/px, {report.params} params")
    return EXIT_OK


def cmd_psnr(args) -> int:
    print(f"{psnr_rgb(read_ppm(args.a), read_ppm(args.b)):.4f}")
    return EXIT_OK


def cmd_bdrate(args) -> int:
    print(f"{bd_rate(read_rd_csv(args.anchor), read_rd_csv(args.test)):.4f}")
    return EXIT_OK


def cmd_train_micro(args) -> int:
    values = load_default_config("training/micro")
    if args.config:
        values = merge_config(values, load_config(args.config))
    values = merge_config(values, {"steps": args.steps, "seed": args.seed, "lam": args.lam, "corr": args.corr})
    cfg = MicroConfig.from_dict(values)

    state = train_micro(cfg, conditional=not args.nc)
    out = Path(args.out)
    state.save_checkpoint(out)
    state.save_history_csv(out / "loss.csv")

    last = state.history[-1] if state.history else {}
    print(f"steps={state.step} " + " ".join(f"{k}={last[k]:.6f}" for k in ("D", "R_Y", "R_UV", "L") if k in last))
    return EXIT_OK


def _selftest_image(seed: int, size: int) -> ImageYUV420:
    rng = np.random.default_rng(seed)
    field = gaussian_filter(rng.uniform(0, 255, (size, size, 3)), sigma=(3, 3, 0))
    return rgb_to_yuv420(ImageRGB(np.clip(np.rint(field), 0, 255).astype(np.uint8)))


def selftest_round_trip(seed: int = 0) -> None:
    config = get_preset(SELFTEST_PRESET)
    codec = CCSCodec(CCSModelSet.random(config, seed=seed))
    image = _selftest_image(seed, SELFTEST_SIZE)
    encoded = codec.encode_with_stats(image)
    decoded = codec.decode_with_stats(parse(encoded.bitstream.serialize()))
    if not isinstance(decoded.latents, LatentBundle) or decoded.latents != encoded.latents:
        raise InvariantViolation("decoded latents differ from encoded latents")
    if (decoded.image.width, decoded.image.height) != (image.width, image.height):
        raise InvariantViolation("decoded image size differs from input")


def selftest_shapes() -> None:
    size = 256
    for preset, uv_decoder_in in (("ccs-y128-uv64", 192), ("nc-y128-uv64", 64)):
        config = get_preset(preset)
        specs = config_component_specs(config)
        y_spec = specs["y"][Role.ENCODER]
        uv_spec = specs["uv"][Role.ENCODER]
        checks = [
            (y_spec.output_size(size, size) + (y_spec.out_channels,), (size // LATENT_STRIDE_Y,) * 2 + (128,)),
            (uv_spec.output_size(size // 2, size // 2) + (uv_spec.out_channels,),
             (size // LATENT_STRIDE_UV,) * 2 + (64,)),
            (specs["uv"][Role.DECODER].in_channels, uv_decoder_in),
        ]
        for got, expected in checks:
            if got != expected:
                raise InvariantViolation(f"{preset}: shape {got} != {expected}")


def selftest_grad_check(seed: int = 0, samples: int = 50) -> None:
    cfg = MicroConfig(n_y=4, n_uv=4, seed=seed)
    models = CCSModelSet.random(cfg.model_config(True), seed=seed)
    batch = synth_dataset(seed, 1, cfg.corr, cfg.patch).batch([0])
    error = grad_check(models, batch, cfg.lam, samples=samples, seed=seed)
    if not error < 1e-4:
        raise InvariantViolation(f"gradient check failed: max relative error {error:.3e}")


SELFTESTS = {
    "round-trip": selftest_round_trip,
    "shapes": selftest_shapes,
    "grad-check": selftest_grad_check,
}


def cmd_selftest(args) -> int:
    failures = []
    for name, test in SELFTESTS.items():
        start = time.perf_counter()
        try:
            test()
        except Exception as e:
            failures.append(name)
            print(f"FAIL {name}: {e}")
            continue
        print(f"ok   {name} ({time.perf_counter() - start:.1f}s)")
    if failures:
        raise InvariantViolation(f"self-test failures: {', '.join(failures)}")
    return EXIT_OK


# Parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ccs", description="Conditional Color Separation image codec")
    parser.add_argument("--log-level", default="WARNING", help="Logging level for diagnostics on stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def codec_flags(p, preset_default):
        p.add_argument("--preset", default=preset_default, help="Model preset, e.g. ccs-y128-uv64")
        p.add_argument("--weights", default=None, help="Weights directory (random weights when omitted)")
        p.add_argument("--seed", type=int, default=0, help="Seed of random weights")
        p.add_argument("--workers", type=int, choices=(1, 2), default=None)
        p.add_argument("--config", default=None, help="Codec configuration YAML")
        p.add_argument("--mixtures", type=int, choices=(1, 2, 3), default=None)
        p.add_argument("--table-mode", choices=("exact", "scale_table"), default=None)
        p.add_argument("--prior-support", type=int, default=None)

    p = sub.add_parser("encode", help="Encode an image into a CCS bitstream")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("ppm", "i420"), default="ppm")
    p.add_argument("--width", type=int, default=None, help="Raw width (i420)")
    p.add_argument("--height", type=int, default=None, help="Raw height (i420)")
    p.add_argument("--lambda", dest="lambda_id", type=int, choices=range(4), default=0, help="Lambda index")
    codec_flags(p, "ccs-y128-uv64")
    p.set_defaults(handler=cmd_encode)

    p = sub.add_parser("decode", help="Decode a CCS bitstream")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("ppm", "i420"), default="ppm")
    codec_flags(p, None)
    p.set_defaults(handler=cmd_decode)

    p = sub.add_parser("analyze", help="Per-layer MAC and parameter report")
    p.add_argument("--preset", default="ccs-y128-uv64")
    p.add_argument("--width", type=int, default=768)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--out", default=None, help="CSV output path (stdout when omitted)")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("psnr", help="RGB PSNR of two PPM images")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(handler=cmd_psnr)

    p = sub.add_parser("bdrate", help="BD-rate of a test RD curve against an anchor (percent)")
    p.add_argument("anchor")
    p.add_argument("test")
    p.set_defaults(handler=cmd_bdrate)

    p = sub.add_parser("train-micro", help="Train a micro model on synthetic data")
    p.add_argument("--out", required=True, help="Checkpoint directory")
    p.add_argument("--config", default=None, help="Micro-training configuration YAML")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--corr", type=float, default=None)
    p.add_argument("--nc", action="store_true", help="Train the unconditioned (NC) variant")
    p.set_defaults(handler=cmd_train_micro)

    p = sub.add_parser("selftest", help="Round-trip, shape and gradient checks")
    p.set_defaults(handler=cmd_selftest)

    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)

    try:
        setup_logging(args.log_level)
    except AttributeError:
        print(f"usage error: unknown log level {args.log_level!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except (UsageError, ConfigError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    except (FormatError, ShapeError, EntropyCodingError) as e:
        logger.error(str(e))
        return EXIT_DATA
    except OSError as e:
        logger.error(str(e))
        return EXIT_IO
    except (InvariantViolation, TrainingDivergedError) as e:
        logger.error(str(e))
        return EXIT_INTERNAL
    except Exception as e:
        logger.exception(f"internal error: {e}")
        return EXIT_INTERNAL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
