"""
The CCS-vs-NC conditioning experiment.

Two micro models, identical except for the luma conditioning of the UV path,
are trained on the same correlated synthetic data with the same seeds and
steps. CCS is trained at one lambda and NC at a sweep of lambdas around it;
the NC held-out UV rate is interpolated at the CCS UV distortion, so the two
rates are compared at matched distortion. Seeds whose distortions the NC
sweep does not reach are reported and left out of the comparison.
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..codec.config import LAMBDAS, lambda_index
from ..utils.logging_utils import ExperimentLogger
from .data import synth_dataset
from .trainer import MicroConfig, MicroTrainer

logger = logging.getLogger(__name__)

MATCH_TOLERANCE = 0.05
HOLDOUT_SEED_OFFSET = 10_000


@dataclass
class ConditioningResult:
    """
    Held-out UV rate (bits per luma pixel) and UV MSE of both models.

    ``rate_uv_nc`` is the NC rate at ``distortion_uv_ccs``; it is NaN when the
    NC sweep spans ``[distortion_uv_nc_min, distortion_uv_nc_max]`` without
    reaching it, and ``matched`` is then False.
    """
    seed: int
    corr: float
    rate_uv_ccs: float
    rate_uv_nc: float
    distortion_uv_ccs: float
    distortion_uv_nc_min: float
    distortion_uv_nc_max: float
    nc_runs: int
    matched: bool

    @property
    def distortion_uv_nc(self) -> float:
        """UV MSE at which the NC rate is read; the CCS distortion when matched."""
        return self.distortion_uv_ccs if self.matched else math.nan

    @property
    def relative_gap(self) -> float:
        """(NC - CCS) / NC; positive when conditioning saves rate, NaN when unmatched."""
        if not self.matched:
            return math.nan
        return (self.rate_uv_nc - self.rate_uv_ccs) / self.rate_uv_nc if self.rate_uv_nc else 0.0

    @property
    def ccs_wins(self) -> bool:
        return self.matched and self.rate_uv_ccs < self.rate_uv_nc

    def to_dict(self) -> Dict[str, Any]:
        return {**asdict(self), "distortion_uv_nc": self.distortion_uv_nc, "relative_gap": self.relative_gap}


def bracket_lambdas(lam: float) -> Tuple[float, ...]:
    """``lam`` and its neighbours in LAMBDAS."""
    i = lambda_index(lam)
    return LAMBDAS[max(i - 1, 0):i + 2]


def rate_at_distortion(distortions: Sequence[float], rates: Sequence[float], target: float,
                       tolerance: float = MATCH_TOLERANCE) -> Optional[float]:
    """
    Rate of a sampled RD curve at ``target`` distortion.

    Interpolates linearly in log distortion between the sampled points. A
    target outside the sampled range is still matched when it lies within
    ``tolerance`` (relative) of the nearest end, by extending the end
    segment; otherwise the result is None.
    """
    d = np.asarray(distortions, dtype=np.float64)
    r = np.asarray(rates, dtype=np.float64)
    if d.size == 0 or d.size != r.size or target <= 0 or np.any(d <= 0):
        return None
    order = np.argsort(d)
    d, r = d[order], r[order]

    if d[0] <= target <= d[-1]:
        if d.size == 1:
            return float(r[0])
        return float(np.interp(math.log(target), np.log(d), r))

    end = 0 if target < d[0] else -1
    if abs(target - d[end]) / d[end] > tolerance:
        return None
    if d.size == 1 or d[1] == d[0] or d[-1] == d[-2]:
        return float(r[end])
    i, j = (0, 1) if end == 0 else (-2, -1)
    slope = (r[j] - r[i]) / (math.log(d[j]) - math.log(d[i]))
    return float(max(r[end] + slope * (math.log(target) - math.log(d[end])), 0.0))


def compare_ccs_nc(seed: int, cfg: Optional[MicroConfig] = None, corr: float = 0.9,
                   parallel: bool = False, nc_lambdas: Optional[Sequence[float]] = None) -> ConditioningResult:
    """
    Train CCS and NC micro models and compare their held-out UV rates.

    Args:
        seed: Seed of data, weights and quantization noise (shared by every run)
        cfg: Training configuration; ``cfg.seed`` and ``cfg.corr`` are overridden
        corr: Luma/chroma correlation of the synthetic data
        parallel: Train the runs concurrently
        nc_lambdas: Lambdas of the NC sweep (``cfg.lam`` and its neighbours by default)

    Returns:
        ConditioningResult with the NC rate taken at the CCS UV distortion
    """
    cfg = replace(cfg or MicroConfig(steps=1500), seed=seed, corr=corr)
    nc_lambdas = tuple(nc_lambdas or bracket_lambdas(cfg.lam))
    train = synth_dataset(seed, cfg.dataset_size, corr, cfg.patch)
    holdout = synth_dataset(seed + HOLDOUT_SEED_OFFSET, cfg.holdout_size, corr, cfg.patch)

    def run(conditional: bool, lam: float) -> Dict[str, float]:
        trainer = MicroTrainer(replace(cfg, lam=lam), conditional, train)
        trainer.train()
        return trainer.evaluate(holdout)

    jobs = [(True, cfg.lam)] + [(False, lam) for lam in nc_lambdas]
    if parallel:
        with ThreadPoolExecutor(max_workers=len(jobs), thread_name_prefix="micro") as pool:
            futures = [pool.submit(run, conditional, lam) for conditional, lam in jobs]
            outputs = [f.result() for f in futures]
    else:
        outputs = [run(conditional, lam) for conditional, lam in jobs]

    ccs, sweep = outputs[0], outputs[1:]
    d_ccs = ccs["D_UV"]
    d_nc = [out["D_UV"] for out in sweep]
    rate_nc = rate_at_distortion(d_nc, [out["R_UV"] for out in sweep], d_ccs)
    matched = rate_nc is not None
    if not matched:
        logger.warning(f"seed {seed}, corr {corr}: CCS UV distortion {d_ccs:.3e} outside the NC sweep "
                       f"[{min(d_nc):.3e}, {max(d_nc):.3e}]; point skipped")

    result = ConditioningResult(
        seed=seed,
        corr=corr,
        rate_uv_ccs=ccs["R_UV"],
        rate_uv_nc=rate_nc if matched else math.nan,
        distortion_uv_ccs=d_ccs,
        distortion_uv_nc_min=min(d_nc),
        distortion_uv_nc_max=max(d_nc),
        nc_runs=len(sweep),
        matched=matched,
    )
    if matched:
        logger.info(f"seed {seed}, corr {corr}: R_UV CCS {result.rate_uv_ccs:.4f} vs NC {result.rate_uv_nc:.4f} "
                    f"({result.relative_gap:+.1%})")
    return result


class ConditioningExperiment:
    """Runs compare_ccs_nc over seeds and correlation levels and collects a summary."""

    def __init__(self, config: Dict[str, Any] = None):
        self.config = config or {}
        self.logger = logging.getLogger(self.__class__.__name__)

        self.experiment_name = self.config.get("experiment_name", "ccs_vs_nc")
        self.output_dir = Path(self.config.get("output_dir", "experiments/results"))
        self.seeds = list(self.config.get("seeds", [0, 1, 2, 3, 4]))
        self.corrs = list(self.config.get("corrs", [0.9, 0.0]))
        self.parallel = self.config.get("parallel", False)
        self.micro = MicroConfig.from_dict(self.config.get("training", {}))
        self.nc_lambdas = tuple(self.config.get("nc_lambdas") or bracket_lambdas(self.micro.lam))
        for lam in self.nc_lambdas:
            lambda_index(lam)

        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.exp_logger = ExperimentLogger(self.experiment_name, str(self.output_dir.parent / "logs"))

        self.logger.info(f"Initialized conditioning experiment: {len(self.seeds)} seeds x {self.corrs}, "
                         f"NC sweep {self.nc_lambdas}")

    def run(self) -> Dict[str, Any]:
        self.exp_logger.log_config({"seeds": self.seeds, "corrs": self.corrs,
                                    "nc_lambdas": list(self.nc_lambdas), "training": self.micro.to_dict()})

        results: List[ConditioningResult] = []
        for corr in self.corrs:
            for seed in self.seeds:
                result = compare_ccs_nc(seed, self.micro, corr, self.parallel, self.nc_lambdas)
                results.append(result)
                self.exp_logger.log_step(len(results) - 1, result.to_dict())

        summary = self.summarize(results)
        self.exp_logger.log_results(summary)
        self._save(results, summary)
        return {"results": [r.to_dict() for r in results], "summary": summary}

    @staticmethod
    def summarize(results: List[ConditioningResult]) -> Dict[str, Any]:
        """Per correlation level: matched and skipped runs, CCS wins and rate gaps over matched runs."""
        summary = {}
        for corr in sorted({r.corr for r in results}, reverse=True):
            group = [r for r in results if r.corr == corr]
            gaps = [r.relative_gap for r in group if r.matched]
            summary[f"corr_{corr}"] = {
                "runs": len(group),
                "matched": len(gaps),
                "skipped": len(group) - len(gaps),
                "ccs_wins": sum(r.ccs_wins for r in group),
                "mean_relative_gap": float(np.mean(gaps)) if gaps else math.nan,
                "max_abs_relative_gap": float(np.max(np.abs(gaps))) if gaps else math.nan,
            }
        return summary

    def _save(self, results: List[ConditioningResult], summary: Dict[str, Any]):
        pd.DataFrame([r.to_dict() for r in results]).to_csv(
            self.output_dir / f"{self.experiment_name}_runs.csv", index=False)
        with open(self.output_dir / f"{self.experiment_name}_summary.json", "w") as f:
            json.dump(summary, f, indent=2)
        self.logger.info(f"Saved conditioning results to {self.output_dir}")

    def cleanup(self):
        self.exp_logger.cleanup()
