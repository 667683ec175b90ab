"""Comparison confidence mechanisms: unified single-extractor smoothing,
neighborhood-robust band-space re-detection, and threshold-distance selection.

All three emit the same ConfidentDetection bundle as the dual-model pipeline
so evaluations compare like with like, and all three keep the fusion
invariant that a confident pixel always carries its primary label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dcva import MagnitudeMap, detect_pair, otsu_threshold, threshold_labels
from .errors import RejectedValue, ShapeMismatch
from .features import ExtractorSpec
from .raster import ConfidenceMap, ConfidenceState, LabelMap, Raster
from .smoothing import (
    ConfidentDetection,
    SmoothingConfig,
    ensemble_counts_with,
    fuse_confidence,
    run_proposed,
)


@dataclass(frozen=True)
class RcvaConfig:
    """Neighborhood radius w; candidate matches live in a (2w+1)x(2w+1) window."""

    window_radius: int = 1

    def __post_init__(self):
        if self.window_radius < 0:
            raise RejectedValue(f"window_radius must be >= 0, got {self.window_radius}")


def run_unified(
    x1: Raster,
    x2: Raster,
    f1spec: ExtractorSpec,
    cfg: SmoothingConfig,
    *,
    threads: int = 1,
) -> ConfidentDetection:
    """Smoothing with the primary extractor doing double duty as the secondary."""
    return run_proposed(x1, x2, f1spec, f1spec, cfg, threads=threads)


def _directional_min_sq(ref: Raster, cand: Raster, w: int) -> np.ndarray:
    """Per pixel p: min over the window around p of sum_b (cand(q,b) - ref(p,b))^2.

    Implemented as a loop over window offsets with slice arithmetic; each
    offset updates the running minimum on the sub-rectangle where the offset
    stays in bounds, which truncates border neighborhoods for free.
    """
    _, h, wd = ref.data.shape
    best = np.full((h, wd), np.inf)
    for dy in range(-w, w + 1):
        for dx in range(-w, w + 1):
            y0, y1 = max(0, -dy), min(h, h - dy)
            x0, x1 = max(0, -dx), min(wd, wd - dx)
            if y0 >= y1 or x0 >= x1:
                continue
            diff = cand.data[:, y0 + dy : y1 + dy, x0 + dx : x1 + dx] - ref.data[:, y0:y1, x0:x1]
            d2 = np.sum(diff.astype(np.float64) ** 2, axis=0)
            region = best[y0:y1, x0:x1]
            np.minimum(region, d2, out=region)
    return best


def rcva_magnitude(x1: Raster, x2: Raster, cfg: RcvaConfig) -> MagnitudeMap:
    """Neighborhood-robust band-space change magnitude.

    Direction 1->2 matches each pixel of the first image against its best
    single neighbor in the second (one shared match across all bands,
    minimizing the per-pixel squared sum); direction 2->1 swaps the roles;
    the magnitude is the pixel-wise max of the two directions.  w=0 reduces
    to the plain per-pixel band-difference norm.
    """
    if x1.data.shape != x2.data.shape:
        raise ShapeMismatch(f"raster shapes differ: {x1.data.shape} vs {x2.data.shape}")
    w = cfg.window_radius
    rho12 = np.sqrt(_directional_min_sq(x1, x2, w))
    rho21 = np.sqrt(_directional_min_sq(x2, x1, w))
    return MagnitudeMap(np.maximum(rho12, rho21).astype(np.float32))


def rcva_labeler(rcfg: RcvaConfig):
    """Binary labeler for ensemble voting: thresholded neighborhood magnitude."""

    def labeler(a: Raster, b: Raster) -> LabelMap:
        rho = rcva_magnitude(a, b, rcfg)
        return threshold_labels(rho, otsu_threshold(rho))

    return labeler


def run_conf_rcva(
    x1: Raster,
    x2: Raster,
    f1spec: ExtractorSpec,
    cfg: SmoothingConfig,
    rcfg: RcvaConfig,
    *,
    threads: int = 1,
) -> ConfidentDetection:
    """Deep primary detection validated by a noisy band-space ensemble.

    Same scaffolding as the dual-extractor pipeline, but each noisy
    iteration's labels come from histogram-thresholded neighborhood-robust
    magnitudes on the raw bands instead of a second feature extractor.
    """
    primary = detect_pair(x1, x2, f1spec)
    counts = ensemble_counts_with(x1, x2, rcva_labeler(rcfg), cfg, threads=threads)
    fused = fuse_confidence(primary, counts, cfg.conf_threshold)
    return ConfidentDetection(primary, counts, fused)


def run_deep_magnitude(
    x1: Raster, x2: Raster, f1spec: ExtractorSpec
) -> ConfidentDetection:
    """Confidence from distance to the decision threshold, no ensemble.

    rho' = |rho - tau| measures how far each pixel sits from the primary
    threshold; a second histogram threshold on rho' separates clear calls
    from borderline ones.  Pixels with rho' above that second threshold keep
    their primary label as confident; the rest are not-confident.
    """
    primary = detect_pair(x1, x2, f1spec)
    rho_prime = MagnitudeMap(
        np.abs(primary.magnitude.rho.astype(np.float64) - primary.tau).astype(np.float32)
    )
    tau_prime = otsu_threshold(rho_prime)
    confident = rho_prime.rho > np.float64(tau_prime)
    changed = primary.labels.changed
    states = np.full(changed.shape, int(ConfidenceState.NOT_CONFIDENT), dtype=np.uint8)
    states[confident & changed] = int(ConfidenceState.CONFIDENT_CHANGED)
    states[confident & ~changed] = int(ConfidenceState.CONFIDENT_UNCHANGED)
    return ConfidentDetection(primary, None, ConfidenceMap(states))
