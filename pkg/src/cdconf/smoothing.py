"""Confidence estimation by noisy re-detection.

The primary detection runs once on the clean pair with the primary extractor.
A secondary extractor then re-runs the full detection chain K times on
Gaussian-perturbed copies of the inputs (fresh threshold each time), and the
per-pixel count of changed verdicts K' is fused with the primary label: a
pixel is confident when enough of the noisy ensemble agrees with the primary
verdict, and not-confident otherwise.

Every iteration draws its noise from a private counter-based stream derived
from (master_seed, image role, iteration index), so results are bit-identical
regardless of execution order or thread count: the reduction into K' is a
commutative integer sum.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .dcva import ChangeResult, detect_pair
from .errors import RejectedValue, ShapeMismatch
from .features import ExtractorSpec
from .raster import ConfidenceMap, ConfidenceState, LabelMap, Raster
from .rng import ROLE_NOISE_T1, ROLE_NOISE_T2, generator, mix64

# Decimal confidence thresholds like 0.9 have no exact binary representation
# (0.9 * 10 == 9.000000000000002), so the count comparison allows this much
# slack to honor the decimal intent of k_tau * k.
_KTAU_EPS = 1e-9


@dataclass(frozen=True)
class SmoothingConfig:
    """Noise level, ensemble size K, confidence threshold in (0, 1], master seed."""

    sigma: float = 0.1
    iterations: int = 10
    conf_threshold: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise RejectedValue(f"sigma must be >= 0, got {self.sigma}")
        if self.iterations < 1:
            raise RejectedValue(f"iterations must be >= 1, got {self.iterations}")
        if not 0 < self.conf_threshold <= 1:
            raise RejectedValue(f"conf_threshold must be in (0, 1], got {self.conf_threshold}")


@dataclass(frozen=True, eq=False)
class EnsembleCounts:
    """Per-pixel count of changed verdicts over k noisy re-detections."""

    k_prime: np.ndarray
    k: int

    def __post_init__(self):
        if self.k_prime.ndim != 2 or self.k_prime.dtype != np.int32:
            raise ValueError("k_prime must be a 2-d int32 array")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.k_prime.min(initial=0) < 0 or self.k_prime.max(initial=0) > self.k:
            raise ValueError("k_prime out of [0, k]")

    @property
    def height(self) -> int:
        return self.k_prime.shape[0]

    @property
    def width(self) -> int:
        return self.k_prime.shape[1]


def perturb(x: Raster, sigma: float, stream_seed: int) -> Raster:
    """Add i.i.d. Gaussian(0, sigma^2) noise from the given stream, unclamped.

    Values may leave [0, 1]: clamping would bias the ensemble near the range
    edges.  sigma=0 returns the input itself, bit for bit.
    """
    if sigma == 0:
        return x
    noise = generator(stream_seed).standard_normal(x.data.shape) * sigma
    return Raster((x.data.astype(np.float64) + noise).astype(np.float32))


def iteration_seeds(master_seed: int, iteration: int) -> tuple[int, int]:
    """Stream seeds for the two image roles of one 1-based ensemble iteration."""
    return (
        mix64(master_seed, ROLE_NOISE_T1, iteration),
        mix64(master_seed, ROLE_NOISE_T2, iteration),
    )


def ensemble_counts_with(
    x1: Raster,
    x2: Raster,
    labeler: Callable[[Raster, Raster], LabelMap],
    cfg: SmoothingConfig,
    *,
    threads: int = 1,
    iteration_order: Sequence[int] | None = None,
) -> EnsembleCounts:
    """Ensemble scaffolding with a pluggable per-iteration change detector.

    Each iteration perturbs both images with independent noise streams
    (correlated noise would cancel in the difference) and calls ``labeler`` on
    the noisy pair.  ``iteration_order`` reorders execution for
    order-independence harnesses; the counts are identical for any
    permutation because the reduction is a commutative integer sum.
    """
    if x1.data.shape != x2.data.shape:
        raise ShapeMismatch(f"raster shapes differ: {x1.data.shape} vs {x2.data.shape}")
    order = range(1, cfg.iterations + 1) if iteration_order is None else iteration_order
    if sorted(order) != list(range(1, cfg.iterations + 1)):
        raise RejectedValue("iteration_order must permute 1..K")

    def one(k: int) -> np.ndarray:
        s1, s2 = iteration_seeds(cfg.master_seed, k)
        return labeler(perturb(x1, cfg.sigma, s1), perturb(x2, cfg.sigma, s2)).changed

    k_prime = np.zeros((x1.height, x1.width), dtype=np.int32)
    if threads <= 1:
        for k in order:
            k_prime += one(k)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for changed in pool.map(one, order):
                k_prime += changed
    return EnsembleCounts(k_prime=k_prime, k=cfg.iterations)


def ensemble_counts(
    x1: Raster,
    x2: Raster,
    f2spec: ExtractorSpec,
    cfg: SmoothingConfig,
    *,
    threads: int = 1,
    iteration_order: Sequence[int] | None = None,
) -> EnsembleCounts:
    """Run K noisy re-detections with the secondary extractor and count
    changed verdicts per pixel (fresh histogram threshold every iteration)."""
    return ensemble_counts_with(
        x1,
        x2,
        lambda a, b: detect_pair(a, b, f2spec).labels,
        cfg,
        threads=threads,
        iteration_order=iteration_order,
    )


def fuse_confidence(
    primary: ChangeResult, counts: EnsembleCounts, k_tau: float
) -> ConfidenceMap:
    """Fuse the primary verdict with ensemble agreement into a tri-state map.

    ConfidentChanged where the primary says changed and K' >= k_tau*K;
    ConfidentUnchanged where the primary says unchanged and K - K' >= k_tau*K;
    NotConfident everywhere else.  The fusion validates the primary verdict
    but never overrides it.
    """
    if not 0 < k_tau <= 1:
        raise RejectedValue(f"k_tau must be in (0, 1], got {k_tau}")
    changed = primary.labels.changed
    if changed.shape != counts.k_prime.shape:
        raise ShapeMismatch(
            f"primary {changed.shape} vs counts {counts.k_prime.shape}"
        )
    need = k_tau * counts.k - _KTAU_EPS
    agree_changed = counts.k_prime >= need
    agree_unchanged = (counts.k - counts.k_prime) >= need
    states = np.full(changed.shape, int(ConfidenceState.NOT_CONFIDENT), dtype=np.uint8)
    states[changed & agree_changed] = int(ConfidenceState.CONFIDENT_CHANGED)
    states[~changed & agree_unchanged] = int(ConfidenceState.CONFIDENT_UNCHANGED)
    return ConfidenceMap(states)


@dataclass(frozen=True)
class ConfidentDetection:
    """One full run: clean primary detection, vote counts, fused tri-state map.

    counts is None for confidence mechanisms that have no ensemble.
    """

    primary: ChangeResult
    counts: EnsembleCounts | None
    confidence: ConfidenceMap


def run_proposed(
    x1: Raster,
    x2: Raster,
    f1spec: ExtractorSpec,
    f2spec: ExtractorSpec,
    cfg: SmoothingConfig,
    *,
    threads: int = 1,
) -> ConfidentDetection:
    """Primary detection on clean inputs plus ensemble-fused confidence map."""
    primary = detect_pair(x1, x2, f1spec)
    counts = ensemble_counts(x1, x2, f2spec, cfg, threads=threads)
    fused = fuse_confidence(primary, counts, cfg.conf_threshold)
    return ConfidentDetection(primary, counts, fused)
