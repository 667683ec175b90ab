"""Independent brute-force reference implementations for oracle-backed tests.

Each oracle recomputes a result with a deliberately different (slower, more
literal) algorithm than the library so agreement is evidence, not tautology.
"""

import numpy as np


def otsu_bin_bruteforce(values: np.ndarray, bins: int = 256) -> int:
    """Between-class-variance argmax by direct per-threshold float64 sweep.

    Work is O(bins^2): every candidate threshold recomputes its class sums
    from scratch via a triangular indicator matrix. Returns the chosen bin
    index (ties to the lowest index). Caller handles the constant-map case.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    lo, hi = values.min(), values.max()
    assert hi > lo, "constant maps never reach the sweep"
    idx = np.minimum(((values - lo) / (hi - lo) * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    centers = np.arange(bins, dtype=np.float64)
    # tri[t, i] = 1 for i <= t: row t holds class-0 membership for threshold t
    tri = np.tril(np.ones((bins, bins)))
    n = counts.sum()
    c0 = tri @ counts
    s0 = tri @ (centers * counts)
    total = (centers * counts).sum()
    c1 = n - c0
    s1 = total - s0
    valid = (c0 > 0) & (c1 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mu0 = s0 / c0
        mu1 = s1 / c1
        sigma_b = (c0 / n) * (c1 / n) * (mu0 - mu1) ** 2
    sigma_b = np.where(valid, sigma_b, 0.0)
    return int(np.argmax(sigma_b))


def otsu_tau_bruteforce(values: np.ndarray, bins: int = 256) -> float:
    """Data-unit threshold from the brute-force bin choice."""
    values = np.asarray(values, dtype=np.float64).ravel()
    lo, hi = values.min(), values.max()
    if hi == lo:
        return float(lo)
    t = otsu_bin_bruteforce(values, bins)
    return float(lo + (t + 1) * (hi - lo) / bins)


def rcva_bruteforce(x1: np.ndarray, x2: np.ndarray, w: int) -> np.ndarray:
    """Neighborhood-robust magnitude by literal per-pixel loops.

    For every pixel, scans the truncated (2w+1)^2 window in both directions
    with plain Python loops and float64 arithmetic; returns the pixel-wise
    max of the two directional minima's square roots.
    """
    b, h, wd = x1.shape
    x1 = x1.astype(np.float64)
    x2 = x2.astype(np.float64)
    rho = np.zeros((h, wd))
    for y in range(h):
        for x in range(wd):
            best12 = np.inf
            best21 = np.inf
            for qy in range(max(0, y - w), min(h, y + w + 1)):
                for qx in range(max(0, x - w), min(wd, x + w + 1)):
                    d12 = 0.0
                    d21 = 0.0
                    for band in range(b):
                        d12 += (x2[band, qy, qx] - x1[band, y, x]) ** 2
                        d21 += (x1[band, qy, qx] - x2[band, y, x]) ** 2
                    best12 = min(best12, d12)
                    best21 = min(best21, d21)
            rho[y, x] = max(np.sqrt(best12), np.sqrt(best21))
    return rho
