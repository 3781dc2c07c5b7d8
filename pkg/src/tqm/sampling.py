"""Seeded inverse-CDF sampling of outcome densities.

Uniforms come in fixed-size chunks, chunk c drawn from
``default_rng([seed, c])``, so draw k depends only on (seed, k).  Threads
therefore reproduce the serial sequence bit for bit.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import stats

from .povm import DensityProfile

CHUNK = 4096


def thread_count(requested: int | None = None) -> int:
    """Worker count, capped by the TQM_THREADS environment variable."""
    cap = os.environ.get("TQM_THREADS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise ValueError(f"TQM_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


def _uniforms(seed: int, chunk: int, size: int) -> np.ndarray:
    return np.random.default_rng([seed, chunk]).random(size)


def sample_density(density: DensityProfile, n: int, seed: int,
                   threads: int | None = None) -> np.ndarray:
    """n draws from the piecewise-linear-CDF law stored on the grid."""
    if n < 1:
        raise ValueError("need n >= 1 samples")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    cdf = density.cdf_nodes()
    t = density.grid.points
    # drop flat stretches so the inverse is single-valued
    keep = np.concatenate(([True], np.diff(cdf) > 0))
    cdf, t = cdf[keep], t[keep]
    n_chunks = math.ceil(n / CHUNK)

    def work(c):
        size = min(CHUNK, n - c * CHUNK)
        return np.interp(_uniforms(seed, c, CHUNK)[:size], cdf, t)

    workers = thread_count(threads)
    if workers == 1 or n_chunks == 1:
        parts = [work(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(n_chunks)))
    return np.concatenate(parts)


def sample_outcomes(state, clock, tgrid, n: int, seed: int,
                    threads: int | None = None) -> np.ndarray:
    """Draws from the clock-model outcome law of ``state`` on ``tgrid``."""
    from .clock import outcome_density

    return sample_density(outcome_density(state, clock, tgrid), n, seed, threads)


def ks_statistic(samples, density: DensityProfile) -> float:
    """Kolmogorov-Smirnov distance to the grid CDF (linear between nodes)."""
    cdf, t = density.cdf_nodes(), density.grid.points
    res = stats.kstest(np.asarray(samples), lambda x: np.interp(x, t, cdf))
    return float(res.statistic)


def write_samples(path, samples):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("idx,tau\n")
        for i, v in enumerate(samples):
            fh.write(f"{i},{v:.17g}\n")
