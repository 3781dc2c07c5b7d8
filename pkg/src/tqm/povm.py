"""Ideal (demolition) time measurement: outcome law, ML estimate, no-go sweep.

This module deliberately returns only outcome statistics.  There is no
posterior-state output for the ideal measurement.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .representation import EnergyState, TimeGrid, energy_to_time


class ClippedIntervalWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class DensityProfile:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.m,):
            raise ValueError("density length does not match its grid")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite and nonnegative")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mass(self) -> float:
        return float(np.sum(self.values) * self.grid.step)

    @property
    def tail_loss(self) -> float:
        """Mass missing from the grid window, assuming a unit-mass law."""
        return 1.0 - self.mass

    def probability(self, lo: float, hi: float) -> float:
        """Integral of the piecewise-linear interpolant over [lo, hi].

        Exactly additive over adjacent intervals.  Parts of [lo, hi] outside
        the grid contribute nothing; a :class:`ClippedIntervalWarning` says so.
        """
        if not lo < hi:
            raise ValueError("interval needs lo < hi")
        t = self.grid.points
        if lo < t[0] or hi > t[-1]:
            warnings.warn(f"interval [{lo}, {hi}] clipped to the grid span",
                          ClippedIntervalWarning, stacklevel=2)
        return self._cum(hi) - self._cum(lo)

    def _cum(self, x: float) -> float:
        t, p, dt = self.grid.points, self.values, self.grid.step
        if x <= t[0]:
            return 0.0
        x = min(x, t[-1])
        i = min(int((x - t[0]) // dt), self.grid.m - 2)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * dt)))
        u = x - t[i]
        slope = (p[i + 1] - p[i]) / dt
        return float(cum[i] + p[i] * u + 0.5 * slope * u * u)

    def cdf_nodes(self) -> np.ndarray:
        """Trapezoidal cumulative mass at every node, normalized to end at 1."""
        p, dt = self.values, self.grid.step
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * dt)))
        if cum[-1] <= 0:
            raise ValueError("density has zero mass")
        return cum / cum[-1]

    def to_csv(self, path, column: str = "p"):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"tau,{column}\n")
            for t, v in zip(self.grid.points, self.values):
                fh.write(f"{t:.17g},{v:.17g}\n")


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("interval needs lo < hi")


def ideal_time_density(state: EnergyState, tgrid: TimeGrid) -> DensityProfile:
    h = energy_to_time(state, tgrid)
    return DensityProfile(tgrid, np.abs(h.values) ** 2)


def povm_probability(state: EnergyState, interval: Interval, tgrid: TimeGrid) -> float:
    return ideal_time_density(state, tgrid).probability(interval.lo, interval.hi)


def ml_estimate(density: DensityProfile) -> float:
    """Grid maximum of the density, refined by a three-point parabola.

    When several nodes share the maximum the smallest tau is returned
    unrefined.
    """
    p, t = density.values, density.grid.points
    top = p.max()
    if not top > 0:
        raise ValueError("all-zero density has no maximum")
    hits = np.flatnonzero(p == top)
    i = int(hits[0])
    if hits.size > 1 or i == 0 or i == p.size - 1:
        return float(t[i])
    y0, y1, y2 = p[i - 1], p[i], p[i + 1]
    curv = y0 - 2 * y1 + y2
    if curv >= 0:
        return float(t[i])
    off = 0.5 * (y0 - y2) / curv
    return float(t[i] + np.clip(off, -0.5, 0.5) * density.grid.step)


def total_variation(p: DensityProfile, q: DensityProfile) -> float:
    """TV distance of two unit-mass laws seen through the grid window.

    Everything outside the window is lumped into one overflow outcome, so
    the value is the exact TV of the coarsened laws and a lower bound on
    the TV of the full laws (equal when p - q keeps one sign off-grid).
    """
    if p.grid != q.grid:
        raise ValueError("densities live on different grids")
    inside = np.sum(np.abs(p.values - q.values)) * p.grid.step
    outside = abs(p.tail_loss - q.tail_loss)
    return float(0.5 * (inside + outside))


@dataclass
class NogoTable:
    lambdas: list
    distances: list

    @property
    def positive(self) -> bool:
        return all(d > 0 for d in self.distances)

    @property
    def decreasing(self) -> bool:
        d = self.distances
        return all(a > b for a, b in zip(d, d[1:]))

    def rows(self):
        return list(zip(self.lambdas, self.distances))

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("lambda,tv_distance\n")
            for lam, d in self.rows():
                fh.write(f"{lam:.17g},{d:.17g}\n")


def nogo_sweep(state: EnergyState, widths, tgrid: TimeGrid) -> NogoTable:
    """TV distance between clock-realized and ideal densities per clock width.

    Each width is the rate of an exponential (case a) clock.  A vanishing
    distance would require a delta-function pointer, which no normalizable
    clock provides, so every row stays strictly positive.
    """
    from .clock import ExponentialClock, outcome_density

    widths = [float(w) for w in widths]
    if not widths:
        raise ValueError("no clock widths given")
    if any(w <= 0 for w in widths):
        raise ValueError("clock widths must be positive")
    if any(a < b for a, b in zip(widths, widths[1:])):
        raise ValueError("widths must be sorted in descending order")
    ideal = ideal_time_density(state, tgrid)
    dists = []
    for lam in widths:
        real = outcome_density(state, ExponentialClock(lam, state.params), tgrid)
        dists.append(total_variation(real, ideal))
    return NogoTable(widths, dists)


def lorentzian_tv(a: float, b: float) -> float:
    """Closed-form TV distance between centred Cauchy laws of scales a, b."""
    a, b = sorted((a, b))
    x = math.sqrt(a * b)
    return (2 / math.pi) * (math.atan(x / a) - math.atan(x / b))
