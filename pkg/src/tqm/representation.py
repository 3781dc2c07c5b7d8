"""Positive-energy states and their time representation.

A state is a complex amplitude psi(eps) sampled at the midpoints of a
uniform grid on [0, eps_max).  Integrals over energy use the midpoint rule,
so the time representation

    h(tau) = (2*pi*hbar)**-0.5 * sum_j exp(1j*eps_j*tau/hbar) psi_j d_eps

is an exact trigonometric sum, periodic (up to sign) with period
``2*pi*hbar/d_eps``.  :meth:`TimeGrid.dual` returns the grid spanning one
such period, on which Parseval and the energy/time round trip are exact.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import erfc

from ._fourier import fourier_points, fourier_sum

log = logging.getLogger(__name__)

# constructors reject profiles whose on-grid mass fraction is below this
SUPPORT_FLOOR = 1e-12


@dataclass(frozen=True)
class PhysicsParams:
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive and finite, got {self.hbar}")


@dataclass(frozen=True)
class EnergyGrid:
    """Midpoint grid eps_j = (j + 1/2) * step on [0, eps_max)."""

    eps_max: float
    n: int

    def __post_init__(self):
        if not self.eps_max > 0:
            raise ValueError("eps_max must be positive")
        if self.n < 2:
            raise ValueError("energy grid needs at least 2 samples")

    @property
    def step(self) -> float:
        return self.eps_max / self.n

    @property
    def points(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.step

    def shift_index(self, lam: float, rtol: float = 1e-9):
        """Index offset for ``lam`` if it is a whole number of steps, else None."""
        q = lam / self.step
        r = round(q)
        if abs(q - r) <= rtol * max(1.0, abs(q)):
            return int(r)
        return None


@dataclass(frozen=True)
class TimeGrid:
    """Uniform nodes tau_i = tau_min + i*step, i = 0..m-1, step = span/m."""

    tau_min: float
    tau_max: float
    m: int

    def __post_init__(self):
        if not self.tau_min < self.tau_max:
            raise ValueError("tau_min must be below tau_max")
        if self.m < 2:
            raise ValueError("time grid needs at least 2 samples")

    @property
    def step(self) -> float:
        return (self.tau_max - self.tau_min) / self.m

    @property
    def points(self) -> np.ndarray:
        return self.tau_min + self.step * np.arange(self.m)

    @classmethod
    def dual(cls, egrid: EnergyGrid, params: PhysicsParams, m: int | None = None):
        """One full period of the discrete time representation, centred on 0.

        The default ``m = 2n`` resolves energies in [-eps_max, eps_max), so the
        negative-energy content of a time function stays measurable.
        """
        period = 2 * math.pi * params.hbar / egrid.step
        return cls(-period / 2, period / 2, 2 * egrid.n if m is None else m)

    def shift_index(self, t: float, rtol: float = 1e-9):
        q = t / self.step
        r = round(q)
        if abs(q - r) <= rtol * max(1.0, abs(q)):
            return int(r)
        return None


# --- state specifications -------------------------------------------------

@dataclass(frozen=True)
class Indicator:
    a: float
    b: float


@dataclass(frozen=True)
class Gauss:
    """Gaussian energy profile; ``sigma`` is the std of |psi|**2."""

    mu: float
    sigma: float


@dataclass(frozen=True)
class Exponential:
    beta: float


@dataclass(frozen=True)
class FromFile:
    path: str


StateSpec = Union[Indicator, Gauss, Exponential, FromFile]


@dataclass(frozen=True, eq=False)
class EnergyState:
    grid: EnergyGrid
    amps: np.ndarray
    params: PhysicsParams = PhysicsParams()
    norm_factor: float = 1.0
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        if amps.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} amplitudes, got {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2) * self.grid.step)

    def normalized(self) -> "EnergyState":
        n2 = self.norm2
        if n2 <= 0:
            raise ValueError("cannot normalize the zero state")
        c = 1.0 / math.sqrt(n2)
        return EnergyState(self.grid, self.amps * c, self.params,
                           self.norm_factor * c, dict(self.notes))

    def replace(self, amps, **notes) -> "EnergyState":
        """Same grid and params, new amplitudes (unnormalized)."""
        return EnergyState(self.grid, amps, self.params, 1.0, notes)

    def __add__(self, other):
        _check_compatible(self, other)
        return self.replace(self.amps + other.amps)

    def __mul__(self, c):
        return self.replace(self.amps * complex(c))

    __rmul__ = __mul__

    def to_csv(self, path):
        eps = self.grid.points
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("eps,re,im\n")
            for e, a in zip(eps, self.amps):
                fh.write(f"{e:.17g},{a.real:.17g},{a.imag:.17g}\n")


@dataclass(frozen=True, eq=False)
class TimeAmplitude:
    grid: TimeGrid
    values: np.ndarray
    params: PhysicsParams = PhysicsParams()

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.step)


@dataclass(frozen=True)
class CoherentLabel:
    """Label of the coherent vector |s) with s = k + i*tau/hbar."""

    k: float
    tau: float = 0.0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("coherent label needs k >= 0")

    def s(self, hbar: float = 1.0) -> complex:
        return complex(self.k, self.tau / hbar)

    @classmethod
    def from_complex(cls, s: complex, hbar: float = 1.0) -> "CoherentLabel":
        s = complex(s)
        return cls(s.real, s.imag * hbar)


def _check_compatible(a: EnergyState, b: EnergyState):
    if a.grid != b.grid:
        raise ValueError("energy grids differ")
    if a.params != b.params:
        raise ValueError("physics parameters differ")


# --- constructors -----------------------------------------------------------

def read_table(path, columns):
    """Read a three-column CSV (``x,re,im`` style) into float/complex arrays."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != list(columns):
        raise ValueError(f"{path}: expected header {','.join(columns)}")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != 3:
        raise ValueError(f"{path}: need at least two rows of three values")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite table entries")
    x = data[:, 0]
    if np.any(np.diff(x) <= 0):
        raise ValueError(f"{path}: first column must be strictly increasing")
    return x, data[:, 1] + 1j * data[:, 2]


def make_energy_state(spec: StateSpec, grid: EnergyGrid,
                      params: PhysicsParams = PhysicsParams()) -> EnergyState:
    """Discretize and normalize a built-in or tabulated energy profile.

    The returned state records the applied normalization factor and, in
    ``notes["tail_mass"]``, the fraction of the continuum profile's mass
    lying beyond ``eps_max``.
    """
    eps = grid.points
    if isinstance(spec, Indicator):
        if not spec.b > spec.a:
            raise ValueError("indicator needs b > a")
        if spec.a < 0 or spec.b > grid.eps_max:
            raise ValueError("indicator support must lie in [0, eps_max]")
        amps = ((eps >= spec.a) & (eps < spec.b)).astype(complex)
        full = spec.b - spec.a
        tail = 0.0
    elif isinstance(spec, Gauss):
        if not spec.sigma > 0:
            raise ValueError("gauss needs sigma > 0")
        amps = np.exp(-((eps - spec.mu) ** 2) / (4 * spec.sigma ** 2)).astype(complex)
        full = spec.sigma * math.sqrt(2 * math.pi)
        z = lambda e: (e - spec.mu) / (spec.sigma * math.sqrt(2))
        half_line = 0.5 * erfc(z(0.0))
        tail = 0.5 * erfc(z(grid.eps_max)) / half_line if half_line > 0 else 1.0
    elif isinstance(spec, Exponential):
        if not spec.beta > 0:
            raise ValueError("exp needs beta > 0")
        amps = np.exp(-spec.beta * eps).astype(complex)
        full = 1.0 / (2 * spec.beta)
        tail = math.exp(-2 * spec.beta * grid.eps_max)
    elif isinstance(spec, FromFile):
        x, vals = read_table(spec.path, ("eps", "re", "im"))
        if x[0] < 0:
            raise ValueError(f"{spec.path}: energies must be nonnegative")
        amps = (np.interp(eps, x, vals.real, left=0.0, right=0.0)
                + 1j * np.interp(eps, x, vals.imag, left=0.0, right=0.0))
        w = np.abs(vals) ** 2
        full = float(trapezoid(w, x))
        beyond = x >= grid.eps_max
        if beyond.sum() >= 2:
            tail = float(trapezoid(w[beyond], x[beyond])) / full if full > 0 else 0.0
        else:
            tail = 0.0
    else:
        raise TypeError(f"unknown state spec {spec!r}")

    mass = float(np.sum(np.abs(amps) ** 2) * grid.step)
    if not mass > 0 or mass < SUPPORT_FLOOR * full:
        raise ValueError("empty support on grid: support mass below floor")
    c = 1.0 / math.sqrt(mass)
    notes = {"tail_mass": tail, "spec": spec}
    return EnergyState(grid, amps * c, params, c, notes)


# --- operations -------------------------------------------------------------

def inner_product(a: EnergyState, b: EnergyState) -> complex:
    _check_compatible(a, b)
    return complex(np.vdot(a.amps, b.amps) * a.grid.step)


def evolve(state: EnergyState, t: float) -> EnergyState:
    """Apply exp(-iHt/hbar): a pure phase per energy sample."""
    if t == 0:
        return state
    phase = np.exp(-1j * state.grid.points * t / state.params.hbar)
    return EnergyState(state.grid, state.amps * phase, state.params,
                       state.norm_factor, dict(state.notes))


def time_values(state: EnergyState, t0: float, dt: float, m: int,
                method: str = "fast") -> np.ndarray:
    """h(t0 + i*dt), i < m, without wrapping the result in a TimeAmplitude."""
    g, hbar = state.grid, state.params.hbar
    pref = g.step / math.sqrt(2 * math.pi * hbar)
    return pref * fourier_sum(state.amps, g.step / 2, g.step, t0, dt, m,
                              sign=1, hbar=hbar, method=method)


def time_values_at(state: EnergyState, taus) -> np.ndarray:
    g, hbar = state.grid, state.params.hbar
    pref = g.step / math.sqrt(2 * math.pi * hbar)
    return pref * fourier_points(state.amps, g.points, taus, sign=1, hbar=hbar)


def energy_to_time(state: EnergyState, tgrid: TimeGrid,
                   method: str = "fast") -> TimeAmplitude:
    vals = time_values(state, tgrid.tau_min, tgrid.step, tgrid.m, method)
    return TimeAmplitude(tgrid, vals, state.params)


def energy_values(h_values, t0, dt, egrid: EnergyGrid, hbar: float,
                  negative: bool = False, method: str = "fast") -> np.ndarray:
    """(2*pi*hbar)**-0.5 * sum_i exp(-i eps tau_i/hbar) h_i dt at eps = +-eps_j."""
    pref = dt / math.sqrt(2 * math.pi * hbar)
    sign = 1 if negative else -1
    return pref * fourier_sum(h_values, t0, dt, egrid.step / 2, egrid.step,
                              egrid.n, sign=sign, hbar=hbar, method=method)


def time_to_energy(h: TimeAmplitude, egrid: EnergyGrid,
                   method: str = "fast") -> EnergyState:
    """Inverse transform onto the positive-energy grid.

    Whatever the time function carries at negative energies is discarded
    (projection onto positive energies); its mass is evaluated on the
    mirrored grid and stored in ``notes["discarded_negative_mass"]`` (NaN
    when the time step is too coarse to separate the two bands).
    """
    g, hbar = h.grid, h.params.hbar
    pos = energy_values(h.values, g.tau_min, g.step, egrid, hbar, method=method)
    if 2 * math.pi * hbar / g.step < 2 * egrid.eps_max * (1 - 1e-12):
        # negative band aliases onto the positive one at this time step
        discarded = math.nan
    else:
        neg = energy_values(h.values, g.tau_min, g.step, egrid, hbar,
                            negative=True, method=method)
        discarded = float(np.sum(np.abs(neg) ** 2) * egrid.step)
    if discarded > 1e-8:
        log.warning("time_to_energy discarded negative-energy mass %.3g", discarded)
    return EnergyState(egrid, pos, h.params, 1.0,
                       {"discarded_negative_mass": discarded})


def laplace_amplitude(state: EnergyState, label: CoherentLabel) -> complex:
    """eta(s) = (s|psi = sum_j exp(-eps_j * conj(s)) psi_j d_eps."""
    s = label.s(state.params.hbar)
    eps = state.grid.points
    return complex(np.sum(np.exp(-eps * np.conj(s)) * state.amps) * state.grid.step)


def laplace_line(state: EnergyState, k: float, tgrid: TimeGrid) -> np.ndarray:
    """eta(k + i*tau_i/hbar) for every node of ``tgrid`` (chirp-z path)."""
    damped = state.amps * np.exp(-k * state.grid.points)
    tmp = EnergyState(state.grid, damped, state.params)
    return math.sqrt(2 * math.pi * state.params.hbar) * time_values(
        tmp, tgrid.tau_min, tgrid.step, tgrid.m)

