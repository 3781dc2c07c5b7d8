"""Clock-interaction measurement: pointer kernels, G(tau), outcome law, posteriors.

A clock is described by its pointer-momentum wavefunction f(x), supported on
x <= 0.  Its position-space pointer is

    phi(tau) = (2 pi hbar)^-1/2 * int conj(f(x)) exp(i tau x / hbar) dx,

and the reduction operator acts in the time representation as
[G(tau) h](tau') = phi(tau - tau') h(tau'), followed by projection onto
positive energies.

Two independent routes to the outcome density are provided.  The main route
works on the energy side: with R(d) the autocorrelation of psi and Q(d) that
of f,

    p(tau) = (2 pi hbar)^-1 * sum_k R_k Q_k exp(i tau k d_eps / hbar) d_eps,

which is exact for the sampled state.  The check route convolves the pointer
density with |h|^2 in the time domain over one period of h.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.signal import fftconvolve
from scipy.special import polygamma

from ._fourier import fourier_points, fourier_sum
from .povm import DensityProfile, ideal_time_density
from .representation import (
    CoherentLabel,
    EnergyGrid,
    EnergyState,
    PhysicsParams,
    TimeGrid,
    energy_values,
    evolve,
    inner_product,
    read_table,
    time_values,
)
from .shift import ResidualReport, coherent_vector

log = logging.getLogger(__name__)

POSTERIOR_FLOOR = 1e-12
# f-tail mass e^{-2 lambda x_max} of the exponential clock is e^{-50}
EXP_CUTOFF = 25.0
# target step of the momentum quadrature grid and its size limits
_DX_TARGET = 1e-4
_NX_MIN, _NX_MAX = 1 << 12, 1 << 20


class ImpossibleOutcomeError(ValueError):
    """Raised when the outcome likelihood is below the posterior floor."""


def _one_minus_exp_over(z, L):
    """(1 - exp(-z L)) / z, continuous through z = 0 (where it equals L)."""
    z = np.asarray(z, dtype=complex)
    zl = z * L
    small = np.abs(zl) < 1e-8
    safe = np.where(small, 1.0, z)
    out = -np.expm1(-zl) / safe
    # two-term series for tiny |zL|
    return np.where(small, L * (1 - zl / 2), out)


def _momentum_nodes(x_max):
    nx = 2 ** math.ceil(math.log2(max(x_max / _DX_TARGET, 1.0)))
    nx = int(min(max(nx, _NX_MIN), _NX_MAX))
    dx = x_max / nx
    return -x_max + (np.arange(nx) + 0.5) * dx, dx


class _ClockBase:
    """Shared numerics; subclasses supply ``momentum`` and ``x_max``."""

    params: PhysicsParams
    kind = "base"
    analytic = False

    @property
    def hbar(self) -> float:
        return self.params.hbar

    # momentum side ------------------------------------------------------
    def momentum(self, x) -> np.ndarray:
        raise NotImplementedError

    def _nodes(self):
        # cached fine midpoint grid on [-x_max, 0] and the conj(f) samples
        cache = self.__dict__.get("_node_cache")
        if cache is None:
            x, dx = _momentum_nodes(self.x_max)
            cache = (x, dx, np.conj(self.momentum(x)))
            object.__setattr__(self, "_node_cache", cache)
        return cache

    def momentum_norm2(self) -> float:
        x, dx, fc = self._nodes()
        return float(np.sum(np.abs(fc) ** 2) * dx)

    # pointer, numeric ---------------------------------------------------
    def pointer_numeric(self, tau) -> np.ndarray:
        x, dx, fc = self._nodes()
        pref = dx / math.sqrt(2 * math.pi * self.hbar)
        return pref * fourier_points(fc, x, tau, sign=1, hbar=self.hbar)

    def pointer_numeric_grid(self, t0, dt, m) -> np.ndarray:
        x, dx, fc = self._nodes()
        pref = dx / math.sqrt(2 * math.pi * self.hbar)
        return pref * fourier_sum(fc, x[0], dx, t0, dt, m, sign=1, hbar=self.hbar)

    def pointer(self, tau) -> np.ndarray:
        return self.pointer_numeric(tau)

    def pointer_grid(self, t0, dt, m) -> np.ndarray:
        if self.analytic:
            return self.pointer(t0 + dt * np.arange(m))
        return self.pointer_numeric_grid(t0, dt, m)

    def density(self, tau) -> np.ndarray:
        return np.abs(self.pointer(tau)) ** 2

    def pointer_periodic_grid(self, t0, dt, m, period) -> np.ndarray:
        """sum_r phi(t + r*period) (symmetric partial sums) on a uniform grid.

        Its Fourier coefficients are samples of conj(f) at multiples of
        2 pi hbar / period, with half weight on a jump of f.
        """
        step = 2 * math.pi * self.hbar / period
        K = math.ceil(self.x_max / step - 1e-9)
        u = step * np.arange(K + 1)
        w = np.ones(K + 1)
        w[0] = 0.5
        if abs(u[-1] - self.x_max) <= 1e-9 * max(self.x_max, 1.0):
            w[-1] = 0.5
        coef = w * np.conj(self.momentum(-u))
        pref = math.sqrt(2 * math.pi * self.hbar) / period
        return pref * fourier_sum(coef, 0.0, step, t0, dt, m, sign=-1, hbar=self.hbar)

    # autocorrelation Q(d) = int conj(f(x)) f(x - d) dx -------------------
    def autocorrelation_steps(self, step: float, count: int) -> np.ndarray:
        """Q(k*step) for k = 0..count-1 by midpoint quadrature."""
        span = self.x_max
        r = max(1, math.ceil(step / min(step, span / 2 ** 16)))
        delta = step / r
        nu = math.ceil(span / delta)
        u = (np.arange(nu) + 0.5) * delta
        # the last cell straddles the support edge: sample the part inside
        frac = (span - (nu - 1) * delta) / delta
        u[-1] = span - 0.5 * frac * delta
        F = self.momentum(-u)
        F[-1] *= math.sqrt(frac)
        # c[nu - 1 + j] = sum_i conj(F_i) F_{i+j}
        c = fftconvolve(F, np.conj(F[::-1]))[nu - 1:] * delta
        out = np.zeros(count, dtype=complex)
        idx = np.arange(count) * r
        ok = idx < c.size
        out[ok] = c[idx[ok]]
        return out

    def autocorrelation(self, d) -> np.ndarray:
        raise NotImplementedError

    # envelope g_s(tau) ---------------------------------------------------
    def envelope_numeric(self, s: complex, tau: float) -> complex:
        x, dx, fc = self._nodes()
        u = -x
        w = fc * np.exp(-1j * tau * u / self.hbar - u * np.conj(s))
        return complex(np.sum(w) * dx / math.sqrt(2 * math.pi * self.hbar))

    def envelope(self, s: complex, tau: float) -> complex:
        return self.envelope_numeric(s, tau)

    # asymptotics ---------------------------------------------------------
    def edge_values(self):
        """f just inside the support edges x = 0 and x = -x_max."""
        return complex(self.momentum(np.array([0.0]))[0]), \
            complex(self.momentum(np.array([-self.x_max]))[0])

    @property
    def tail_coefficient(self) -> float:
        """C in |phi(tau)|^2 ~ C / tau^2 after averaging oscillations."""
        f0, fx = self.edge_values()
        return self.hbar * (abs(f0) ** 2 + abs(fx) ** 2) / (2 * math.pi)

    def periodized_density(self, v, period: float) -> np.ndarray:
        """sum_r |phi(v + r*period)|^2."""
        v = np.asarray(v, dtype=float)
        if not self.analytic:
            # Fourier series with coefficients Q(k * 2 pi hbar / period)
            step = 2 * math.pi * self.hbar / period
            K = math.ceil(self.x_max / step) + 1
            Q = self.autocorrelation_steps(step, K)
            Q[0] = Q[0].real / 2
            z = np.exp(1j * np.outer(v, np.arange(K) * step) / self.hbar)
            return 2 * (z @ Q).real / period
        K = 200
        out = np.zeros_like(v)
        for r in range(-K, K + 1):
            out += self.density(v + r * period)
        tail = (polygamma(1, K + 1 + v / period) + polygamma(1, K + 1 - v / period)) / period ** 2
        f0, fx = self.edge_values()
        steps = self.x_max * period / (2 * math.pi * self.hbar)
        amp = abs(f0) ** 2 + abs(fx) ** 2
        if abs(steps - round(steps)) < 1e-9:
            # the edge interference term is coherent across copies
            amp = amp - 2 * (f0 * np.conj(fx) * np.exp(1j * v * self.x_max / self.hbar)).real
        return out + self.hbar * amp * tail / (2 * math.pi)


@dataclass(frozen=True, eq=False)
class ExponentialClock(_ClockBase):
    """f(x) = sqrt(2 lam) exp(lam x) on x <= 0: a Lorentzian pointer of scale hbar*lam."""

    lam: float
    params: PhysicsParams = PhysicsParams()
    kind = "a"
    analytic = True

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"exponential clock needs lambda > 0, got {self.lam}")

    @property
    def x_max(self) -> float:
        return EXP_CUTOFF / self.lam

    @property
    def scale(self) -> float:
        return self.hbar * self.lam

    def momentum(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0, math.sqrt(2 * self.lam) * np.exp(np.minimum(x, 0) * self.lam), 0.0) + 0j

    def pointer(self, tau):
        a = self.scale
        return math.sqrt(a / math.pi) / (a + 1j * np.asarray(tau, dtype=float))

    def density(self, tau):
        a = self.scale
        tau = np.asarray(tau, dtype=float)
        return a / (math.pi * (tau ** 2 + a ** 2))

    def pointer_periodic_grid(self, t0, dt, m, period):
        # sum_r 1/(a + i(t + r P)) = (pi / (i P)) cot(pi (t - i a) / P)
        a = self.scale
        t = t0 + dt * np.arange(m)
        z = math.pi * (t - 1j * a) / period
        return math.sqrt(a / math.pi) * (math.pi / (1j * period)) * (np.cos(z) / np.sin(z))

    def autocorrelation(self, d):
        return np.exp(-self.lam * np.abs(np.asarray(d, dtype=float))) + 0j

    def autocorrelation_steps(self, step, count):
        return self.autocorrelation(step * np.arange(count))

    def envelope(self, s, tau):
        hb = self.hbar
        return complex(math.sqrt(self.lam * hb / math.pi) / (hb * (self.lam + np.conj(s)) + 1j * tau))

    def edge_values(self):
        return complex(math.sqrt(2 * self.lam)), 0j

    def periodized_density(self, v, period):
        a = self.scale
        v = np.asarray(v, dtype=float)
        num = math.sinh(2 * math.pi * a / period)
        den = 2 * (math.sinh(math.pi * a / period) ** 2 + np.sin(math.pi * v / period) ** 2)
        return num / den / period


@dataclass(frozen=True, eq=False)
class TruncatedExponentialClock(_ClockBase):
    """f(x) = N exp(lam x) on [-E, 0]; lam = 0 gives the flat profile 1/sqrt(E)."""

    lam: float
    E: float
    params: PhysicsParams = PhysicsParams()
    kind = "b"
    analytic = True

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"truncated clock needs lambda >= 0, got {self.lam}")
        if not (math.isfinite(self.E) and self.E > 0):
            raise ValueError(f"truncated clock needs E > 0, got {self.E}")

    @property
    def x_max(self) -> float:
        return self.E

    @property
    def norm(self) -> float:
        # N^2 = 1 / int_0^E exp(-2 lam u) du
        return 1.0 / math.sqrt(_one_minus_exp_over(2 * self.lam, self.E).real)

    def momentum(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x <= 0) & (x >= -self.E)
        return np.where(inside, self.norm * np.exp(self.lam * np.clip(x, -self.E, 0)), 0.0) + 0j

    def pointer(self, tau):
        tau = np.asarray(tau, dtype=float)
        pref = self.norm / math.sqrt(2 * math.pi * self.hbar)
        return pref * _one_minus_exp_over(self.lam + 1j * tau / self.hbar, self.E)

    def autocorrelation(self, d):
        d = np.abs(np.asarray(d, dtype=float))
        rem = np.clip(self.E - d, 0, None)
        num = _one_minus_exp_over(2 * self.lam, rem).real
        return np.exp(-self.lam * d) * num * self.norm ** 2 + 0j

    def autocorrelation_steps(self, step, count):
        return self.autocorrelation(step * np.arange(count))

    def envelope(self, s, tau):
        z = self.lam + np.conj(s) + 1j * tau / self.hbar
        pref = self.norm / math.sqrt(2 * math.pi * self.hbar)
        return complex(pref * _one_minus_exp_over(z, self.E))

    def edge_values(self):
        n = self.norm
        return complex(n), complex(n * math.exp(-self.lam * self.E))


@dataclass(frozen=True, eq=False)
class TabulatedClock(_ClockBase):
    """f(x) from samples on [x_0, x_last], x_last <= 0, linearly interpolated.

    The interpolant is rescaled to unit norm.
    """

    x: np.ndarray
    values: np.ndarray
    params: PhysicsParams = PhysicsParams()
    kind = "tabulated"
    analytic = False
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if x.ndim != 1 or x.size < 2 or v.shape != x.shape:
            raise ValueError("tabulated clock needs matching 1-d x and value arrays")
        if np.any(np.diff(x) <= 0):
            raise ValueError("tabulated x must be strictly increasing")
        if x[-1] > 0:
            raise ValueError("tabulated clock must be supported on x <= 0")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)
        if not np.all(np.isfinite(v)):
            raise ValueError("tabulated clock values must be finite")
        # exact integral of |f|^2 for the piecewise-linear interpolant
        a, b = v[:-1], v[1:]
        n2 = float(np.sum(np.diff(x) * (abs(a) ** 2 + (a * np.conj(b)).real + abs(b) ** 2)) / 3)
        if not n2 > 0:
            raise ValueError("tabulated clock has zero norm")
        object.__setattr__(self, "_scale", 1.0 / math.sqrt(n2))
        self.notes["input_norm2"] = n2

    @classmethod
    def from_csv(cls, path, params: PhysicsParams = PhysicsParams()):
        x, v = read_table(path, ("x", "re", "im"))
        return cls(x, v, params)

    @property
    def x_max(self) -> float:
        return float(-self.x[0])

    def momentum(self, x):
        x = np.asarray(x, dtype=float)
        re = np.interp(x, self.x, self.values.real, left=0.0, right=0.0)
        im = np.interp(x, self.x, self.values.imag, left=0.0, right=0.0)
        return self._scale * (re + 1j * im)

    def autocorrelation(self, d):
        d = np.atleast_1d(np.asarray(d, dtype=float))
        x, dx, fc = self._nodes()
        return np.array([np.sum(fc * self.momentum(x - di)) * dx for di in d])

    def edge_values(self):
        return complex(self._scale * self.values[-1]), complex(self._scale * self.values[0])


ClockSpec = Union[ExponentialClock, TruncatedExponentialClock, TabulatedClock]


# --- pointer wavefunction ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class PointerWavefunction:
    grid: TimeGrid
    values: np.ndarray
    source: str

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.step)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def pointer_wavefunction(clock: ClockSpec, tgrid: TimeGrid,
                         method: str = "auto") -> PointerWavefunction:
    """phi on the grid nodes; ``method`` is auto, analytic or numeric."""
    if method == "auto":
        method = "analytic" if clock.analytic else "numeric"
    if method == "analytic":
        if not clock.analytic:
            raise ValueError("tabulated clocks have no closed-form pointer")
        vals = clock.pointer(tgrid.points)
    elif method == "numeric":
        vals = clock.pointer_numeric_grid(tgrid.tau_min, tgrid.step, tgrid.m)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PointerWavefunction(tgrid, np.asarray(vals), method)


# --- reduction operator -----------------------------------------------------

def _period(grid: EnergyGrid, hbar: float) -> float:
    return 2 * math.pi * hbar / grid.step


def apply_measurement_operator(state: EnergyState, clock: ClockSpec, tau: float,
                               oversample: float = 1.25) -> EnergyState:
    """Unnormalized G(tau) psi by modulation in the time representation.

    The sampled h repeats (up to sign) with period P = 2 pi hbar / d_eps, so
    the modulation integral over the whole line folds onto one period
    centred at tau, against the periodized pointer.  The step resolves the
    band of h*phi, which makes the rectangle rule exact.  The product is
    transformed back onto the positive grid; the part landing on negative
    energies is measured on the mirrored grid and reported as
    ``notes["discarded_negative_mass"]``.
    """
    g, hbar = state.grid, state.params.hbar
    half = _period(g, hbar) / 2
    band = oversample * (2 * g.eps_max + clock.x_max)
    m = math.ceil(2 * half * band / (2 * math.pi * hbar))
    step = 2 * half / m
    t0 = tau - half + step / 2
    h = time_values(state, t0, step, m)
    # phi(tau - tau') at offsets tau' - tau = -half + (i + 1/2) step
    phi = clock.pointer_periodic_grid(half - step / 2, -step, m, 2 * half)
    prod = h * phi
    pos = energy_values(prod, t0, step, g, hbar)
    neg = energy_values(prod, t0, step, g, hbar, negative=True)
    discarded = float(np.sum(np.abs(neg) ** 2) * g.step)
    if discarded > 1e-10:
        log.warning("positive-energy projection discarded mass %.3g", discarded)
    return EnergyState(g, pos, state.params, 1.0,
                       {"discarded_negative_mass": discarded, "tau": float(tau)})


def _kernel(clock: ClockSpec, grid: EnergyGrid):
    """u_m = m d_eps over the clock support with trapezoid end weights."""
    M = min(grid.n - 1, math.ceil(clock.x_max / grid.step - 1e-9))
    u = grid.step * np.arange(M + 1)
    w = np.ones(M + 1)
    w[0] = 0.5
    if abs(u[-1] - clock.x_max) <= 1e-9 * max(clock.x_max, 1.0):
        w[-1] = 0.5
    return u, w * clock.momentum(-u)


def apply_measurement_operator_energy(state: EnergyState, clock: ClockSpec,
                                      tau: float) -> EnergyState:
    """Reference G(tau) psi as a one-sided convolution on the energy grid.

    [G psi]_l = (2 pi hbar)^-1/2 sum_{j<=l} w conj(f(-(l-j) d)) e^{-i tau (l-j) d / hbar} psi_j d.
    Costs O(n^2); intended for reduced grids.
    """
    g, hbar = state.grid, state.params.hbar
    u, wf = _kernel(clock, g)
    kern = np.conj(wf) * np.exp(-1j * tau * u / hbar)
    out = np.convolve(state.amps, kern)[:g.n]
    out = out * g.step / math.sqrt(2 * math.pi * hbar)
    return EnergyState(g, out, state.params, 1.0, {"tau": float(tau)})


def measurement_adjoint(amps, grid: EnergyGrid, clock: ClockSpec, tau: float,
                        params: PhysicsParams = PhysicsParams()) -> np.ndarray:
    """G(tau)^dagger applied to an amplitude table on ``grid``.

    [G^dagger chi]_j = (2 pi hbar)^-1/2 sum_m w f(-u_m) e^{i tau u_m / hbar} chi_{j+m} d.
    """
    hbar = params.hbar
    chi = np.asarray(amps, dtype=complex)
    u, wf = _kernel(clock, grid)
    a = wf * np.exp(1j * tau * u / hbar)
    padded = np.concatenate((chi, np.zeros(a.size, dtype=complex)))
    out = fftconvolve(padded, a[::-1], mode="valid")[:grid.n]
    return out * grid.step / math.sqrt(2 * math.pi * hbar)


# --- outcome law ------------------------------------------------------------

def _state_autocorrelation(state: EnergyState) -> np.ndarray:
    """R_k = sum_j conj(psi_j) psi_{j+k} d_eps for k = 0..n-1."""
    a, n = state.amps, state.grid.n
    return fftconvolve(a, np.conj(a[::-1]))[n - 1:] * state.grid.step


def _density_terms(state, clock):
    g = state.grid
    R = _state_autocorrelation(state)
    Q = clock.autocorrelation_steps(g.step, g.n)
    return R * Q


def _assemble(S, terms, grid, hbar):
    p = grid.step / (2 * math.pi * hbar) * (2 * S.real - terms[0].real)
    peak = float(np.max(np.abs(p))) if p.size else 0.0
    low = float(p.min()) if p.size else 0.0
    if low < -1e-10 * max(peak, 1.0):
        raise ArithmeticError(f"outcome density went negative ({low:.3g})")
    return np.maximum(p, 0.0)


def outcome_density(state: EnergyState, clock: ClockSpec, tgrid: TimeGrid) -> DensityProfile:
    """p(tau_i) = ||G(tau_i) psi||^2 from the energy autocorrelations."""
    g, hbar = state.grid, state.params.hbar
    terms = _density_terms(state, clock)
    S = fourier_sum(terms, 0.0, g.step, tgrid.tau_min, tgrid.step, tgrid.m,
                    sign=1, hbar=hbar)
    return DensityProfile(tgrid, _assemble(S, terms, g, hbar))


def outcome_density_at(state: EnergyState, clock: ClockSpec, taus) -> np.ndarray:
    """The same law at arbitrary outcome values (direct sums)."""
    g, hbar = state.grid, state.params.hbar
    terms = _density_terms(state, clock)
    S = fourier_points(terms, g.step * np.arange(g.n), taus, sign=1, hbar=hbar)
    return _assemble(S, terms, g, hbar)


def convolved_density(state: EnergyState, clock: ClockSpec, taus) -> np.ndarray:
    """Check route: pointer density convolved with |h|^2 over one period of h.

    Uses the periodized pointer density and a rectangle rule with enough
    nodes to integrate the band-limited periodic integrand exactly.
    """
    g, hbar = state.grid, state.params.hbar
    P = _period(g, hbar)
    need = g.n + math.ceil(clock.x_max / g.step) + 1
    M = 2 ** math.ceil(math.log2(max(need, 2 * g.n)))
    step = P / M
    v = P / 2 - step * np.arange(M)
    Phi = clock.periodized_density(v, P)
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    out = np.empty(taus.size)
    for i, t in enumerate(taus):
        h = time_values(state, t - P / 2, step, M)
        out[i] = step * np.dot(Phi, np.abs(h) ** 2)
    return out


# --- posterior --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    tau: float
    posterior: EnergyState
    likelihood: float

    def to_csv(self, path):
        self.posterior.to_csv(path)


def posterior_state(state: EnergyState, clock: ClockSpec, tau: float,
                    floor: float = POSTERIOR_FLOOR) -> MeasurementOutcome:
    """Normalized G(tau) psi together with the outcome likelihood p(tau)."""
    like = float(outcome_density_at(state, clock, [tau])[0])
    if not like > floor:
        raise ImpossibleOutcomeError(
            f"outcome impossible at grid resolution: p({tau}) = {like:.3g}")
    raw = apply_measurement_operator(state, clock, tau)
    if not raw.norm2 > 0:
        raise ImpossibleOutcomeError(f"G({tau}) annihilated the state on the grid")
    post = raw.normalized()
    notes = dict(raw.notes, reduced_norm2=raw.norm2)
    post = EnergyState(post.grid, post.amps, post.params, post.norm_factor, notes)
    return MeasurementOutcome(float(tau), post, like)


# --- left eigen-envelope ----------------------------------------------------

def left_eigen_envelope(clock: ClockSpec, label: CoherentLabel, tau: float,
                        method: str = "auto") -> complex:
    """g_s(tau) = (2 pi hbar)^-1/2 int_0^inf conj(f(-u)) e^{-i tau u/hbar} e^{-u conj(s)} du."""
    s = label.s(clock.hbar)
    if method == "auto":
        method = "closed" if clock.analytic else "quadrature"
    if method == "closed":
        if not clock.analytic:
            raise ValueError("tabulated clocks have no closed-form envelope")
        return clock.envelope(s, tau)
    if method == "quadrature":
        return clock.envelope_numeric(s, tau)
    raise ValueError(f"unknown method {method!r}")


@dataclass
class CompanionReport:
    residual: float
    colinearity_defect: float
    envelope_grid: complex
    window: int

    def passed(self, tol: float = 1e-6) -> bool:
        return self.residual < tol and self.colinearity_defect < tol


def companion_check(clock: ClockSpec, label: CoherentLabel, tau: float,
                    grid: EnergyGrid) -> CompanionReport:
    """Compare G(tau)^dagger |s) with conj(g_s(tau)) |s) on the grid.

    Only samples whose kernel support stays inside the grid are compared.
    The envelope is the grid quadrature matching the discrete adjoint.
    """
    params = clock.params
    vec = coherent_vector(label, grid, params)
    adj = measurement_adjoint(vec.amps, grid, clock, tau, params)
    u, wf = _kernel(clock, grid)
    s = vec.s
    g_grid = complex(np.sum(np.conj(wf) * np.exp(-1j * tau * u / params.hbar - u * np.conj(s)))
                     * grid.step / math.sqrt(2 * math.pi * params.hbar))
    win = grid.n - (u.size - 1)
    if win <= 0:
        raise ValueError("clock support exceeds the energy grid; no comparison window")
    lhs, base = adj[:win], vec.amps[:win]
    res = np.linalg.norm(lhs - np.conj(g_grid) * base) / np.linalg.norm(base)
    cos = abs(np.vdot(base, lhs)) / (np.linalg.norm(base) * np.linalg.norm(lhs))
    return CompanionReport(float(res), max(0.0, float(1.0 - cos)), g_grid, int(win))


# --- time-shift covariance ---------------------------------------------------

def covariance_check(state: EnergyState, clock: ClockSpec, t: float, tgrid: TimeGrid,
                     tau: float | None = None, tol: float = 1e-8) -> ResidualReport:
    """Density and posterior covariance under evolution by a grid shift t.

    lhs is the overlap <evolve(post(psi, tau - t), t), post(evolve(psi, t), tau)>,
    rhs = 1.  The realized phase theta(t) = -arg(lhs) and the density
    residual are reported in ``extra``; all three must be within ``tol``.
    """
    q = tgrid.shift_index(t)
    if q is None:
        raise ValueError(f"shift {t} is not a whole number of time steps")
    moved = evolve(state, t)
    p0 = outcome_density(state, clock, tgrid).values
    p1 = outcome_density(moved, clock, tgrid).values
    if q >= 0:
        diff = p1[q:] - p0[:tgrid.m - q]
    else:
        diff = p1[:tgrid.m + q] - p0[-q:]
    dens = float(np.max(np.abs(diff))) if diff.size else 0.0
    if tau is None:
        tau = float(t)
    a = posterior_state(moved, clock, tau).posterior
    b = evolve(posterior_state(state, clock, tau - t).posterior, t)
    ov = inner_product(b, a)
    theta = -cmath.phase(ov)
    rep = ResidualReport(ov, 1.0, tol, name=f"covariance t={t}",
                         extra={"density_residual": dens, "theta": theta,
                                "overlap_modulus_defect": abs(1 - abs(ov)), "shift_steps": q})
    rep.extra["pass"] = rep.passed and dens <= tol
    return rep


# --- sharpness ----------------------------------------------------------------

@dataclass
class SharpnessMetrics:
    fwhm: float
    peak_height: float
    peak_tau: float
    window: float
    mass_within: float
    scale: float | None = None
    claimed_peak: float | None = None
    peak_ratio: float | None = None
    sharp_threshold_lambda: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _mass_within(clock, w):
    # composite Simpson on a uniform grid over [-w, w]
    n = 20000
    t0, dt = -w, 2 * w / n
    vals = np.abs(clock.pointer_grid(t0, dt, n + 1)) ** 2
    wts = np.ones(n + 1)
    wts[1:-1:2], wts[2:-1:2] = 4, 2
    return float(np.dot(wts, vals) * dt / 3)


def sharpness_metrics(clock: ClockSpec, tgrid: TimeGrid, window: float = 1.0) -> SharpnessMetrics:
    """FWHM, peak height and central mass of the pointer density |phi|^2."""
    if clock.analytic:
        dens = lambda x: float(clock.density(np.array([x]))[0])
        grid_vals = clock.density(tgrid.points)
    else:
        dens = lambda x: float(np.abs(clock.pointer_numeric(np.array([x]))[0]) ** 2)
        grid_vals = np.abs(clock.pointer_numeric_grid(tgrid.tau_min, tgrid.step, tgrid.m)) ** 2
    t = tgrid.points
    i = int(np.argmax(grid_vals))
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, t.size - 1)]
    res = minimize_scalar(lambda x: -dens(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, abs(hi - lo))})
    peak_tau, peak = float(res.x), -float(res.fun)
    if grid_vals[i] > peak:
        peak_tau, peak = float(t[i]), float(grid_vals[i])
    half = peak / 2

    def crossing(direction):
        j = i
        while 0 <= j + direction < t.size:
            j += direction
            if grid_vals[j] < half:
                a, b = sorted((t[j - direction], t[j]))
                return brentq(lambda x: dens(x) - half, a, b, xtol=1e-14, rtol=1e-15)
        return math.nan

    fwhm = crossing(+1) - crossing(-1)
    out = SharpnessMetrics(fwhm=float(fwhm), peak_height=peak, peak_tau=peak_tau,
                           window=float(window), mass_within=_mass_within(clock, window))
    if isinstance(clock, ExponentialClock):
        out.scale = clock.scale
        out.claimed_peak = 1.0 / clock.scale
        out.peak_ratio = peak / out.claimed_peak
        out.sharp_threshold_lambda = 1.0 / clock.hbar
    elif isinstance(clock, TruncatedExponentialClock) and clock.lam == 0:
        out.claimed_peak = clock.E / (2 * math.pi * clock.hbar)
        out.peak_ratio = peak / out.claimed_peak
    return out


def ideal_and_real(state: EnergyState, clock: ClockSpec, tgrid: TimeGrid):
    """(p_real, p_ideal) on the same grid."""
    return outcome_density(state, clock, tgrid), ideal_time_density(state, tgrid)
