"""Energy co-shifts, tail projectors and the coherent family |s).

Shifts by a whole number of grid steps act by index translation and are
exact.  Other shifts fall back to linear interpolation and are flagged with
``notes["interpolated"] = True``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .representation import (
    CoherentLabel,
    EnergyGrid,
    EnergyState,
    PhysicsParams,
    TimeGrid,
    _check_compatible,
    laplace_line,
)


class InterpolatedShiftWarning(UserWarning):
    pass


def _shift_amount(lam):
    lam = float(lam)
    if not lam >= 0:
        raise ValueError(f"shift amount must be >= 0, got {lam}")
    return lam


def _interp(state, where):
    eps, a = state.grid.points, state.amps
    # constant extension on [0, eps_0); zero above the last sample
    re = np.interp(where, eps, a.real, left=a.real[0], right=0.0)
    im = np.interp(where, eps, a.imag, left=a.imag[0], right=0.0)
    return re + 1j * im


def coshift(state: EnergyState, lam) -> EnergyState:
    """[V_lam psi](eps) = psi(eps + lam).  Result is not renormalized."""
    lam = _shift_amount(lam)
    g, a = state.grid, state.amps
    m = g.shift_index(lam)
    out = np.zeros_like(a)
    if m is not None:
        if m < g.n:
            out[:g.n - m] = a[m:]
        lost = float(np.sum(np.abs(a[:min(m, g.n)]) ** 2) * g.step)
        return state.replace(out, annihilated_mass=lost, interpolated=False)
    warnings.warn(f"coshift by {lam} is not grid-commensurate; interpolating",
                  InterpolatedShiftWarning, stacklevel=2)
    out = _interp(state, g.points + lam)
    lost = float(np.sum(np.abs(a[g.points < lam]) ** 2) * g.step)
    return state.replace(out, annihilated_mass=lost, interpolated=True)


def coshift_adjoint(state: EnergyState, lam) -> EnergyState:
    """[V_lam^dagger psi](eps) = psi(eps - lam) for eps > lam, else 0.

    Samples pushed past eps_max leave the grid; their mass is reported as
    ``notes["dropped_mass"]``.
    """
    lam = _shift_amount(lam)
    g, a = state.grid, state.amps
    m = g.shift_index(lam)
    out = np.zeros_like(a)
    if m is not None:
        if m < g.n:
            out[m:] = a[:g.n - m]
        dropped = float(np.sum(np.abs(a[max(g.n - m, 0):]) ** 2) * g.step)
        return state.replace(out, dropped_mass=dropped, interpolated=False)
    warnings.warn(f"coshift_adjoint by {lam} is not grid-commensurate; interpolating",
                  InterpolatedShiftWarning, stacklevel=2)
    eps = g.points
    out = np.where(eps > lam, _interp(state, eps - lam), 0.0)
    dropped = float(np.sum(np.abs(a[eps + lam >= g.eps_max]) ** 2) * g.step)
    return state.replace(out, dropped_mass=dropped, interpolated=True)


def tail_projector(state: EnergyState, lam) -> EnergyState:
    """[P_lam psi](eps) = psi(eps) for eps > lam, else 0."""
    lam = _shift_amount(lam)
    keep = state.grid.points > lam
    return state.replace(np.where(keep, state.amps, 0.0))


@dataclass(frozen=True, eq=False)
class CoherentVector:
    """Unnormalized amplitude table exp(-eps_j * s) of |s)."""

    label: CoherentLabel
    grid: EnergyGrid
    params: PhysicsParams
    amps: np.ndarray

    @property
    def s(self) -> complex:
        return self.label.s(self.params.hbar)

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2) * self.grid.step)

    def as_state(self, normalize: bool = False) -> EnergyState:
        st = EnergyState(self.grid, self.amps, self.params)
        if normalize:
            if not self.label.k > 0:
                raise ValueError("|s) with Re(s) = 0 is not normalizable")
            # analytic norm 1/sqrt(2k); the grid version is close for k*eps_max >> 1
            st = EnergyState(self.grid, self.amps * math.sqrt(2 * self.label.k),
                             self.params, math.sqrt(2 * self.label.k))
        return st


def coherent_vector(label: CoherentLabel, grid: EnergyGrid,
                    params: PhysicsParams = PhysicsParams()) -> CoherentVector:
    s = label.s(params.hbar)
    return CoherentVector(label, grid, params, np.exp(-grid.points * s))


def coherent_overlap(a: CoherentLabel, b: CoherentLabel, hbar: float = 1.0) -> complex:
    """(s_a|s_b) = 1/(conj(s_a) + s_b)."""
    if not a.k + b.k > 0:
        raise ValueError("overlap of two Re(s) = 0 vectors is not normalizable")
    return 1.0 / (np.conj(a.s(hbar)) + b.s(hbar))


def coherent_overlap_quadrature(a: CoherentLabel, b: CoherentLabel, grid: EnergyGrid,
                                params: PhysicsParams = PhysicsParams()) -> complex:
    va = coherent_vector(a, grid, params)
    vb = coherent_vector(b, grid, params)
    return complex(np.vdot(va.amps, vb.amps) * grid.step)


def eigen_residual(label: CoherentLabel, grid: EnergyGrid, lam,
                   params: PhysicsParams = PhysicsParams()) -> float:
    """||V_lam|s) - exp(-lam s)|s)|| / |||s)|| over the samples V_lam can see.

    The last ``lam/step`` samples of V_lam|s) would read above eps_max; they
    are excluded, following the overlap-window policy for shifts.
    """
    vec = coherent_vector(label, grid, params)
    m = grid.shift_index(lam)
    if m is None:
        raise ValueError("eigenrelation residual needs a grid-commensurate shift")
    shifted = coshift(vec.as_state(), lam).amps
    expected = np.exp(-lam * vec.s) * vec.amps
    win = slice(0, grid.n - m)
    num = np.linalg.norm(shifted[win] - expected[win])
    den = np.linalg.norm(vec.amps[win])
    return float(num / den)


@dataclass
class ResidualReport:
    """Two computed sides of an identity and their agreement."""

    lhs: complex
    rhs: complex
    tol: float
    name: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def abs_err(self) -> float:
        return float(abs(self.lhs - self.rhs))

    @property
    def rel_err(self) -> float:
        scale = abs(self.rhs)
        return self.abs_err / scale if scale > 0 else self.abs_err

    @property
    def passed(self) -> bool:
        return self.abs_err <= self.tol

    def to_dict(self) -> dict:
        lhs, rhs = complex(self.lhs), complex(self.rhs)
        return {"lhs_re": lhs.real, "lhs_im": lhs.imag,
                "rhs_re": rhs.real, "rhs_im": rhs.imag,
                "abs_err": self.abs_err, "rel_err": self.rel_err,
                "pass": self.passed, "tol": self.tol}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def completeness_check(psi1: EnergyState, psi2: EnergyState, k: float,
                       tgrid: TimeGrid, tol: float = 1e-3) -> ResidualReport:
    """Weighted resolution of the identity by the line Re(s) = k.

    lhs = (2 pi hbar)^-1 sum_i conj(eta1) eta2 d_tau along s = k + i tau_i/hbar
    rhs = sum_j exp(-2 k eps_j) conj(psi1_j) psi2_j d_eps
    """
    _check_compatible(psi1, psi2)
    if k < 0:
        raise ValueError("k must be >= 0")
    hbar = psi1.params.hbar
    e1 = laplace_line(psi1, k, tgrid)
    e2 = laplace_line(psi2, k, tgrid)
    lhs = np.vdot(e1, e2) * tgrid.step / (2 * math.pi * hbar)
    w = np.exp(-2 * k * psi1.grid.points)
    rhs = np.sum(w * np.conj(psi1.amps) * psi2.amps) * psi1.grid.step
    return ResidualReport(complex(lhs), complex(rhs), tol, name=f"completeness k={k}",
                          extra={"k": k})
