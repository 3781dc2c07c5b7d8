"""The verification suite behind ``tqm verify``.

Every check reduces to a residual ``value`` and passes when
|value| <= tolerance.  The strict profile divides tolerances by ten, except
for statistical and threshold checks, which keep their calibrated bounds.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import clock as ck
from .config import ExperimentConfig
from .povm import ideal_time_density, lorentzian_tv, ml_estimate, nogo_sweep, total_variation
from .representation import (
    CoherentLabel,
    EnergyGrid,
    Exponential,
    Gauss,
    Indicator,
    TimeGrid,
    energy_to_time,
    make_energy_state,
    time_to_energy,
)
from .sampling import ks_statistic, sample_density
from .shift import coherent_overlap, coherent_overlap_quadrature, completeness_check, eigen_residual

log = logging.getLogger(__name__)

NOGO_LAMBDAS = (1.0, 0.3, 0.1, 0.03, 0.01)
ORACLE_TV = 0.2163
K_LATTICE = (0.0, 0.5, 1.0)
TAU_LATTICE = (-2.0, 0.0, 2.0)


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    exempt: bool = False
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        v = float(self.value)
        return math.isfinite(v) and abs(v) <= self.tolerance

    def to_dict(self) -> dict:
        return {"name": self.name, "value": float(self.value), "tolerance": self.tolerance,
                "pass": self.passed, "detail": self.detail}


class _Suite:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.strict = cfg.tolerance == "strict"
        self.params = cfg.params()
        self.hbar = cfg.hbar
        self.egrid = cfg.energy_grid()
        self.tgrid = cfg.time_grid()
        self.dual = TimeGrid.dual(self.egrid, self.params)
        self.checks: list[Check] = []

    def tol(self, t, exempt=False):
        return t if (exempt or not self.strict) else t / 10

    def add(self, name, value, tol, exempt=False, **detail):
        self.checks.append(Check(name, float(value), self.tol(tol, exempt), exempt, detail))

    def state(self, spec, grid=None):
        return make_energy_state(spec, grid or self.egrid, self.params)

    def oracle_state(self):
        return self.state(Exponential(1.0))

    def builtin_states(self):
        return [self.state(Exponential(1.0)), self.state(Indicator(0.0, 1.0)),
                self.state(Gauss(10.0, 1.0))]

    def builtin_clocks(self):
        p = self.params
        return [ck.ExponentialClock(1.0, p), ck.TruncatedExponentialClock(1.0, 1.0, p),
                ck.TruncatedExponentialClock(0.0, 1.0, p)]


# --- individual groups ----------------------------------------------------------

def _state_checks(s: _Suite):
    psi = s.cfg.state()
    s.add("state_tail_mass", psi.notes["tail_mass"], 1e-8)
    s.add("state_normalization", psi.norm2 - 1.0, 1e-12)


def _pointer_checks(s: _Suite):
    tau = np.linspace(-20, 20, 4001)
    err_phi = err_dens_a = err_dens_n = 0.0
    for lam in (0.5, 1.0, 2.0):
        c = ck.ExponentialClock(lam, s.params)
        a = s.hbar * lam
        lor = a / (math.pi * (tau ** 2 + a ** 2))
        phi = np.sqrt(a / math.pi) / (a + 1j * tau)
        num = c.pointer_numeric_grid(tau[0], tau[1] - tau[0], tau.size)
        err_phi = max(err_phi, np.max(np.abs(num - phi)))
        err_dens_a = max(err_dens_a, np.max(np.abs(np.abs(c.pointer(tau)) ** 2 / lor - 1)))
        err_dens_n = max(err_dens_n, np.max(np.abs(np.abs(num) ** 2 / lor - 1)))
    s.add("pointer_a_closed_form", err_phi, 1e-6)
    s.add("density_a_analytic_rel", err_dens_a, 1e-8)
    s.add("density_a_numeric_rel", err_dens_n, 1e-5)

    err_b = 0.0
    for lam, E in ((1.0, 1.0), (0.1, 4.0)):
        c = ck.TruncatedExponentialClock(lam, E, s.params)
        h = s.hbar
        ref = h * lam * (1 - 2 * math.exp(-lam * E) * np.cos(tau * E / h) + math.exp(-2 * lam * E)) \
            / (math.pi * (1 - math.exp(-2 * lam * E)) * (tau ** 2 + h ** 2 * lam ** 2))
        num = np.abs(c.pointer_numeric_grid(tau[0], tau[1] - tau[0], tau.size)) ** 2
        err_b = max(err_b, np.max(np.abs(num / ref - 1)))
    s.add("density_b_rel", err_b, 1e-5)

    E = 1.0
    c = ck.TruncatedExponentialClock(0.0, E, s.params)
    h = s.hbar
    nz = np.abs(tau) > 1e-12
    fej = np.full_like(tau, E / (2 * math.pi * h))
    fej[nz] = h * (1 - np.cos(tau[nz] * E / h)) / (math.pi * E * tau[nz] ** 2)
    num = np.abs(c.pointer_numeric_grid(tau[0], tau[1] - tau[0], tau.size)) ** 2
    # relative error away from the exact zeros of the kernel
    ok = fej > 1e-6 * fej.max()
    s.add("density_b_flat_rel", np.max(np.abs(num[ok] / fej[ok] - 1)), 1e-5)
    peak = float(np.abs(c.pointer_numeric(np.array([0.0]))[0]) ** 2)
    s.add("density_b_flat_peak_rel", peak / (E / (2 * math.pi * h)) - 1, 5e-3)


def _fwhm_checks(s: _Suite):
    lam = s.cfg.clock_lambda if s.cfg.clock_kind == "a" else 1.0
    c = ck.ExponentialClock(lam, s.params)
    m = ck.sharpness_metrics(c, s.tgrid)
    s.add("fwhm_a", m.fwhm - 2 * s.hbar * lam, 1e-6, peak_ratio_to_claim=m.peak_ratio,
          peak=m.peak_height)


def _coherent_checks(s: _Suite):
    # midpoint error scales as (|s| d_eps)^2: use a finer grid for the lattice
    fine = EnergyGrid(s.egrid.eps_max, s.egrid.n * (16 if s.strict else 8))
    labels = [CoherentLabel(k, t) for k in K_LATTICE for t in TAU_LATTICE]
    worst = 0.0
    for a in labels:
        for b in labels:
            if a.k + b.k <= 0:
                continue
            ana = coherent_overlap(a, b, s.hbar)
            num = coherent_overlap_quadrature(a, b, fine, s.params)
            worst = max(worst, abs(num - ana) / abs(ana))
    s.add("coherent_overlap_rel", worst, 1e-6, grid_n=fine.n)
    diag = max(abs(coherent_overlap(a, a, s.hbar) - 1 / (2 * a.k)) for a in labels if a.k > 0)
    s.add("coherent_diagonal", diag, 1e-15)

    step = s.egrid.step
    half = round(0.5 / step) * step
    worst = 0.0
    for lam in (step, 10 * step, half):
        for a in labels:
            worst = max(worst, eigen_residual(a, s.egrid, lam, s.params))
    s.add("eigenrelation", worst, 1e-10, shifts=[step, 10 * step, half])


def _completeness_checks(s: _Suite):
    pairs = [(s.state(Exponential(1.0)), s.state(Indicator(0.0, 1.0))),
             (s.state(Gauss(10.0, 1.0)), s.state(Exponential(0.5)))]
    worst = 0.0
    for k in (0.0, 0.1, 0.5):
        for p1, p2 in pairs:
            worst = max(worst, completeness_check(p1, p2, k, s.dual).abs_err)
    s.add("completeness", worst, 1e-3)


def _transform_checks(s: _Suite):
    psi = s.cfg.state()
    h = energy_to_time(psi, s.dual)
    s.add("parseval", h.norm2 - psi.norm2, 1e-3)
    back = time_to_energy(h, s.egrid)
    s.add("round_trip", np.max(np.abs(back.amps - psi.amps)), 1e-3)
    s.add("round_trip_negative_mass", back.notes["discarded_negative_mass"], 1e-10)
    # the same identity seen through the configured window, tails included
    tail_loss = psi.norm2 - energy_to_time(psi, s.tgrid).norm2
    s.add("window_tail_loss_nonnegative", min(tail_loss, 0.0), 1e-12)


def _instrument_checks(s: _Suite):
    worst = 0.0
    states = s.builtin_states() + [s.cfg.state()]
    clocks = s.builtin_clocks() + [s.cfg.clock()]
    for c in clocks:
        for psi in states:
            worst = max(worst, abs(ck.outcome_density(psi, c, s.dual).mass - 1))
    s.add("instrument_normalization", worst, 1e-3)


def _convolution_checks(s: _Suite):
    idx = np.arange(0, s.tgrid.m, max(1, s.tgrid.m // 64))
    taus = s.tgrid.points[idx]
    worst = 0.0
    combos = [(s.oracle_state(), ck.ExponentialClock(1.0, s.params)),
              (s.cfg.state(), s.cfg.clock())]
    for psi, c in combos:
        p = ck.outcome_density(psi, c, s.tgrid).values[idx]
        q = ck.convolved_density(psi, c, taus)
        ok = p > 1e-6
        if ok.any():
            worst = max(worst, np.max(np.abs(q[ok] / p[ok] - 1)))
    s.add("convolution_identity", worst, 1e-4, nodes=int(idx.size))


def _covariance_checks(s: _Suite):
    psi, c = s.cfg.state(), s.cfg.clock()
    dens = post = theta = 0.0
    for q in (0, 205):
        rep = ck.covariance_check(psi, c, q * s.tgrid.step, s.tgrid)
        dens = max(dens, rep.extra["density_residual"])
        post = max(post, rep.abs_err)
        theta = max(theta, abs(rep.extra["theta"]), key=abs)
    s.add("covariance_density", dens, 1e-8)
    s.add("covariance_posterior", post, 1e-8)
    s.add("covariance_theta", theta, 1e-8)


def _eigen_checks(s: _Suite):
    lam = s.cfg.clock_lambda if s.cfg.clock_kind == "a" else 1.0
    c = ck.ExponentialClock(lam, s.params)
    colin = resid = closed = 0.0
    for k in K_LATTICE:
        for t in TAU_LATTICE:
            lab = CoherentLabel(k, 0.0)
            rep = ck.companion_check(c, lab, t, s.egrid)
            colin = max(colin, rep.colinearity_defect)
            resid = max(resid, rep.residual)
            a = ck.left_eigen_envelope(c, lab, t, "closed")
            b = ck.left_eigen_envelope(c, lab, t, "quadrature")
            closed = max(closed, abs(a - b))
    s.add("left_eigen_colinearity", colin, 1e-6)
    s.add("left_eigen_companion", resid, 1e-6)
    s.add("left_eigen_closed_form", closed, 1e-6)


def _oracle_checks(s: _Suite):
    psi = s.oracle_state()
    c = ck.ExponentialClock(1.0, s.params)
    real = ck.outcome_density(psi, c, s.tgrid)
    ideal = ideal_time_density(psi, s.tgrid)
    p0 = float(ck.outcome_density_at(psi, c, [0.0])[0])
    s.add("oracle_p0", p0 - 1 / (2 * math.pi * s.hbar), 1e-4)
    tv = total_variation(real, ideal)
    s.add("oracle_tv", tv - ORACLE_TV, 0.002, exempt=True, tv=tv,
          closed_form=lorentzian_tv(1.0, 2.0))

    out = ck.posterior_state(psi, c, 0.0)
    s.add("posterior_norm", out.posterior.norm2 - 1, 1e-12)
    s.add("posterior_likelihood", out.likelihood - 1 / (2 * math.pi * s.hbar), 1e-4)
    s.add("posterior_negative_energy_mass", out.posterior.notes["discarded_negative_mass"], 1e-10)


def _regime_checks(s: _Suite):
    p = s.params
    g = s.state(Gauss(10.0, 1.0))
    wide = ck.ExponentialClock(100.0 / s.hbar, p)
    fid = abs(ck.posterior_state(g, wide, 0.0).posterior.amps @ np.conj(g.amps)) * s.egrid.step
    s.add("deep_unsharp_infidelity", 1 - fid, 0.01, exempt=True, fidelity=fid)

    psi = s.oracle_state()
    lam = 0.01
    tau = 0.5
    post = ck.posterior_state(psi, ck.ExponentialClock(lam, p), tau).posterior
    local = TimeGrid(tau - 2.0, tau + 2.0, 4096)
    est = ml_estimate(ideal_time_density(post, local))
    s.add("near_sharp_localization", est - tau, 3 * s.hbar * lam, exempt=True, estimate=est)


def _nogo_checks(s: _Suite):
    table = nogo_sweep(s.oracle_state(), NOGO_LAMBDAS, s.tgrid)
    d = table.distances
    s.add("nogo_positive", sum(1 for x in d if not x > 0), 0, exempt=True, distances=d)
    s.add("nogo_decreasing", sum(1 for a, b in zip(d, d[1:]) if not a > b), 0, exempt=True)
    s.add("nogo_final", d[-1], 0.02, exempt=True)


def _sampling_checks(s: _Suite):
    n = 100_000
    psi = s.oracle_state()
    dens = ck.outcome_density(psi, ck.ExponentialClock(1.0, s.params), s.tgrid)
    a = sample_density(dens, n, s.cfg.seed, threads=1)
    b = sample_density(dens, n, s.cfg.seed, threads=4)
    c = sample_density(dens, n, s.cfg.seed, threads=1)
    s.add("sampler_ks", ks_statistic(a, dens), 1.95 / math.sqrt(n), exempt=True)
    s.add("sampler_parallel_mismatch", int(np.sum(a != b)), 0, exempt=True)
    s.add("sampler_repeat_mismatch", int(np.sum(a != c)), 0, exempt=True)
    s.add("sampler_median", float(np.median(a)), 0.03 * s.hbar, exempt=True)


def _sweep_checks(s: _Suite):
    h = s.hbar
    worst = 0.0
    for lam in (1.0, 0.5, 0.1, 0.01):
        m = ck.sharpness_metrics(ck.ExponentialClock(lam, s.params), s.tgrid)
        worst = max(worst, abs(m.fwhm / (2 * h * lam) - 1))
    s.add("sweep_fwhm_lambda", worst, 1e-2)

    worst = 0.0
    base = None
    for hb in (1.0, 0.5, 0.1):
        from .representation import PhysicsParams
        m = ck.sharpness_metrics(ck.ExponentialClock(1.0, PhysicsParams(hb)), s.tgrid)
        base = base or m.fwhm / hb
        worst = max(worst, abs(m.fwhm / (hb * base) - 1), abs(m.fwhm / (2 * hb) - 1))
    s.add("sweep_fwhm_hbar", worst, 1e-2)

    worst = 0.0
    widths = []
    for E in (1.0, 4.0, 16.0, 64.0):
        m = ck.sharpness_metrics(ck.TruncatedExponentialClock(0.0, E, s.params), s.tgrid)
        worst = max(worst, abs(m.peak_height / (E / (2 * math.pi * h)) - 1))
        widths.append(m.fwhm)
    s.add("sweep_peak_E", worst, 1e-2)
    s.add("sweep_fwhm_E_decreasing", sum(1 for a, b in zip(widths, widths[1:]) if not a > b),
          0, exempt=True, fwhm=widths)


GROUPS = [
    ("state", _state_checks),
    ("pointer", _pointer_checks),
    ("fwhm", _fwhm_checks),
    ("coherent", _coherent_checks),
    ("completeness", _completeness_checks),
    ("transform", _transform_checks),
    ("instrument", _instrument_checks),
    ("convolution", _convolution_checks),
    ("covariance", _covariance_checks),
    ("left_eigen", _eigen_checks),
    ("oracle", _oracle_checks),
    ("regimes", _regime_checks),
    ("nogo", _nogo_checks),
    ("sampling", _sampling_checks),
    ("sweeps", _sweep_checks),
]


def run_checks(cfg: ExperimentConfig, only=None) -> list[Check]:
    """Run the suite; a group that raises records one failing check."""
    suite = _Suite(cfg)
    for name, fn in GROUPS:
        if only is not None and name not in only:
            continue
        t0 = time.perf_counter()
        try:
            fn(suite)
        except Exception as exc:  # a crash is a failed check, not a crashed run
            log.exception("check group %s raised", name)
            suite.checks.append(Check(f"{name}_error", math.nan, 0.0, False,
                                      {"error": f"{type(exc).__name__}: {exc}"}))
        log.info("check group %s took %.2fs", name, time.perf_counter() - t0)
    return suite.checks
