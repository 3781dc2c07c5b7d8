"""Uniform-grid Fourier sums shared by every transform in the package.

All transforms here are sums of the form

    out[k] = sum_j a[j] * exp(i * sign * x_j * t_k / hbar),
    x_j = x0 + j*dx,  t_k = t0 + k*dt,

evaluated either directly (reference path) or with the chirp-z transform.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import czt

# rows of the direct-sum matrix built per block, and a cap on its entries
_BLOCK = 512
_MAX_ENTRIES = 1 << 22


def fourier_sum(a, x0, dx, t0, dt, m, *, sign=1, hbar=1.0, method="fast"):
    """Evaluate ``sum_j a_j exp(i*sign*x_j*t_k/hbar)`` on ``m`` uniform nodes.

    ``method="fast"`` uses the chirp-z transform; ``"direct"`` builds the
    kernel explicitly and costs O(len(a) * m).
    """
    a = np.asarray(a, dtype=complex)
    if method == "direct":
        return _direct(a, x0, dx, t0, dt, m, sign, hbar)
    if method != "fast":
        raise ValueError(f"unknown method {method!r}")
    if a.size == 0 or m == 0:
        return np.zeros(m, dtype=complex)
    j = np.arange(a.size)
    b = a * np.exp(1j * sign * (j * dx) * t0 / hbar)
    w = np.exp(1j * sign * dx * dt / hbar)
    out = czt(b, m=m, w=w, a=1.0)
    t = t0 + dt * np.arange(m)
    return out * np.exp(1j * sign * x0 * t / hbar)


def _direct(a, x0, dx, t0, dt, m, sign, hbar):
    x = x0 + dx * np.arange(a.size)
    t = t0 + dt * np.arange(m)
    return _blocked(a, x, t, sign, hbar)


def _blocked(a, x, t, sign, hbar):
    out = np.empty(t.size, dtype=complex)
    rows = max(1, min(_BLOCK, _MAX_ENTRIES // max(x.size, 1)))
    for s in range(0, t.size, rows):
        kern = np.exp(1j * sign * np.outer(t[s:s + rows], x) / hbar)
        out[s:s + rows] = kern @ a
    return out


def fourier_points(a, x, t, *, sign=1, hbar=1.0):
    """Direct sum at arbitrary (non-uniform) nodes ``t`` for samples at ``x``."""
    a = np.asarray(a, dtype=complex)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return _blocked(a, np.asarray(x, dtype=float), t, sign, hbar)
