"""Shell-resolving time meshes and exponential-integrator Duhamel quadrature.

The integral I(t) = int_0^t exp(-(t-s)L) w(s) ds, with L = |xi|^2 per Fourier
mode, is advanced node to node by

    I(t_{i+1}) = exp(-hL) I(t_i) + h g2(z) w_i + h (g1(z) - g2(z)) w_{i+1},  z = hL,

which is exact for w piecewise linear in s.  Here
g1(z) = (1 - e^{-z})/z and g2(z) = (1 - e^{-z}(1+z))/z^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

SERIES_CUTOFF = 0.5
SERIES_TERMS = 18


def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(g1, g2) evaluated stably; series below ``SERIES_CUTOFF``."""
    z = np.asarray(z, dtype=float)
    small = z < SERIES_CUTOFF
    zs = z[small]
    g1s = np.zeros_like(zs)
    g2s = np.zeros_like(zs)
    term = np.ones_like(zs)
    fact = 1.0
    for k in range(SERIES_TERMS):
        # term = (-z)^k, fact = (k+1)!; g2 = sum (-z)^k (k+1)/(k+2)!
        fact *= k + 1
        g1s += term / fact
        g2s += term * (k + 1) / (fact * (k + 2))
        term = term * (-zs)
    zl = np.where(small, 1.0, z)
    em = -np.expm1(-zl)
    g1 = em / zl
    g2 = (em - zl * np.exp(-zl)) / zl**2
    g1[small] = g1s
    g2[small] = g2s
    return g1, g2


@dataclass(frozen=True)
class TimeMesh:
    """Node 0 (optional) plus geometric nodes 4^{-j'} 4^{i/S}, i = 0..S-1, per shell.

    ``shells`` is the inclusive range of shells used for norms; ``extra``
    finer shells are added below it to resolve the Duhamel integral near 0.
    """

    shell_lo: int
    shell_hi: int
    samples_per_shell: int = 16
    extra: int = 0
    include_zero: bool = True

    def __post_init__(self):
        if self.shell_hi < self.shell_lo:
            raise ValueError("empty shell range")
        if self.samples_per_shell < 1:
            raise ValueError("need at least one sample per shell")
        if self.extra < 0:
            raise ValueError("extra shells must be nonnegative")

    @cached_property
    def times(self) -> np.ndarray:
        S = self.samples_per_shell
        pts = []
        for js in range(self.shell_hi + self.extra, self.shell_lo - 1, -1):
            pts.extend(4.0 ** (-js) * 4.0 ** (i / S) for i in range(S))
        t = np.array(([0.0] if self.include_zero else []) + pts)
        return t

    @property
    def shells(self) -> list[int]:
        return list(range(self.shell_lo, self.shell_hi + 1))

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def refined(self, factor: int = 2) -> "TimeMesh":
        return TimeMesh(self.shell_lo, self.shell_hi, self.samples_per_shell * factor,
                        self.extra, self.include_zero)

    def coarsened(self) -> "TimeMesh":
        if self.samples_per_shell % 2:
            raise ValueError("cannot halve an odd sample count")
        return TimeMesh(self.shell_lo, self.shell_hi, self.samples_per_shell // 2,
                        self.extra, self.include_zero)

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[i], t, rel_tol=1e-12, abs_tol=0.0):
            raise KeyError(f"time {t} is not a mesh node")
        return i

    def interval_levels(self) -> np.ndarray:
        """Shell (time level) of each interval [t_i, t_{i+1}], from its midpoint."""
        from .wavelets import time_level
        t = self.times
        return np.array([time_level(0.5 * (a + b)) for a, b in zip(t[:-1], t[1:])])


def duhamel_sweep(times: np.ndarray, xi_sq: np.ndarray,
                  integrand: Callable[[int], np.ndarray],
                  interval_integrand: Callable[[int, int], np.ndarray] | None = None) -> list[np.ndarray]:
    """I(t_i) = int_0^{t_i} exp(-(t_i - s)|xi|^2) w(s) ds at every node.

    ``integrand(i)`` returns w at node i (fft-ordered array, any leading
    batch axes broadcasting against ``xi_sq``).  If ``interval_integrand`` is
    given it is called as ``interval_integrand(i, i_end)`` for the two ends
    of interval [t_i, t_{i+1}] instead, so an integrand that depends on the
    interval (e.g. on its time level) is evaluated consistently.  ``times[0]``
    must be 0.
    """
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0:
        raise ValueError("Duhamel mesh must start at s = 0")
    w_prev = integrand(0) if interval_integrand is None else None
    I = None
    out = []
    for i in range(len(times) - 1):
        h = times[i + 1] - times[i]
        z = h * xi_sq
        g1, g2 = phi_functions(z)
        decay = np.exp(-z)
        if interval_integrand is None:
            wa = w_prev
            wb = integrand(i + 1)
        else:
            wa = interval_integrand(i, i)
            wb = interval_integrand(i, i + 1)
        if I is None:
            I = np.zeros(np.broadcast_shapes(np.shape(wa), xi_sq.shape), dtype=complex)
            out.append(I.copy())
        I = decay * I + h * g2 * wa + h * (g1 - g2) * wb
        out.append(I)
        w_prev = wb
    if I is None:
        w0 = integrand(0) if interval_integrand is None else interval_integrand(0, 0)
        out.append(np.zeros(np.broadcast_shapes(np.shape(w0), xi_sq.shape), dtype=complex))
    return out
