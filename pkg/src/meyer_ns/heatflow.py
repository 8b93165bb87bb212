"""Heat-flow trajectories in the time-adapted frame.

The coefficient transfer identities express the time-adapted coefficients of
e^{t Delta} a through the static coefficients of a:

    a^0_{j_t,k}(t)   = sum_{eps', j' <= 1 + j_t, k'}  a^{eps'}_{j',k'} <Phi^{eps'}_{j',k'}, e^{t Delta} Phi^0_{j_t,k}>
    a^eps_{j,k}(t)   = sum_{eps', |j - j'| <= 1, k'} a^{eps'}_{j',k'} <Phi^{eps'}_{j',k'}, e^{t Delta} Phi^eps_{j,k}>

Both are exact because the Meyer windows have disjoint spectral supports
outside the stated level ranges.  Translations only enter as phases, so each
pair of bands needs one table of inner products indexed by the offset
k Q/q - k' Q/q' (mod Q), and the sums above become circular convolutions.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .duhamel import TimeMesh
from .norms import (Field, TrajectorySampler, _components, field_besov_norm,
                    ypm_norm)
from .spectral import FrequencyLattice, SpectralField, VectorField, heat_semigroup, leray_project
from .wavelets import (DEFAULT_WINDOW, MeyerWindow, WaveletCoefficients, analyze,
                       analyze_parameter, band_window, detail_eps, fold, parameter_index,
                       synthesize)


# ------------------------------------------------------------ trajectories ---

@dataclass(eq=False)
class HeatTrajectory(TrajectorySampler):
    """Samples of e^{t Delta} a on a mesh; ``initial`` keeps a."""

    initial: Field | None = None

    def recheck(self) -> float:
        """Max relative deviation of cached samples from a fresh heat evolution."""
        worst = 0.0
        for t, f in zip(self.times, self.fields):
            ref = heat(self.initial, float(t))
            for c, r in zip(_components(f), _components(ref)):
                scale = max(float(np.max(np.abs(r.values))), 1e-300)
                worst = max(worst, float(np.max(np.abs(c.values - r.values))) / scale)
        return worst


def heat(a: Field, t: float) -> Field:
    if isinstance(a, VectorField):
        return VectorField(tuple(heat_semigroup(c, t) for c in a.components), a.divergence_free)
    return heat_semigroup(a, t)


def make_heat_trajectory(a: Field, shells: tuple[int, int], samples_per_shell: int = 4,
                         extra: int = 0, include_zero: bool = False,
                         window: MeyerWindow = DEFAULT_WINDOW) -> HeatTrajectory:
    """Sample e^{t Delta} a at ``samples_per_shell`` geometric times in each shell.

    Shell j' is 1 <= t 4^{j'} < 4.  Shells must lie in the representable
    range 0..max_level of the lattice.
    """
    lo, hi = shells
    lat = _components(a)[0].lattice
    if lo < 0 or hi > lat.max_level or hi < lo:
        raise ValueError(f"shells {shells} outside the representable range 0..{lat.max_level}")
    mesh = TimeMesh(lo, hi, samples_per_shell, extra, include_zero)
    return HeatTrajectory(mesh.times, [heat(a, float(t)) for t in mesh.times], window,
                          initial=a)


# ------------------------------------------------------------ random data ---

def random_coefficients(n: int, levels: tuple[int, int], rng: np.random.Generator,
                        j_min: int = 0) -> WaveletCoefficients:
    """Gaussian detail coefficients on ``levels`` (inclusive), zero elsewhere."""
    lo, hi = levels
    c = WaveletCoefficients.zeros(n, j_min, hi)
    for j in range(max(lo, j_min), hi + 1):
        c.details[j] = rng.standard_normal(c.details[j].shape).astype(complex)
    return c


def random_field(lattice: FrequencyLattice, levels: tuple[int, int], rng: np.random.Generator,
                 besov: float | None = None, p: float = 4.0,
                 window: MeyerWindow = DEFAULT_WINDOW) -> SpectralField:
    """Real zero-mean field with Gaussian wavelet coefficients on ``levels``.

    With ``besov`` given, the field is rescaled to that critical Besov norm.
    """
    c = random_coefficients(lattice.n, levels, rng)
    f = synthesize(c, lattice, window, real=True)
    if besov is not None:
        f = f * (besov / field_besov_norm(f, p, window=window))
    return f


def random_vector_field(lattice: FrequencyLattice, levels: tuple[int, int],
                        rng: np.random.Generator, besov: float | None = None, p: float = 4.0,
                        window: MeyerWindow = DEFAULT_WINDOW) -> VectorField:
    """Divergence-free real field: Leray projection of independent random components."""
    comps = tuple(random_field(lattice, levels, rng, window=window) for _ in range(lattice.n))
    v = leray_project(VectorField(comps))
    if besov is not None:
        v = v * (besov / field_besov_norm(v, p, window=window))
    return VectorField(v.components, divergence_free=True)


# ---------------------------------------------------------------- transfer ---

def inner_table(window: MeyerWindow, lattice: FrequencyLattice, t: float,
                target: tuple[tuple[int, ...], int], source: tuple[tuple[int, ...], int]) -> np.ndarray:
    """K[d] = <Phi^{eps'}_{j',k'}, e^{t Delta} Phi^eps_{j,k}> with d = kQ/q - k'Q/q' mod Q.

    ``target`` is (eps, j), ``source`` is (eps', j'); Q = 2^max(j, j').
    """
    (eps, j), (eps2, j2) = target, source
    Q = 2 ** max(j, j2)
    G = band_window(window, lattice, j2, eps2) * np.conj(band_window(window, lattice, j, eps)) \
        * np.exp(-t * lattice.xi_sq)
    return 2.0 ** (-lattice.n * (j + j2) / 2) * Q**lattice.n * np.fft.ifftn(fold(G, Q))


def _upsample(a: np.ndarray, Q: int) -> np.ndarray:
    q = a.shape[0]
    out = np.zeros((Q,) * a.ndim, dtype=a.dtype)
    out[tuple(slice(None, None, Q // q) for _ in range(a.ndim))] = a
    return out


def transfer_band(source_coeffs: np.ndarray, table: np.ndarray, q_target: int) -> np.ndarray:
    """sum_{k'} a'_{k'} K[kQ/q - k'Q/q'] for every target translation k."""
    Q = table.shape[0]
    U = _upsample(source_coeffs, Q)
    conv = np.fft.ifftn(np.fft.fftn(U) * np.fft.fftn(table))
    return conv[tuple(slice(None, None, Q // q_target) for _ in range(table.ndim))]


def transfer_sources(target: tuple[tuple[int, ...], int], j_t: int, j_max: int,
                     n: int) -> list[tuple[tuple[int, ...], int]]:
    """Static bands (eps', j') that feed a target band in the transfer identities."""
    eps, j = target
    zero = (0,) * n
    if not any(eps):
        levels = range(0, min(1 + j_t, j_max) + 1)
    else:
        levels = range(max(j - 1, 0), min(j + 1, j_max) + 1)
    out = [(e, jj) for jj in levels for e in detail_eps(n)]
    if 0 in levels:
        out.insert(0, (zero, 0))
    return out


def _static_band(c: WaveletCoefficients, eps, j: int) -> np.ndarray:
    if not any(eps):
        return c.scaling
    return c.details[j][detail_eps(c.n).index(tuple(eps))]


def transfer_coefficients(a: SpectralField, t: float, j_max: int | None = None,
                          window: MeyerWindow = DEFAULT_WINDOW, static=None) -> WaveletCoefficients:
    """Time-adapted coefficients of e^{t Delta} a assembled from static coefficients of a."""
    lat = a.lattice
    j_max = lat.max_level if j_max is None else j_max
    static = analyze(a, 0, j_max, window) if static is None else static
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        jt = parameter_index(t, j_max).scaling_level
    out = WaveletCoefficients.zeros(lat.n, jt, j_max)
    zero = (0,) * lat.n
    targets = [(zero, jt)] + [(e, j) for j in range(jt, j_max + 1) for e in detail_eps(lat.n)]
    for eps, j in targets:
        acc = np.zeros((2**j,) * lat.n, dtype=complex)
        for src in transfer_sources((eps, j), jt, j_max, lat.n):
            K = inner_table(window, lat, t, (eps, j), src)
            acc += transfer_band(_static_band(static, *src), K, 2**j)
        if any(eps):
            out.details[j][detail_eps(lat.n).index(eps)] = acc
        else:
            out.scaling = acc
    return out


def verify_transfer(a: Field, t: float, j_max: int | None = None,
                    window: MeyerWindow = DEFAULT_WINDOW) -> float:
    """Max |direct - transferred| over all time-adapted coefficients of e^{t Delta} a."""
    worst = 0.0
    for comp in _components(a):
        lat = comp.lattice
        jm = lat.max_level if j_max is None else j_max
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            direct = analyze_parameter(heat_semigroup(comp, t), t, jm, window)
        via = transfer_coefficients(comp, t, jm, window)
        diff = direct - via
        worst = max(worst, diff.max_abs())
    return worst


# --------------------------------------------------------------- embedding ---

@dataclass
class EmbeddingResult:
    ratios: list[float]
    ypm: list[float]
    besov: list[float]
    skipped: int
    p: float
    m: float
    M: int

    @property
    def constant(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def to_dict(self) -> dict:
        return {"constant": self.constant, "ratios": self.ratios, "ypm": self.ypm,
                "besov": self.besov, "skipped": self.skipped, "p": self.p, "m": self.m,
                "M": self.M}


def embedding_experiment(ensemble: Sequence[Field], p: float, m: float,
                         shells: tuple[int, int] | None = None, samples_per_shell: int = 4,
                         window: MeyerWindow = DEFAULT_WINDOW) -> EmbeddingResult:
    """Ratios ||e^{t Delta} f||_Y / ||f||_Besov over an ensemble.

    ``||.||_Y`` is H0 + Hm over ``shells`` (default 0..max_level); the Besov
    norm is the critical one with s = n/p - 1, q = p.
    """
    if not ensemble:
        raise ValueError("embedding experiment needs a nonempty ensemble")
    lat = _components(ensemble[0])[0].lattice
    if p <= lat.n or m <= 0:
        raise ValueError(f"embedding needs p > n and m > 0 (p = {p}, m = {m})")
    shells = (0, lat.max_level) if shells is None else shells
    ratios, ys, bs, skipped = [], [], [], 0
    for f in ensemble:
        b = field_besov_norm(f, p, window=window)
        if b == 0.0:
            skipped += 1
            continue
        traj = make_heat_trajectory(f, shells, samples_per_shell, window=window)
        rep = ypm_norm(traj, p, m, list(range(shells[0], shells[1] + 1)))
        ratios.append(rep.Y / b)
        ys.append(rep.Y)
        bs.append(b)
    return EmbeddingResult(ratios, ys, bs, skipped, p, m, lat.M)


def verify_heat_decay(M: int = 128, count: int = 100, seed: int = 0, n: int = 2):
    """Fits of the detail-band exponential bound and the scaling-band bound for heat-evolved data.

    Returns ``(detail_fit, scaling_fit)``; see :func:`meyer_ns.kernels.fit_decay`.
    """
    from .kernels import build_samples, fit_decay

    detail = fit_decay("transfer-detail", build_samples("transfer-detail", M, count, seed, n))
    scaling = fit_decay("transfer-scaling", build_samples("transfer-scaling", M, count, seed, n))
    return detail, scaling
