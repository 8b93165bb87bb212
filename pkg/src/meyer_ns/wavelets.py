"""Periodized tensor Meyer wavelets on the unit torus.

The 1-D windows are

    psi0(xi)  = 1 on |xi| <= 2pi/3, cos(pi/2 nu(3|xi|/(2pi) - 1)) up to 4pi/3, 0 beyond,
    omega(xi) = sqrt(psi0(xi/2)^2 - psi0(xi)^2),
    psi1(xi)  = omega(xi) exp(-i xi/2),

and the atom Phi^eps_{j,k}(x) = 2^{nj/2} Phi^eps(2^j x - k), periodized over
the unit torus, has Fourier-series coefficients

    c(m) = 2^{-nj/2} prod_i psi^{eps_i}(2 pi m_i / 2^j) exp(-2 pi i m.k / 2^j).

Analysis at level j folds the windowed spectrum modulo ``q = 2^j`` and takes
one inverse FFT of size ``q`` per axis; synthesis reverses this.  Both are
exact on the lattice.
"""
from __future__ import annotations

import csv
import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator

import numpy as np

from .spectral import FrequencyLattice, SpectralField

Ramp = Callable[[np.ndarray], np.ndarray]

LEAKAGE_TOL = 1e-8
RAMP_TOL = 1e-12


class LeakageError(ValueError):
    """The field carries energy the requested wavelet levels cannot represent."""


class TruncationWarning(UserWarning):
    """A time-adapted level fell outside the levels the torus lattice supports."""


def quartic_ramp(x: np.ndarray) -> np.ndarray:
    """nu(x) = x^4 (35 - 84x + 70x^2 - 20x^3), clipped to [0, 1]."""
    x = np.clip(x, 0.0, 1.0)
    return x**4 * (35 - 84 * x + 70 * x**2 - 20 * x**3)


def _check_ramp(ramp: Ramp) -> float:
    x = np.linspace(0.0, 1.0, 2001)
    y = np.asarray(ramp(x), dtype=float)
    err = float(np.max(np.abs(y + np.asarray(ramp(1 - x), dtype=float) - 1)))
    if abs(float(ramp(np.array([0.0]))[0])) > RAMP_TOL or abs(float(ramp(np.array([1.0]))[0]) - 1) > RAMP_TOL:
        err = max(err, 1.0)
    if np.any(y < -RAMP_TOL) or np.any(y > 1 + RAMP_TOL):
        err = max(err, 1.0)
    return err


@dataclass(frozen=True)
class MeyerWindow:
    """Evaluator for the 1-D Meyer profiles psi0, omega and psi1."""

    ramp: Ramp = quartic_ramp

    def psi0(self, xi) -> np.ndarray:
        a = np.abs(np.asarray(xi, dtype=float))
        x = 3 * a / (2 * np.pi) - 1
        mid = np.cos(0.5 * np.pi * self.ramp(np.clip(x, 0.0, 1.0)))
        # cos(pi/2) is not exactly zero, so the outer region is set explicitly
        return np.where(a <= 2 * np.pi / 3, 1.0, np.where(a >= 4 * np.pi / 3, 0.0, mid))

    def omega(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        d = self.psi0(xi / 2) ** 2 - self.psi0(xi) ** 2
        return np.sqrt(np.maximum(d, 0.0))

    def psi1(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return self.omega(xi) * np.exp(-0.5j * xi)

    def profile(self, eps: int, xi) -> np.ndarray:
        return self.psi1(xi) if eps else self.psi0(xi).astype(complex)


def build_window(transition_profile: Ramp | None = None) -> MeyerWindow:
    """Validate a transition ramp and wrap it in a :class:`MeyerWindow`.

    Raises
    ------
    ValueError
        If ``nu(x) + nu(1 - x) = 1`` fails beyond 1e-12 on a dense sample, or the
        ramp does not run from 0 to 1.
    """
    ramp = quartic_ramp if transition_profile is None else transition_profile
    err = _check_ramp(ramp)
    if err > RAMP_TOL:
        raise ValueError(f"transition ramp breaks nu(x) + nu(1-x) = 1 (error {err:.2e})")
    return MeyerWindow(ramp)


DEFAULT_WINDOW = MeyerWindow()


def detail_eps(n: int) -> list[tuple[int, ...]]:
    """All eps in {0,1}^n except zero, in lexicographic order."""
    return [e for e in itertools.product((0, 1), repeat=n) if any(e)]


# ---------------------------------------------------------------- windows ---

@lru_cache(maxsize=256)
def _axis_window(window: MeyerWindow, M: int, length: float, j: int, eps: int) -> np.ndarray:
    m = np.rint(np.fft.fftfreq(M) * M)
    out = window.profile(eps, 2 * np.pi * m / 2**j)
    out.setflags(write=False)
    return out


def axis_window(window: MeyerWindow, lattice: FrequencyLattice, j: int, eps: int) -> np.ndarray:
    """psi^eps(2 pi m / 2^j) along one axis (fft order)."""
    return _axis_window(window, lattice.M, lattice.length, j, eps)


def band_window(window: MeyerWindow, lattice: FrequencyLattice, j: int, eps) -> np.ndarray:
    """Tensor window prod_i psi^{eps_i}(2 pi m_i / 2^j) on the full lattice."""
    out = None
    for axis, e in enumerate(eps):
        w = axis_window(window, lattice, j, e)
        shape = [1] * lattice.n
        shape[axis] = lattice.M
        w = w.reshape(shape)
        out = w if out is None else out * w
    return np.broadcast_to(out, lattice.shape)


def check_level(lattice: FrequencyLattice, j: int) -> None:
    if j < 0 or j > lattice.max_level:
        raise ValueError(f"level {j} is not admissible on M = {lattice.M}; "
                         f"admissible levels are 0..{lattice.max_level}")


def captured_fraction(window: MeyerWindow, lattice: FrequencyLattice, j_max: int) -> np.ndarray:
    """Per-frequency fraction of energy carried by levels up to j_max (scaling window at j_max+1)."""
    w = band_window(window, lattice, j_max + 1, (0,) * lattice.n)
    return np.abs(w) ** 2


# ------------------------------------------------------------------ atoms ---

@dataclass(frozen=True, eq=False)
class WaveletAtom:
    eps: tuple[int, ...]
    j: int
    k: tuple[int, ...]
    spectrum: SpectralField


def atom_spectrum(window: MeyerWindow, eps, j: int, k, lattice: FrequencyLattice) -> WaveletAtom:
    """Sampled spectrum of the periodized atom Phi^eps_{j,k}."""
    eps = tuple(int(e) for e in eps)
    k = tuple(int(x) for x in k)
    if len(eps) != lattice.n or len(k) != lattice.n:
        raise ValueError("eps and k must have one entry per dimension")
    check_level(lattice, j)
    q = 2**j
    if any(not 0 <= x < q for x in k):
        raise ValueError(f"translation {k} outside 0..{q - 1}")
    phase = sum(m * x for m, x in zip(lattice.modes, k))
    values = 2.0 ** (-lattice.n * j / 2) * band_window(window, lattice, j, eps) \
        * np.exp(-2j * np.pi * phase / q)
    return WaveletAtom(eps, j, k, SpectralField(lattice, values, real=True))


# ------------------------------------------------------------ coefficients ---

@dataclass(eq=False)
class WaveletCoefficients:
    """Scaling band at ``j_min`` and detail bands ``j_min..j_max``.

    ``scaling`` has shape ``(2^j_min,)*n``; ``details[j]`` has shape
    ``(2^n - 1,) + (2^j,)*n`` with the eps order of :func:`detail_eps`.
    """

    n: int
    j_min: int
    j_max: int
    scaling: np.ndarray
    details: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.j_min < 0 or self.j_max < self.j_min - 1:
            raise ValueError(f"bad level range [{self.j_min}, {self.j_max}]")
        if self.scaling.shape != (2**self.j_min,) * self.n:
            raise ValueError("scaling band has the wrong number of translations")
        for j in range(self.j_min, self.j_max + 1):
            d = self.details.get(j)
            if d is None or d.shape != (2**self.n - 1,) + (2**j,) * self.n:
                raise ValueError(f"detail band {j} missing or mis-shaped")

    @property
    def eps_list(self) -> list[tuple[int, ...]]:
        return detail_eps(self.n)

    @classmethod
    def zeros(cls, n: int, j_min: int, j_max: int) -> "WaveletCoefficients":
        return cls(n, j_min, j_max, np.zeros((2**j_min,) * n, dtype=complex),
                   {j: np.zeros((2**n - 1,) + (2**j,) * n, dtype=complex)
                    for j in range(j_min, j_max + 1)})

    def get(self, eps, j: int, k) -> complex:
        eps = tuple(eps)
        if not any(eps):
            if j != self.j_min:
                raise KeyError(f"scaling band lives at level {self.j_min}, not {j}")
            return complex(self.scaling[tuple(k)])
        return complex(self.details[j][(self.eps_list.index(eps),) + tuple(k)])

    def set(self, eps, j: int, k, value: complex) -> None:
        eps = tuple(eps)
        if not any(eps):
            if j != self.j_min:
                raise KeyError(f"scaling band lives at level {self.j_min}, not {j}")
            self.scaling[tuple(k)] = value
        else:
            self.details[j][(self.eps_list.index(eps),) + tuple(k)] = value

    def items(self) -> Iterator[tuple[tuple[int, ...], int, tuple[int, ...], complex]]:
        zero = (0,) * self.n
        for k in np.ndindex(self.scaling.shape):
            yield zero, self.j_min, k, complex(self.scaling[k])
        for j in range(self.j_min, self.j_max + 1):
            for e, eps in enumerate(self.eps_list):
                band = self.details[j][e]
                for k in np.ndindex(band.shape):
                    yield eps, j, k, complex(band[k])

    def energy(self) -> float:
        return float(np.sum(np.abs(self.scaling) ** 2)
                     + sum(np.sum(np.abs(d) ** 2) for d in self.details.values()))

    def max_abs(self) -> float:
        vals = [float(np.max(np.abs(self.scaling)))]
        vals += [float(np.max(np.abs(d))) for d in self.details.values()]
        return max(vals)

    def _combine(self, other: "WaveletCoefficients", op) -> "WaveletCoefficients":
        if (self.n, self.j_min, self.j_max) != (other.n, other.j_min, other.j_max):
            raise ValueError("coefficient sets cover different levels")
        return WaveletCoefficients(self.n, self.j_min, self.j_max, op(self.scaling, other.scaling),
                                   {j: op(d, other.details[j]) for j, d in self.details.items()})

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scalar):
        return WaveletCoefficients(self.n, self.j_min, self.j_max, self.scaling * scalar,
                                   {j: d * scalar for j, d in self.details.items()})

    __rmul__ = __mul__

    def to_csv(self, path, rtol: float = 0.0) -> None:
        cut = rtol * self.max_abs()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"eps{i + 1}" for i in range(self.n)] + ["j"]
                       + [f"k{i + 1}" for i in range(self.n)] + ["real", "imag"])
            for eps, j, k, v in self.items():
                if abs(v) > cut or (cut == 0 and v != 0):
                    w.writerow(list(eps) + [j] + list(k) + [repr(v.real), repr(v.imag)])


# --------------------------------------------------------- fold transform ---

def fold(values: np.ndarray, q: int) -> np.ndarray:
    """Sum an fft-ordered lattice array over frequencies congruent mod q."""
    M = values.shape[0]
    n = values.ndim
    out = values
    for axis in range(n):
        shape = out.shape[:axis] + (M // q, q) + out.shape[axis + 1:]
        out = out.reshape(shape).sum(axis=axis)
    return out


def tile(values: np.ndarray, M: int) -> np.ndarray:
    """Inverse of fold's index map: periodic extension of a q^n array to M^n."""
    q = values.shape[0]
    return np.tile(values, (M // q,) * values.ndim)


@lru_cache(maxsize=64)
def _support_box(M: int, j: int) -> tuple[np.ndarray, np.ndarray] | None:
    """fft positions with |m| <= (4/3) 2^j and the one-hot map m -> m mod 2^j, or None if the box is full."""
    R = int(np.floor(4 * 2**j / 3))
    if 2 * R + 1 >= M:
        return None
    idx = np.r_[0:R + 1, M - R:M]
    m = np.where(idx < M // 2, idx, idx - M)
    q = 2**j
    onehot = np.zeros((len(idx), q))
    onehot[np.arange(len(idx)), m % q] = 1.0
    return idx, onehot


def analyze_band(values: np.ndarray, window: MeyerWindow, lattice: FrequencyLattice,
                 j: int, eps) -> np.ndarray:
    """Coefficients <f, Phi^eps_{j,k}> for all k (fft-ordered spectrum ``values``).

    Coarse bands are folded from the box |m_i| <= (4/3) 2^j holding the window support.
    """
    q = 2**j
    box = _support_box(lattice.M, j)
    if box is None:
        w = band_window(window, lattice, j, eps)
        F = fold(values * np.conj(w), q)
    else:
        idx, onehot = box
        sel = np.ix_(*([idx] * lattice.n))
        F = values[sel]
        for axis, e in enumerate(eps):
            w = axis_window(window, lattice, j, e)[idx]
            shape = [1] * lattice.n
            shape[axis] = len(idx)
            F = F * np.conj(w).reshape(shape)
        for axis in range(lattice.n):
            F = np.moveaxis(np.tensordot(F, onehot, axes=([axis], [0])), -1, axis)
    return 2.0 ** (lattice.n * j / 2) * np.fft.ifftn(F)


def synthesize_band(coeffs: np.ndarray, window: MeyerWindow, lattice: FrequencyLattice,
                    j: int, eps) -> np.ndarray:
    """Spectrum of sum_k coeffs[k] Phi^eps_{j,k}."""
    w = band_window(window, lattice, j, eps)
    return 2.0 ** (-lattice.n * j / 2) * w * tile(np.fft.fftn(coeffs), lattice.M)


def project_band(values: np.ndarray, window: MeyerWindow, lattice: FrequencyLattice,
                 j: int, eps) -> np.ndarray:
    """Orthogonal projection onto span{Phi^eps_{j,k}} computed without FFTs."""
    q = 2**j
    w = band_window(window, lattice, j, eps)
    return w * tile(fold(values * np.conj(w), q), lattice.M)


def leakage(f: SpectralField, j_max: int, window: MeyerWindow = DEFAULT_WINDOW) -> float:
    """Relative energy of f outside the span of levels <= j_max."""
    total = float(np.sum(np.abs(f.values) ** 2))
    if total == 0.0:
        return 0.0
    kept = float(np.sum(np.abs(f.values) ** 2 * captured_fraction(window, f.lattice, j_max)))
    return max(total - kept, 0.0) / total


def analyze(f: SpectralField, j_min: int, j_max: int | None = None,
            window: MeyerWindow = DEFAULT_WINDOW, check: bool = True) -> WaveletCoefficients:
    """Wavelet coefficients of f: scaling band at j_min, detail bands j_min..j_max.

    Raises
    ------
    LeakageError
        If more than 1e-8 of the energy of f lies outside the span of the
        requested levels (and ``check`` is true).
    """
    lat = f.lattice
    j_max = lat.max_level if j_max is None else j_max
    check_level(lat, j_min)
    check_level(lat, j_max)
    if j_max < j_min:
        raise ValueError(f"j_max {j_max} below j_min {j_min}")
    if check:
        leak = leakage(f, j_max, window)
        if leak > LEAKAGE_TOL:
            raise LeakageError(f"{leak:.2e} of the energy lies above level {j_max} "
                               f"(band |m_i| < {2 ** (j_max + 1) / 3:.2f})")
    zero = (0,) * lat.n
    scaling = analyze_band(f.values, window, lat, j_min, zero)
    details = {j: np.stack([analyze_band(f.values, window, lat, j, e) for e in detail_eps(lat.n)])
               for j in range(j_min, j_max + 1)}
    return WaveletCoefficients(lat.n, j_min, j_max, scaling, details)


def synthesize(c: WaveletCoefficients, lattice: FrequencyLattice,
               window: MeyerWindow = DEFAULT_WINDOW, real: bool | None = None) -> SpectralField:
    """Field sum of c^eps_{j,k} Phi^eps_{j,k}."""
    if c.n != lattice.n:
        raise ValueError("coefficient dimension does not match the lattice")
    check_level(lattice, c.j_min)
    if c.j_max >= c.j_min:
        check_level(lattice, c.j_max)
    values = synthesize_band(c.scaling, window, lattice, c.j_min, (0,) * lattice.n)
    for j in range(c.j_min, c.j_max + 1):
        for e, eps in enumerate(detail_eps(lattice.n)):
            values = values + synthesize_band(c.details[j][e], window, lattice, j, eps)
    if real is None:
        real = bool(np.isrealobj(c.scaling) or all(
            np.max(np.abs(d.imag), initial=0.0) <= 1e-13 * max(c.max_abs(), 1e-300)
            for d in [c.scaling, *c.details.values()]))
    if real:
        # enforce exact Hermitian symmetry lost to roundoff
        values = 0.5 * (values + np.conj(values[lattice.mirror_index]))
    return SpectralField(lattice, values, real)


# ------------------------------------------------------- parameter frames ---

def time_level(t: float) -> int:
    """Smallest integer j with 4^j t >= 1 (unclamped)."""
    if not t > 0 or not math.isfinite(t):
        raise ValueError(f"time must be positive and finite, got {t}")
    j = math.ceil(-math.log2(t) / 2)
    while 4.0**j * t < 1:
        j += 1
    while 4.0 ** (j - 1) * t >= 1:
        j -= 1
    return j


@dataclass(frozen=True)
class ParameterIndexSet:
    """Index family Lambda_t: scaling band at j_t (+ offset) and details j >= that level."""

    t: float
    j_t: int
    j_max: int
    raw_j_t: int
    clamped: bool
    scaling_offset: int = 0

    @property
    def scaling_level(self) -> int:
        return min(max(self.j_t + self.scaling_offset, 0), self.j_max)

    @property
    def detail_levels(self) -> range:
        return range(self.scaling_level, self.j_max + 1)

    def contains(self, eps, j: int) -> bool:
        if not any(eps):
            return j == self.scaling_level
        return self.scaling_level <= j <= self.j_max


def parameter_index(t: float, j_max: int, scaling_offset: int = 0) -> ParameterIndexSet:
    """Time-adapted index set; j_t outside [0, j_max] is clamped with a warning."""
    raw = time_level(t)
    j = min(max(raw, 0), j_max)
    if j != raw:
        warnings.warn(f"time level {raw} for t = {t:g} clamped to {j} (torus levels 0..{j_max})",
                      TruncationWarning, stacklevel=2)
    return ParameterIndexSet(float(t), j, j_max, raw, j != raw, scaling_offset)


def analyze_parameter(f: SpectralField, t: float, j_max: int | None = None,
                      window: MeyerWindow = DEFAULT_WINDOW, scaling_offset: int = 0,
                      check: bool = True) -> WaveletCoefficients:
    """Coefficients over Lambda_t; the scaling cut sits at j_t + scaling_offset."""
    j_max = f.lattice.max_level if j_max is None else j_max
    idx = parameter_index(t, j_max, scaling_offset)
    return analyze(f, idx.scaling_level, j_max, window, check)
