"""Fourier-side fields on the n-torus and the symbol calculus built on them.

A field on the torus of side ``length`` is stored through its Fourier series
coefficients ``f(x) = sum_m values[m] exp(2 pi i m.x / length)``, laid out in
``numpy.fft`` ordering, so ``values = fftn(samples) / M**n``.  The physical
frequency attached to the integer index ``m`` is ``xi = 2 pi m / length``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import InitVar, dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
DIVERGENCE_TOL = 1e-10
MAX_DERIVATIVE_ORDER = 5


class AliasingError(ValueError):
    """A product was requested for fields that are not band-limited enough."""


@dataclass(frozen=True)
class FrequencyLattice:
    """Integer frequency lattice ``-M/2 <= m_i < M/2`` of an n-torus."""

    n: int
    M: int
    length: float = 1.0

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.n}")
        if self.M < 16 or self.M & (self.M - 1):
            raise ValueError(f"M must be a power of two >= 16, got {self.M}")
        if self.length <= 0:
            raise ValueError("torus side must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.n

    @property
    def nyquist(self) -> int:
        return self.M // 2

    @property
    def log2M(self) -> int:
        return self.M.bit_length() - 1

    @property
    def max_level(self) -> int:
        """Finest wavelet level whose atoms fit on the lattice."""
        return self.log2M - 2

    @property
    def data_level(self) -> int:
        """Finest level whose atoms lie inside :attr:`band`."""
        return self.log2M - 3

    @property
    def band(self) -> int:
        """Largest ``|m_i|`` that the wavelet levels up to ``max_level`` capture exactly.

        This is the flat part of the scaling window one level above
        ``max_level``: ``|m_i| < 2**(max_level + 1) / 3 = M / 6``.
        """
        return self.M // 6

    @cached_property
    def axis_modes(self) -> np.ndarray:
        return np.rint(np.fft.fftfreq(self.M) * self.M).astype(np.int64)

    @cached_property
    def modes(self) -> tuple[np.ndarray, ...]:
        """Integer frequency per axis, broadcast to the full lattice."""
        return tuple(np.meshgrid(*([self.axis_modes] * self.n), indexing="ij"))

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        scale = 2 * np.pi / self.length
        return tuple(scale * m for m in self.modes)

    @cached_property
    def xi_sq(self) -> np.ndarray:
        return sum(x * x for x in self.xi)

    @cached_property
    def mirror_index(self) -> tuple[np.ndarray, ...]:
        """Index array sending m to -m (mod M)."""
        idx = (-np.arange(self.M)) % self.M
        return np.ix_(*([idx] * self.n))

    def band_mask(self, K: int) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        for m in self.modes:
            mask &= np.abs(m) <= K
        return mask

    def grid(self) -> tuple[np.ndarray, ...]:
        """Physical sample points, one array per axis."""
        x = np.arange(self.M) * (self.length / self.M)
        return tuple(np.meshgrid(*([x] * self.n), indexing="ij"))

    def refined(self, factor: int = 2) -> "FrequencyLattice":
        return FrequencyLattice(self.n, self.M * factor, self.length)


def _is_hermitian(values: np.ndarray, lattice: FrequencyLattice, tol: float) -> bool:
    mirrored = np.conj(values[lattice.mirror_index])
    scale = max(float(np.max(np.abs(values), initial=0.0)), 1e-300)
    return float(np.max(np.abs(values - mirrored), initial=0.0)) <= tol * scale


@dataclass(frozen=True, eq=False)
class SpectralField:
    lattice: FrequencyLattice
    values: np.ndarray
    real: bool = False

    def __post_init__(self):
        if self.values.shape != self.lattice.shape:
            raise ValueError(f"values shape {self.values.shape} != lattice {self.lattice.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite coefficients")
        if self.real and not _is_hermitian(self.values, self.lattice, HERMITIAN_TOL):
            raise ValueError("field flagged real but coefficients are not Hermitian-symmetric")
        self.values.setflags(write=False)

    @classmethod
    def zeros(cls, lattice: FrequencyLattice, real: bool = True) -> "SpectralField":
        return cls(lattice, np.zeros(lattice.shape, dtype=complex), real)

    @classmethod
    def from_physical(cls, samples: np.ndarray, lattice: FrequencyLattice) -> "SpectralField":
        samples = np.asarray(samples)
        return cls(lattice, np.fft.fftn(samples) / lattice.M**lattice.n,
                   real=not np.iscomplexobj(samples))

    def physical(self) -> np.ndarray:
        out = np.fft.ifftn(self.values) * self.lattice.M**self.lattice.n
        return out.real if self.real else out

    def with_values(self, values: np.ndarray, real: bool | None = None) -> "SpectralField":
        return SpectralField(self.lattice, values, self.real if real is None else real)

    def _combined(self, values: np.ndarray, real: bool) -> "SpectralField":
        # sums of real fields can cancel to roundoff, so re-symmetrize instead of re-checking
        if real:
            values = 0.5 * (values + np.conj(values[self.lattice.mirror_index]))
        return SpectralField(self.lattice, values, real)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same(self.lattice, other.lattice)
        return self._combined(self.values + other.values, self.real and other.real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same(self.lattice, other.lattice)
        return self._combined(self.values - other.values, self.real and other.real)

    def __mul__(self, scalar: complex) -> "SpectralField":
        real = self.real and np.isrealobj(scalar)
        return self.with_values(self.values * scalar, real)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.with_values(-self.values)

    def norm(self) -> float:
        """L2 norm over one period of the torus."""
        vol = self.lattice.length**self.lattice.n
        return math.sqrt(vol * float(np.sum(np.abs(self.values) ** 2)))

    def inner(self, other: "SpectralField") -> complex:
        """<self, other> = integral of self * conj(other)."""
        _check_same(self.lattice, other.lattice)
        vol = self.lattice.length**self.lattice.n
        return complex(vol * np.vdot(other.values, self.values))

    def max_mode(self, rtol: float = 1e-13) -> int:
        """Largest |m_i| carrying a coefficient above ``rtol * max``."""
        mag = np.abs(self.values)
        top = float(mag.max(initial=0.0))
        if top == 0.0:
            return 0
        live = mag > rtol * top
        return int(max(np.abs(m[live]).max() for m in self.lattice.modes))

    def truncated(self, K: int) -> "SpectralField":
        return self.with_values(np.where(self.lattice.band_mask(K), self.values, 0.0))


@dataclass(frozen=True, eq=False)
class VectorField:
    """n components on one lattice.

    ``reference`` (construction only) is the amplitude the divergence check is
    measured against; projections pass their input's size so that a field
    projected to roundoff level is not judged against its own noise.
    """

    components: tuple[SpectralField, ...]
    divergence_free: bool = False
    reference: InitVar[float | None] = None

    def __post_init__(self, reference):
        if not self.components:
            raise ValueError("vector field needs at least one component")
        lat = self.components[0].lattice
        for c in self.components[1:]:
            _check_same(lat, c.lattice)
        if len(self.components) != lat.n:
            raise ValueError(f"expected {lat.n} components, got {len(self.components)}")
        if self.divergence_free:
            err = divergence_defect(self, reference)
            if err > DIVERGENCE_TOL:
                raise ValueError(f"field flagged divergence-free but defect is {err:.3e}")

    @property
    def lattice(self) -> FrequencyLattice:
        return self.components[0].lattice

    @classmethod
    def from_array(cls, lattice: FrequencyLattice, values: np.ndarray, real: bool = True,
                   divergence_free: bool = False) -> "VectorField":
        return cls(tuple(SpectralField(lattice, np.array(v), real) for v in values),
                   divergence_free)

    def stack(self) -> np.ndarray:
        return np.stack([c.values for c in self.components])

    def norm(self) -> float:
        return math.sqrt(sum(c.norm() ** 2 for c in self.components))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, scalar: float) -> "VectorField":
        return VectorField(tuple(c * scalar for c in self.components), self.divergence_free)

    __rmul__ = __mul__


def _check_same(a: FrequencyLattice, b: FrequencyLattice) -> None:
    if a != b:
        raise ValueError(f"lattice mismatch: {a} vs {b}")


def divergence_defect(v: VectorField, reference: float | None = None) -> float:
    """max_m |sum_l i m_l v_l(m)| / max_m |v(m)| in integer frequency units (0 for the zero field).

    ``reference`` replaces the denominator when given.
    """
    lat = v.lattice
    div = sum(1j * m * c.values for m, c in zip(lat.modes, v.components))
    top = max(float(np.max(np.abs(c.values))) for c in v.components)
    top = top if reference is None else max(reference, top)
    if top == 0.0:
        return 0.0
    return float(np.max(np.abs(div))) / top


def heat_semigroup(f: SpectralField, t: float) -> SpectralField:
    """e^{t Delta} f: multiply each coefficient by exp(-t |xi|^2)."""
    if t < 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    if t == 0:
        return f
    return f.with_values(f.values * np.exp(-t * f.lattice.xi_sq))


def leray_symbol(lattice: FrequencyLattice) -> np.ndarray:
    """delta_{ll'} - xi_l xi_l' / |xi|^2, shape (n, n, *lattice.shape); identity at xi = 0."""
    n = lattice.n
    xi = lattice.xi
    xsq = lattice.xi_sq
    safe = np.where(xsq == 0, 1.0, xsq)
    out = np.empty((n, n) + lattice.shape)
    for a in range(n):
        for b in range(n):
            out[a, b] = (a == b) - np.where(xsq == 0, 0.0, xi[a] * xi[b] / safe)
    return out


def leray_project_array(values: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    """Leray projection on a stacked coefficient array of shape (n, *lattice.shape)."""
    xi = lattice.xi
    xsq = lattice.xi_sq
    safe = np.where(xsq == 0, 1.0, xsq)
    proj = sum(x * v for x, v in zip(xi, values)) / safe
    out = np.stack([v - x * proj for x, v in zip(xi, values)])
    zero = (Ellipsis,) + tuple([0] * lattice.n)
    out[zero] = values[zero]
    return out


def leray_project(v: VectorField) -> VectorField:
    lat = v.lattice
    out = leray_project_array(v.stack(), lat)
    real = all(c.real for c in v.components)
    ref = float(np.max(np.abs(v.stack()), initial=0.0))
    return VectorField(tuple(SpectralField(lat, o, real) for o in out), True, ref)


def derivative_symbol(lattice: FrequencyLattice, alpha: Sequence[int]) -> np.ndarray:
    if len(alpha) != lattice.n or any(a < 0 for a in alpha):
        raise ValueError(f"bad multi-index {alpha} for n = {lattice.n}")
    if sum(alpha) > MAX_DERIVATIVE_ORDER:
        raise ValueError(f"derivative order {sum(alpha)} exceeds {MAX_DERIVATIVE_ORDER}")
    sym = np.ones(lattice.shape, dtype=complex)
    for xi, a in zip(lattice.xi, alpha):
        if a:
            sym = sym * (1j * xi) ** a
    return sym


def derivative(f: SpectralField, alpha: Sequence[int]) -> SpectralField:
    """Multiply by (i xi)^alpha.

    The unpaired Nyquist row is left as is; every field this package
    differentiates is band-limited well below it.
    """
    if sum(alpha) == 0:
        if len(alpha) != f.lattice.n:
            raise ValueError(f"bad multi-index {alpha} for n = {f.lattice.n}")
        return f
    return f.with_values(f.values * derivative_symbol(f.lattice, alpha))


def _embed(values: np.ndarray, big: int) -> np.ndarray:
    """Zero-pad an fft-ordered coefficient array to ``big`` points per axis."""
    M = values.shape[0]
    idx = np.arange(M)
    src = np.where(idx < M // 2, idx, idx - M) % big
    out = np.zeros((big,) * values.ndim, dtype=complex)
    out[np.ix_(*([src] * values.ndim))] = values
    return out


def _restrict(values: np.ndarray, M: int) -> np.ndarray:
    big = values.shape[0]
    idx = np.arange(M)
    src = np.where(idx < M // 2, idx, idx - M) % big
    return values[np.ix_(*([src] * values.ndim))]


def check_band(f: SpectralField, limit: int, rtol: float = 1e-12) -> None:
    """Raise AliasingError unless coefficients with |m_i| >= limit are negligible."""
    mag = np.abs(f.values)
    top = float(mag.max(initial=0.0))
    if top == 0.0:
        return
    outside = ~f.lattice.band_mask(limit - 1)
    spill = float(mag[outside].max(initial=0.0))
    if spill > rtol * top:
        raise AliasingError(
            f"field has content {spill / top:.2e} (relative) at |m_i| >= {limit}; "
            f"products need |m_i| < M/4 = {limit}")


def pointwise_product(f: SpectralField, g: SpectralField, pad: int = 2) -> SpectralField:
    """Coefficients of the pointwise product f*g.

    Both factors must be band-limited to |m_i| < M/4.  The product is formed
    on a grid padded ``pad`` times and restricted back, so it is exact up to
    rounding.
    """
    _check_same(f.lattice, g.lattice)
    limit = f.lattice.M // 4
    check_band(f, limit)
    check_band(g, limit)
    return f.with_values(product_values(f.values, g.values, pad), f.real and g.real)


def product_values(a: np.ndarray, b: np.ndarray, pad: int = 2) -> np.ndarray:
    """Unchecked product of two fft-ordered coefficient arrays (see pointwise_product)."""
    M = a.shape[0]
    big = M * pad
    scale = big ** a.ndim
    pa = np.fft.ifftn(_embed(a, big)) * scale
    pb = np.fft.ifftn(_embed(b, big)) * scale
    return _restrict(np.fft.fftn(pa * pb) / scale, M)


def rescale_values(values: np.ndarray, lam: int) -> np.ndarray:
    """Coefficients of x -> f(lam x) on the same lattice (frequency m -> lam m)."""
    M = values.shape[0]
    idx = np.arange(M)
    m = np.where(idx < M // 2, idx, idx - M)
    keep = np.abs(lam * m) < M // 2
    out = np.zeros_like(values)
    dst = (lam * m[keep]) % M
    src = idx[keep]
    mag = np.abs(values)
    top = float(mag.max(initial=0.0))
    lost = mag.copy()
    lost[np.ix_(*([src] * values.ndim))] = 0.0
    if top > 0 and float(lost.max()) > 1e-14 * top:
        raise AliasingError(f"field content at |m| >= M/(2 lam) cannot be rescaled by {lam}")
    out[np.ix_(*([dst] * values.ndim))] = values[np.ix_(*([src] * values.ndim))]
    return out


def write_field_csv(f: SpectralField, path, rtol: float = 0.0) -> None:
    """Dump nonzero coefficients as rows (m_1, ..., m_n, real, imag)."""
    lat = f.lattice
    mag = np.abs(f.values)
    cut = rtol * float(mag.max(initial=0.0))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"m{i + 1}" for i in range(lat.n)] + ["real", "imag"])
        for idx in zip(*np.nonzero(mag > cut)):
            v = f.values[idx]
            w.writerow([int(m[idx]) for m in lat.modes] + [repr(float(v.real)), repr(float(v.imag))])


def read_field_csv(path, lattice: FrequencyLattice, real: bool = True) -> SpectralField:
    values = np.zeros(lattice.shape, dtype=complex)
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        next(rows)
        for row in rows:
            ms = [int(x) % lattice.M for x in row[: lattice.n]]
            values[tuple(ms)] = float(row[lattice.n]) + 1j * float(row[lattice.n + 1])
    return SpectralField(lattice, values, real)


def random_band_limited(lattice: FrequencyLattice, rng: np.random.Generator,
                        K: int | None = None) -> SpectralField:
    """Real zero-mean field with Gaussian Fourier coefficients on |m_i| <= K (default M/6)."""
    K = lattice.band if K is None else K
    vals = rng.standard_normal(lattice.shape) + 1j * rng.standard_normal(lattice.shape)
    vals = np.where(lattice.band_mask(K), vals, 0.0)
    vals = 0.5 * (vals + np.conj(vals[lattice.mirror_index]))
    vals[(0,) * lattice.n] = 0.0
    return SpectralField(lattice, vals, real=True)
