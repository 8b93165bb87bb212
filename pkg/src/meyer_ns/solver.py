"""Global-in-time Picard iteration for the mild Navier-Stokes equation on the torus.

The mild form is u = e^{t Delta} a - B(u, u) with

    B(u, v)(t) = int_0^t e^{(t-s) Delta} P div(u (x) v)(s) ds.

Component k of P div(u (x) v) is sum_l A_l(u_l v_k) + sum_{l,l'} A_{k,l,l'}(u_l v_l'),
with symbols i xi_l and -i xi_k xi_l xi_l' / |xi|^2.  Every iterate lives on the
whole time mesh at once; B is truncated to the band |m_i| <= M/6 (the levels
the wavelet frame resolves exactly), which keeps products alias-free without
padding.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .duhamel import TimeMesh, duhamel_sweep
from .kernels import operator_symbol
from .norms import NormReport, TrajectorySampler, field_besov_norm, ypm_norm
from .spectral import (FrequencyLattice, SpectralField, VectorField, check_band,
                       divergence_defect, leray_project_array, product_values, rescale_values)
from .wavelets import DEFAULT_WINDOW, WaveletCoefficients, synthesize

PRESETS = ("single-atom", "random", "taylor-green")


class SmallnessWarning(UserWarning):
    """Initial data exceeds the configured smallness threshold."""


@dataclass(frozen=True)
class SolverConfig:
    """Norm indices, time mesh and iteration controls.

    ``shell_hi`` defaults to the finest representable level.  ``tol`` is
    relative to ||e^{t Delta} a||_Y.
    """

    p: float = 4.0
    m: float = 1.0
    shell_lo: int = 0
    shell_hi: int | None = None
    samples_per_shell: int = 8
    extra: int = 2
    max_iter: int = 8
    tol: float = 1e-10
    smallness: float = 0.01
    allow_small_m: bool = False

    def __post_init__(self):
        if not (self.p > 0 and math.isfinite(self.p)):
            raise ValueError(f"p must be finite and positive, got {self.p}")
        if self.m <= 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if self.m < 1 and not self.allow_small_m:
            raise ValueError(f"m = {self.m} < 1 needs allow_small_m=True")
        if self.max_iter < 3:
            raise ValueError("the iteration cap must be at least 3")
        if self.samples_per_shell < 4:
            raise ValueError("at least 4 samples per shell are needed for the shell norms")
        if self.shell_lo < 0 or (self.shell_hi is not None and self.shell_hi < self.shell_lo):
            raise ValueError("invalid shell range")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")

    def top_shell(self, lattice: FrequencyLattice) -> int:
        return lattice.max_level if self.shell_hi is None else self.shell_hi

    def mesh(self, lattice: FrequencyLattice) -> TimeMesh:
        return TimeMesh(self.shell_lo, self.top_shell(lattice), self.samples_per_shell,
                        self.extra, include_zero=True)

    def norm_shells(self, lattice: FrequencyLattice) -> list[int]:
        return list(range(self.shell_lo, min(self.top_shell(lattice), lattice.max_level) + 1))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolverState:
    """Outcome of a Picard run: the trajectory, increments and diagnostics."""

    lattice: FrequencyLattice
    times: np.ndarray
    values: np.ndarray
    iterations: int
    increments: list[float]
    ratios: list[float]
    status: str
    besov: float
    config: SolverConfig
    residual: float | None = None
    divergence: float = 0.0
    report: NormReport | None = None
    y_initial: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def trajectory(self) -> TrajectorySampler:
        return _trajectory(self.lattice, self.times, self.values)

    def field_at(self, i: int) -> VectorField:
        return _vector(self.lattice, self.values[i])

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "converged": self.converged,
            "iterations": self.iterations,
            "increments": self.increments,
            "ratios": self.ratios,
            "besov": self.besov,
            "residual": self.residual,
            "divergence": self.divergence,
            "y_initial": self.y_initial,
            "norms": None if self.report is None else self.report.to_dict(),
            "times": [float(t) for t in self.times],
            "lattice": {"n": self.lattice.n, "M": self.lattice.M},
            "config": self.config.to_dict(),
            "notes": self.notes,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


# ---------------------------------------------------------------- helpers ---

def _vector(lattice: FrequencyLattice, values: np.ndarray, real: bool = True) -> VectorField:
    if real:
        values = 0.5 * (values + np.conj(values[(slice(None),) + lattice.mirror_index]))
    return VectorField(tuple(SpectralField(lattice, v.copy(), real) for v in values))


def _trajectory(lattice: FrequencyLattice, times: np.ndarray, values: np.ndarray) -> TrajectorySampler:
    return TrajectorySampler(times, [_vector(lattice, v) for v in values], DEFAULT_WINDOW)


def _as_array(traj: TrajectorySampler) -> np.ndarray:
    return np.stack([f.stack() for f in traj.fields])


def heat_values(a: VectorField, times: np.ndarray) -> np.ndarray:
    """e^{t Delta} a at every mesh time, shape (T, n, M, ..., M)."""
    lat = a.lattice
    decay = np.exp(-np.asarray(times)[:, None] * lat.xi_sq.reshape(1, -1)).reshape(
        (len(times),) + lat.shape)
    return a.stack()[None] * decay[:, None]


def bilinear_values(U: np.ndarray, V: np.ndarray, lattice: FrequencyLattice,
                    times: np.ndarray, truncate: bool = True) -> np.ndarray:
    """B(u, v) at every node from the A_l and A_{k,l,l'} symbols, shape (T, n, ...)."""
    n = lattice.n
    K = lattice.band

    def integrand(i):
        return np.stack([np.stack([product_values(U[i, l], V[i, k], pad=1) for k in range(n)])
                         for l in range(n)])

    sweep = duhamel_sweep(times, lattice.xi_sq, integrand)
    A1 = [operator_symbol(lattice, (l,)) for l in range(n)]
    mask = lattice.band_mask(K) if truncate else np.ones(lattice.shape, bool)
    out = np.zeros((len(times), n) + lattice.shape, dtype=complex)
    for i, I in enumerate(sweep):
        for k in range(n):
            acc = sum(A1[l] * I[l, k] for l in range(n))
            for l in range(n):
                for l1 in range(n):
                    acc = acc + operator_symbol(lattice, (k, l, l1)) * I[l, l1]
            out[i, k] = np.where(mask, acc, 0.0)
    return out


def bilinear_direct(U: np.ndarray, V: np.ndarray, lattice: FrequencyLattice,
                    times: np.ndarray, truncate: bool = True) -> np.ndarray:
    """Same integral by the other route: Leray projection of the heat-propagated div(u (x) v)."""
    n = lattice.n
    xi = lattice.xi

    def integrand(i):
        return np.stack([sum(1j * xi[l] * product_values(U[i, l], V[i, k], pad=1)
                             for l in range(n)) for k in range(n)])

    sweep = duhamel_sweep(times, lattice.xi_sq, integrand)
    mask = lattice.band_mask(lattice.band) if truncate else np.ones(lattice.shape, bool)
    return np.stack([np.where(mask, leray_project_array(I, lattice), 0.0) for I in sweep])


def full_bilinear(u_traj: TrajectorySampler, v_traj: TrajectorySampler, t: float) -> VectorField:
    """B(u, v)(t) for vector trajectories on a shared mesh starting at 0."""
    if len(u_traj.times) != len(v_traj.times) or not np.array_equal(u_traj.times, v_traj.times):
        raise ValueError("trajectories must share one time mesh")
    i = int(np.argmin(np.abs(u_traj.times - t)))
    if not math.isclose(u_traj.times[i], t, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(f"t = {t} is not a mesh node")
    lat = u_traj.lattice
    times = u_traj.times[: i + 1]
    U = _as_array(u_traj)[: i + 1]
    V = _as_array(v_traj)[: i + 1]
    out = bilinear_values(U, V, lat, times)
    return VectorField(_vector(lat, out[-1]).components, divergence_free=True)


def _y(lattice, times, values, cfg: SolverConfig) -> NormReport:
    return ypm_norm(_trajectory(lattice, times, values), cfg.p, cfg.m, cfg.norm_shells(lattice),
                    allow_subcritical=False)


def _max_divergence(lattice: FrequencyLattice, values: np.ndarray) -> float:
    worst = 0.0
    for v in values:
        worst = max(worst, divergence_defect(_vector(lattice, v)))
    return worst


# ----------------------------------------------------------------- solving ---

def picard_solve(a: VectorField, cfg: SolverConfig = SolverConfig(),
                 initial_guess: np.ndarray | None = None, with_residual: bool = True) -> SolverState:
    """Iterate u <- e^{t Delta} a - B(u, u) on the whole mesh.

    Stops when the Y increment falls below ``cfg.tol`` times ||e^{t Delta} a||_Y
    (converged), after two consecutive ratios >= 1 (non-contraction) or at the
    iteration cap.  ``initial_guess`` (shape (T, n, ...)) replaces u^(0) = e^{t Delta} a.
    """
    lat = a.lattice
    if lat.n >= cfg.p:
        raise ValueError(f"p = {cfg.p} must exceed n = {lat.n}")
    if divergence_defect(a) > 1e-10:
        raise ValueError("initial data is not divergence-free")
    for c in a.components:
        check_band(c, lat.band + 1)
    besov = field_besov_norm(a, cfg.p)
    notes = []
    if besov > cfg.smallness:
        warnings.warn(f"Besov norm {besov:.3g} exceeds the smallness threshold {cfg.smallness:g}",
                      SmallnessWarning, stacklevel=2)
        notes.append("initial data above smallness threshold")
    times = cfg.mesh(lat).times
    U0 = heat_values(a, times)
    y0 = _y(lat, times, U0, cfg).Y
    u = U0.copy() if initial_guess is None else np.asarray(initial_guess, dtype=complex)
    if u.shape != U0.shape:
        raise ValueError(f"initial guess shape {u.shape} != {U0.shape}")
    increments, ratios = [], []
    status = "cap"
    it = 0
    if besov == 0.0 and not np.any(u):
        status = "converged"
    else:
        for it in range(1, cfg.max_iter + 1):
            new = U0 - bilinear_values(u, u, lat, times)
            inc = _y(lat, times, new - u, cfg).Y
            if increments:
                ratios.append(inc / increments[-1] if increments[-1] > 0 else 0.0)
            increments.append(inc)
            u = new
            if inc <= cfg.tol * y0:
                status = "converged" if all(r < 1 for r in ratios) else "cap"
                break
            if len(ratios) >= 2 and ratios[-1] >= 1 and ratios[-2] >= 1:
                status = "non-contraction"
                break
            if not np.all(np.isfinite(u)):
                status = "non-contraction"
                notes.append("iterate overflowed")
                break
    state = SolverState(lat, times, u, it, increments, ratios, status, besov, cfg,
                        notes=notes, y_initial=y0)
    if np.all(np.isfinite(u)):
        state.divergence = _max_divergence(lat, u) if it else divergence_defect(a)
        state.report = _y(lat, times, u, cfg)
        if with_residual:
            state.residual = residual(state.trajectory(), a)
    return state


def residual(u_traj: TrajectorySampler, a: VectorField, times=None,
             include_bilinear: bool = True) -> float:
    """max_t ||u(t) - e^{t Delta} a + B(u,u)(t)|| / max(||u(t)||, ||a||) over mesh times.

    ``times`` restricts the maximum to a subset of mesh nodes.
    """
    lat = u_traj.lattice
    mesh = u_traj.times
    U = _as_array(u_traj)
    heat = heat_values(a, mesh)
    B = bilinear_values(U, U, lat, mesh) if include_bilinear else np.zeros_like(U)
    R = U - heat + B
    idx = range(len(mesh)) if times is None else [int(np.argmin(np.abs(mesh - t))) for t in times]
    norm = lambda x: float(np.sqrt(np.sum(np.abs(x) ** 2)))  # noqa: E731
    na = norm(a.stack())
    worst = 0.0
    for i in idx:
        scale = max(norm(U[i]), na)
        if scale > 0:
            worst = max(worst, norm(R[i]) / scale)
    return worst


# ----------------------------------------------------------------- scaling ---

def rescale_field(a: VectorField, lam: int) -> VectorField:
    """a_lam(x) = lam a(lam x), exact on the lattice (frequency m -> lam m)."""
    comps = tuple(c.with_values(lam * rescale_values(c.values, lam)) for c in a.components)
    return VectorField(comps, a.divergence_free)


@dataclass
class ScalingResult:
    lam: int
    deviation: float
    besov: float
    besov_scaled: float
    besov_defect: float
    iterations: tuple[int, int]

    def to_dict(self) -> dict:
        return asdict(self)


def scaling_check(a: VectorField, lam: int = 2, cfg: SolverConfig = SolverConfig()) -> ScalingResult:
    """Compare the run from lam a(lam x) with lam u(lam^2 t, lam x) on matched meshes.

    Torus norms are per period, so the critical Besov norm of a_lam is
    lam^{n/p} times that of a (lam^n copies of each coefficient);
    ``besov_defect`` measures the departure from that relation.
    """
    if lam < 2 or lam & (lam - 1):
        raise ValueError(f"lambda must be a power of two >= 2, got {lam}")
    lat = a.lattice
    s = int(round(math.log2(lam)))
    a_lam = rescale_field(a, lam)
    b = field_besov_norm(a, cfg.p)
    b_lam = field_besov_norm(a_lam, cfg.p)
    factor = lam ** (lat.n / cfg.p)
    defect = abs(b_lam / factor - b) / b if b > 0 else abs(b_lam)
    if b == 0.0:
        return ScalingResult(lam, 0.0, b, b_lam, defect, (0, 0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SmallnessWarning)
        base = picard_solve(a, cfg, with_residual=False)
        cfg_lam = replace(cfg, shell_lo=cfg.shell_lo + s, shell_hi=cfg.top_shell(lat) + s)
        scaled = picard_solve(a_lam, cfg_lam, with_residual=False)
    if not np.allclose(scaled.times * lam**2, base.times, rtol=1e-12, atol=0.0):
        raise RuntimeError("scaled mesh does not match")
    worst = 0.0
    for i in range(1, len(base.times)):
        pred = np.zeros_like(base.values[i])
        lost = 0.0
        for k in range(lat.n):
            src = base.values[i, k]
            kept, dropped = _dilate(src, lam)
            pred[k] = lam * kept
            lost += lam**2 * dropped
        diff = float(np.sum(np.abs(pred - scaled.values[i]) ** 2)) + lost
        ref = float(np.sum(np.abs(scaled.values[i]) ** 2))
        if ref > 0:
            worst = max(worst, math.sqrt(diff / ref))
    return ScalingResult(lam, worst, b, b_lam, defect, (base.iterations, scaled.iterations))


def _dilate(values: np.ndarray, lam: int) -> tuple[np.ndarray, float]:
    """(coefficients of f(lam x) keeping representable modes, energy of the dropped ones)."""
    M = values.shape[0]
    idx = np.arange(M)
    m = np.where(idx < M // 2, idx, idx - M)
    keep = np.abs(lam * m) < M // 2
    sel = np.ix_(*([idx[keep]] * values.ndim))
    out = np.zeros_like(values)
    out[np.ix_(*([(lam * m[keep]) % M] * values.ndim))] = values[sel]
    dropped = float(np.sum(np.abs(values) ** 2) - np.sum(np.abs(values[sel]) ** 2))
    return out, max(dropped, 0.0)


# ----------------------------------------------------------------- presets ---

def preset_field(name: str, lattice: FrequencyLattice, scale: float, seed: int = 0,
                 p: float = 4.0) -> VectorField:
    """Divergence-free initial data with critical Besov norm ``scale``.

    'single-atom': Leray projection of (Phi, 0, ...) for one detail atom at
    level data_level - 1; 'random': Gaussian wavelet data on levels 1 to
    data_level - 1; 'taylor-green': the cellular flow with wavenumber 2.
    """
    n = lattice.n
    if name == "single-atom":
        j = max(lattice.data_level - 1, 0)
        c = WaveletCoefficients.zeros(n, j, j)
        c.details[j][0][(0,) * n] = 1.0
        phi = synthesize(c, lattice, real=True)
        zero = SpectralField.zeros(lattice)
        raw = np.stack([phi.values] + [zero.values] * (n - 1))
        v = _vector(lattice, leray_project_array(raw, lattice))
    elif name == "random":
        from .heatflow import random_vector_field

        rng = np.random.default_rng(seed)
        v = random_vector_field(lattice, (1, max(lattice.data_level - 1, 1)), rng)
    elif name == "taylor-green":
        x = lattice.grid()
        k0 = 2 * np.pi * 2 / lattice.length
        if n == 2:
            comps = [np.sin(k0 * x[0]) * np.cos(k0 * x[1]), -np.cos(k0 * x[0]) * np.sin(k0 * x[1])]
        elif n == 3:
            comps = [np.sin(k0 * x[0]) * np.cos(k0 * x[1]) * np.cos(k0 * x[2]),
                     -np.cos(k0 * x[0]) * np.sin(k0 * x[1]) * np.cos(k0 * x[2]),
                     np.zeros(lattice.shape)]
        else:
            raise ValueError("taylor-green needs n = 2 or 3")
        v = VectorField(tuple(SpectralField.from_physical(c, lattice) for c in comps))
    else:
        raise ValueError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    b = field_besov_norm(v, p)
    if b == 0:
        raise ValueError("preset has zero Besov norm")
    v = v * (scale / b)
    return VectorField(_vector(lattice, v.stack()).components, divergence_free=True)
