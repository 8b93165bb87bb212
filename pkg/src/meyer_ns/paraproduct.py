"""Littlewood-Paley projections, the paraproduct split of u*v and the Duhamel bilinear forms.

With P_j the scaling-band projection and Q_j the sum of detail bands at level
j, the identity P_{j+1} = P_j + Q_j telescopes the product of two fields
captured by levels <= j_max into fourteen terms relative to a cut level j_t:

    sum_{j >= 2 + j_t} ( P_{j-2}u Q_j v + Q_{j-2}u Q_j v + Q_{j-1}u Q_j v + Q_j u Q_j v
                         + Q_j u Q_{j-1}v + Q_j u Q_{j-2}v + Q_j u P_{j-2}v )
    + P_{1+j_t}u Q_{1+j_t}v + Q_{1+j_t}u Q_{1+j_t}v + Q_{1+j_t}u P_{1+j_t}v
    + P_{j_t}u Q_{j_t}v + Q_{j_t}u Q_{j_t}v + Q_{j_t}u P_{j_t}v + P_{j_t}u P_{j_t}v.

The bilinear operators integrate A^{t-s}(u v)(s) over [0, t] with the
exponential-integrator quadrature of :mod:`meyer_ns.duhamel`.  The time
independent symbol of A commutes with the integral, so one heat-weighted
integral serves every operator index.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .duhamel import duhamel_sweep
from .kernels import all_operator_indices, operator_symbol
from .norms import Field, TrajectorySampler, ypm_norm
from .spectral import FrequencyLattice, SpectralField, pointwise_product, product_values
from .wavelets import (DEFAULT_WINDOW, MeyerWindow, atom_spectrum, check_level, detail_eps,
                       parameter_index, project_band, time_level)

STEP_TOL = 0.01
FAMILIES = ("eps", "B1", "B2")

SUM_TERMS = ("P[j-2]u*Q[j]v", "Q[j-2]u*Q[j]v", "Q[j-1]u*Q[j]v", "Q[j]u*Q[j]v",
             "Q[j]u*Q[j-1]v", "Q[j]u*Q[j-2]v", "Q[j]u*P[j-2]v")
NEXT_TERMS = ("P[jt+1]u*Q[jt+1]v", "Q[jt+1]u*Q[jt+1]v", "Q[jt+1]u*P[jt+1]v")
CUT_TERMS = ("P[jt]u*Q[jt]v", "Q[jt]u*Q[jt]v", "Q[jt]u*P[jt]v", "P[jt]u*P[jt]v")
TERM_NAMES = SUM_TERMS + NEXT_TERMS + CUT_TERMS


class QuadratureWarning(UserWarning):
    """Step-halving estimate of the Duhamel quadrature error exceeds tolerance."""


# ------------------------------------------------------------- projections ---

def _project_values(values: np.ndarray, lattice: FrequencyLattice, j: int, kind,
                    window: MeyerWindow, j_max: int) -> np.ndarray:
    """P_j, Q_j or Q^eps_j on raw spectra; levels above j_max act as identity (P) or zero (Q)."""
    if j > j_max:
        return values.copy() if kind == "P" else np.zeros_like(values)
    check_level(lattice, j)
    if kind == "P":
        return project_band(values, window, lattice, j, (0,) * lattice.n)
    if kind == "Q":
        out = np.zeros_like(values)
        for e in detail_eps(lattice.n):
            out = out + project_band(values, window, lattice, j, e)
        return out
    eps = tuple(int(x) for x in kind)
    if len(eps) != lattice.n or not any(eps) or any(x not in (0, 1) for x in eps):
        raise ValueError(f"kind must be 'P', 'Q' or a nonzero eps in {{0,1}}^{lattice.n}, got {kind}")
    return project_band(values, window, lattice, j, eps)


def level_project(f: SpectralField, j: int, kind="P",
                  window: MeyerWindow = DEFAULT_WINDOW) -> SpectralField:
    """P_j f (kind 'P'), Q_j f (kind 'Q') or Q^eps_j f (kind = eps tuple)."""
    check_level(f.lattice, j)
    vals = _project_values(f.values, f.lattice, j, kind, window, f.lattice.max_level)
    return f.with_values(vals, f.real)


# --------------------------------------------------------------- splitting ---

@dataclass
class ParaproductTerms:
    """Fourteen named pieces of u*v at cut level ``j_t``, plus the reference product."""

    j_t: int
    j_max: int
    terms: dict[str, SpectralField]
    product: SpectralField

    def total(self) -> SpectralField:
        out = SpectralField.zeros(self.product.lattice, self.product.real)
        for f in self.terms.values():
            out = out + f
        return out

    def residual(self) -> float:
        """||sum of terms - u v|| / ||u v|| (absolute when the product vanishes)."""
        ref = self.product.norm()
        err = (self.total() - self.product).norm()
        return err / ref if ref > 0 else err

    def energies(self) -> dict[str, float]:
        return {k: f.norm() ** 2 for k, f in self.terms.items()}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["term", "energy"])
            for k, e in self.energies().items():
                w.writerow([k, repr(e)])


def _split_values(u: np.ndarray, v: np.ndarray, lattice: FrequencyLattice, j_t: int,
                  j_max: int, window: MeyerWindow, pad: int) -> dict[str, np.ndarray]:
    P = lambda f, j: _project_values(f, lattice, j, "P", window, j_max)  # noqa: E731
    Q = lambda f, j: (_project_values(f, lattice, j, "Q", window, j_max)  # noqa: E731
                      if j >= 0 else np.zeros_like(f))
    mul = lambda a, b: product_values(a, b, pad)  # noqa: E731
    out = {k: np.zeros_like(u, dtype=complex) for k in TERM_NAMES}
    Qu = {j: Q(u, j) for j in range(j_t, j_max + 1)}
    Qv = {j: Q(v, j) for j in range(j_t, j_max + 1)}
    zero = np.zeros_like(u, dtype=complex)
    for j in range(j_t + 2, j_max + 1):
        Pu2, Pv2 = P(u, j - 2), P(v, j - 2)
        out["P[j-2]u*Q[j]v"] += mul(Pu2, Qv[j])
        out["Q[j-2]u*Q[j]v"] += mul(Qu[j - 2], Qv[j])
        out["Q[j-1]u*Q[j]v"] += mul(Qu[j - 1], Qv[j])
        out["Q[j]u*Q[j]v"] += mul(Qu[j], Qv[j])
        out["Q[j]u*Q[j-1]v"] += mul(Qu[j], Qv[j - 1])
        out["Q[j]u*Q[j-2]v"] += mul(Qu[j], Qv[j - 2])
        out["Q[j]u*P[j-2]v"] += mul(Qu[j], Pv2)
    j1 = j_t + 1
    Pu1, Pv1 = P(u, j1), P(v, j1)
    Qu1, Qv1 = Qu.get(j1, zero), Qv.get(j1, zero)
    out["P[jt+1]u*Q[jt+1]v"] = mul(Pu1, Qv1)
    out["Q[jt+1]u*Q[jt+1]v"] = mul(Qu1, Qv1)
    out["Q[jt+1]u*P[jt+1]v"] = mul(Qu1, Pv1)
    Pu0, Pv0 = P(u, j_t), P(v, j_t)
    out["P[jt]u*Q[jt]v"] = mul(Pu0, Qv[j_t])
    out["Q[jt]u*Q[jt]v"] = mul(Qu[j_t], Qv[j_t])
    out["Q[jt]u*P[jt]v"] = mul(Qu[j_t], Pv0)
    out["P[jt]u*P[jt]v"] = mul(Pu0, Pv0)
    return out


def paraproduct_decompose(u: SpectralField, v: SpectralField, t: float,
                          j_max: int | None = None, window: MeyerWindow = DEFAULT_WINDOW,
                          pad: int = 2) -> ParaproductTerms:
    """Split u*v into the fourteen terms at the time level of ``t``.

    Both factors must be band-limited to |m_i| < M/4 (checked as in
    :func:`pointwise_product`) and captured by levels <= ``j_max`` for the
    terms to add up to the product.
    """
    lat = u.lattice
    j_max = lat.max_level if j_max is None else j_max
    product = pointwise_product(u, v, pad)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        j_t = parameter_index(t, j_max).scaling_level
    vals = _split_values(u.values, v.values, lat, j_t, j_max, window, pad)
    real = u.real and v.real
    terms = {k: SpectralField(lat, x, real) for k, x in vals.items()}
    return ParaproductTerms(j_t, j_max, terms, product)


def family_values(u: np.ndarray, v: np.ndarray, lattice: FrequencyLattice, j_s: int,
                  family: str, eps=None, j_max: int | None = None,
                  window: MeyerWindow = DEFAULT_WINDOW, pad: int = 2) -> np.ndarray:
    """Integrand of one sub-operator at time level ``j_s``.

    'eps': sum_{j >= 2+j_s} P_{j-2}u Q^eps_j v;  'B1': sum_{j >= 2+j_s} Q_j u Q_j v;
    'B2': P_{j_s}u P_{j_s}v (the scaling-scaling product written in atoms).
    """
    j_max = lattice.max_level if j_max is None else j_max
    j_s = min(max(j_s, 0), j_max)
    if family == "B2":
        P = _project_values(u, lattice, j_s, "P", window, j_max)
        Pv = _project_values(v, lattice, j_s, "P", window, j_max)
        return product_values(P, Pv, pad)
    out = np.zeros_like(u, dtype=complex)
    for j in range(j_s + 2, j_max + 1):
        if family == "eps":
            if eps is None:
                raise ValueError("family 'eps' needs a detail index eps")
            a = _project_values(u, lattice, j - 2, "P", window, j_max)
            b = _project_values(v, lattice, j, tuple(eps), window, j_max)
        elif family == "B1":
            a = _project_values(u, lattice, j, "Q", window, j_max)
            b = _project_values(v, lattice, j, "Q", window, j_max)
        else:
            raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")
        out += product_values(a, b, pad)
    return out


# ---------------------------------------------------------------- Duhamel ---

def _scalar(f: Field, component: int | None) -> SpectralField:
    if isinstance(f, SpectralField):
        return f
    if component is None:
        raise ValueError("vector trajectories need a component index")
    return f.components[component]


def _check_mesh(u_traj: TrajectorySampler, v_traj: TrajectorySampler) -> np.ndarray:
    if len(u_traj.times) != len(v_traj.times) or not np.array_equal(u_traj.times, v_traj.times):
        raise ValueError("trajectories must share one time mesh")
    if u_traj.times[0] != 0.0:
        raise ValueError("Duhamel integrals need a sample at s = 0")
    return u_traj.times


def _node_index(times: np.ndarray, t: float) -> int:
    i = int(np.argmin(np.abs(times - t)))
    if not math.isclose(times[i], t, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(f"t = {t} is not a node of the trajectory mesh")
    if i == 0:
        raise ValueError("t must be positive")
    return i


def _subsample(i_end: int, stride: int) -> list[int]:
    """Node indices 0, ..., i_end keeping every ``stride``-th node counted back from i_end."""
    idx = list(range(i_end, 0, -stride))
    return [0] + idx[::-1]


def heat_duhamel(times: np.ndarray, lattice: FrequencyLattice, integrand,
                 interval_integrand=None) -> list[np.ndarray]:
    """int_0^{t_i} e^{(t_i-s)Delta} w(s) ds at every node (spectra, symbol not applied)."""
    return duhamel_sweep(times, lattice.xi_sq, integrand, interval_integrand)


def _integrate(times: np.ndarray, lattice: FrequencyLattice, node_values, interval_values,
               i_end: int, check: bool) -> tuple[np.ndarray, float | None]:
    """Heat-weighted integral up to node ``i_end`` plus a step-halving error estimate."""
    def run(nodes):
        sub = times[nodes]
        if interval_values is None:
            res = duhamel_sweep(sub, lattice.xi_sq, lambda i: node_values(nodes[i]))
        else:
            levels = [time_level(0.5 * (a + b)) for a, b in zip(sub[:-1], sub[1:])]
            res = duhamel_sweep(sub, lattice.xi_sq, None,
                                lambda k, i: interval_values(nodes[i], levels[k]))
        return res[-1]

    fine = run(_subsample(i_end, 1))
    err = None
    if check and i_end >= 2:
        coarse = run(_subsample(i_end, 2))
        scale = float(np.max(np.abs(fine)))
        # second-order scheme: I_h - I_{2h} ~ 3 (I_h - I)
        err = float(np.max(np.abs(fine - coarse))) / 3 / scale if scale > 0 else 0.0
        if err > STEP_TOL:
            warnings.warn(f"Duhamel quadrature error estimate {err:.2e} exceeds {STEP_TOL:.0%}; "
                          "refine the time mesh", QuadratureWarning, stacklevel=3)
    return fine, err


def bilinear_B(u_traj: TrajectorySampler, v_traj: TrajectorySampler, t: float,
               which: Sequence[int] = (0,), components: tuple[int | None, int | None] = (None, None),
               check: bool = True, pad: int = 2) -> SpectralField:
    """int_0^t A^{t-s}(u(s) v(s)) ds with A = A_l (``which`` = (l,)) or A_{l,l',l''}.

    ``t`` must be a mesh node.  Indices are 0-based.  A step-halving estimate
    above 1% raises :class:`QuadratureWarning`.
    """
    times = _check_mesh(u_traj, v_traj)
    i_end = _node_index(times, t)
    lat = u_traj.lattice
    cu, cv = components
    sym = operator_symbol(lat, which)

    def w(i):
        a = _scalar(u_traj.fields[i], cu)
        b = _scalar(v_traj.fields[i], cv)
        return pointwise_product(a, b, pad).values

    I, _ = _integrate(times, lat, w, None, i_end, check)
    out = sym * I
    return SpectralField(lat, out, _is_real(lat, out))


def _symmetrized(lat: FrequencyLattice, values: np.ndarray) -> np.ndarray:
    return 0.5 * (values + np.conj(values[lat.mirror_index]))


def _is_real(lat: FrequencyLattice, values: np.ndarray) -> bool:
    mirror = np.conj(values[lat.mirror_index])
    scale = float(np.max(np.abs(values), initial=0.0))
    return scale == 0.0 or float(np.max(np.abs(values - mirror))) <= 1e-12 * scale


def bilinear_sub(u_traj: TrajectorySampler, v_traj: TrajectorySampler, t: float,
                 which: str, eps=None, index: Sequence[int] = (0, 0, 0),
                 components: tuple[int | None, int | None] = (None, None),
                 j_max: int | None = None, check: bool = True, pad: int = 2,
                 window: MeyerWindow = DEFAULT_WINDOW) -> SpectralField:
    """Sub-operator with the integrand restricted to one term family.

    ``which`` is 'eps' (low-high with detail index ``eps``), 'B1' (same-level
    high-high) or 'B2' (scaling-scaling).  The family is cut at the time level
    j_s of each quadrature interval, evaluated at the interval midpoint.
    """
    if which not in FAMILIES:
        raise ValueError(f"which must be one of {FAMILIES}, got {which!r}")
    times = _check_mesh(u_traj, v_traj)
    i_end = _node_index(times, t)
    lat = u_traj.lattice
    j_max = lat.max_level if j_max is None else j_max
    cu, cv = components
    cache: dict = {}

    def w(i, j_s):
        key = (i, min(max(j_s, 0), j_max))
        if key not in cache:
            a = _scalar(u_traj.fields[i], cu).values
            b = _scalar(v_traj.fields[i], cv).values
            cache[key] = family_values(a, b, lat, key[1], which, eps, j_max, window, pad)
        return cache[key]

    I, _ = _integrate(times, lat, None, w, i_end, check)
    out = operator_symbol(lat, index) * I
    return SpectralField(lat, out, _is_real(lat, out))


def bilinear_terms(u_traj: TrajectorySampler, v_traj: TrajectorySampler, t: float,
                   index: Sequence[int] = (0, 0, 0),
                   components: tuple[int | None, int | None] = (None, None),
                   j_max: int | None = None, pad: int = 2,
                   window: MeyerWindow = DEFAULT_WINDOW) -> dict[str, SpectralField]:
    """Duhamel integral of each of the fourteen terms, cut at the interval time level."""
    times = _check_mesh(u_traj, v_traj)
    i_end = _node_index(times, t)
    lat = u_traj.lattice
    j_max = lat.max_level if j_max is None else j_max
    cu, cv = components
    cache: dict = {}

    def split(i, j_s):
        key = (i, min(max(j_s, 0), j_max))
        if key not in cache:
            a = _scalar(u_traj.fields[i], cu).values
            b = _scalar(v_traj.fields[i], cv).values
            vals = _split_values(a, b, lat, key[1], j_max, window, pad)
            cache[key] = np.stack([vals[k] for k in TERM_NAMES])
        return cache[key]

    I, _ = _integrate(times, lat, None, split, i_end, check=False)
    sym = operator_symbol(lat, index)
    return {k: SpectralField(lat, sym * I[n], _is_real(lat, sym * I[n]))
            for n, k in enumerate(TERM_NAMES)}


# -------------------------------------------------------- exact-zero facts ---

def low_frequency_defect(u_traj: TrajectorySampler, v_traj: TrajectorySampler, t: float,
                         eps, index: Sequence[int] = (0, 0, 0),
                         components: tuple[int | None, int | None] = (None, None),
                         window: MeyerWindow = DEFAULT_WINDOW) -> float:
    """max_k |<B_eps(u, v)(t), Phi^0_{j_t,k}>| relative to the largest output spectrum entry.

    The low-high family only has frequencies |xi_i| >= (4 pi/3) 2^{j_t} along
    the directions where eps_i = 1, outside the scaling window at j_t, so
    this is zero up to rounding.
    """
    from .wavelets import analyze_band

    B = bilinear_sub(u_traj, v_traj, t, "eps", eps, index, components, check=False,
                     window=window)
    lat = B.lattice
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        j_t = parameter_index(t, lat.max_level).scaling_level
    coeffs = analyze_band(B.values, window, lat, j_t, (0,) * lat.n)
    ref = max(float(np.sqrt(np.sum(np.abs(B.values) ** 2))), _input_scale(u_traj, v_traj, components))
    return float(np.max(np.abs(coeffs))) / ref if ref > 0 else 0.0


def _input_scale(u_traj, v_traj, components) -> float:
    cu, cv = components
    nu = max(_scalar(f, cu).norm() for f in u_traj.fields)
    nv = max(_scalar(f, cv).norm() for f in v_traj.fields)
    return nu * nv


def scaling_coupling(lattice: FrequencyLattice, t: float, s: float, j_s: int, k, k2,
                     eps, j1: int, k1, index: Sequence[int] = (0, 0, 0),
                     window: MeyerWindow = DEFAULT_WINDOW) -> complex:
    """<Phi^0_{j_s,k} Phi^0_{j_s,k''}, A^{t-s} Phi^eps_{j',k'}>, formed exactly on a padded grid.

    Zero whenever j_s <= j' - 2: the product lives in |xi_i| <= (8 pi/3) 2^{j_s},
    the detail atom in |xi_i| >= (2 pi/3) 2^{j'} for some i.
    """
    if not s < t:
        raise ValueError("coupling needs s < t")
    zero = (0,) * lattice.n
    a = atom_spectrum(window, zero, j_s, k, lattice).spectrum.values
    b = atom_spectrum(window, zero, j_s, k2, lattice).spectrum.values
    target = atom_spectrum(window, tuple(eps), j1, k1, lattice).spectrum.values
    sym = operator_symbol(lattice, index) * np.exp(-(t - s) * lattice.xi_sq)
    return complex(np.vdot(product_values(a, b, 2), sym * target))


# ----------------------------------------------------------- operator norm ---

@dataclass
class OperatorNormResult:
    ratios: list[float]
    skipped: int
    notes: list[str] = field(default_factory=list)
    p: float = 4.0
    m: float = 1.0
    M: int = 0

    @property
    def constant(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def to_dict(self) -> dict:
        return {"constant": self.constant, "ratios": self.ratios, "skipped": self.skipped,
                "notes": self.notes, "p": self.p, "m": self.m, "M": self.M}


def distinct_indices(n: int) -> list[tuple[int, ...]]:
    """Operator indices with distinct symbols (A_{l,l',l''} is symmetric in its indices)."""
    out = [(l,) for l in range(n)]
    out += sorted({tuple(sorted(w)) for w in all_operator_indices(n) if len(w) == 3})
    return out


def bilinear_trajectory(u_traj: TrajectorySampler, v_traj: TrajectorySampler,
                        indices: Sequence[Sequence[int]], pad: int = 1,
                        components: tuple[int | None, int | None] = (None, None)
                        ) -> dict[tuple[int, ...], TrajectorySampler]:
    """B(u, v) at every mesh node, one trajectory per operator index.

    Factors band-limited to |m_i| < M/4 have products with |m_i| <= M/2 - 2,
    so the unpadded product (``pad`` = 1) is already exact.
    """
    times = _check_mesh(u_traj, v_traj)
    lat = u_traj.lattice
    cu, cv = components
    w = lambda i: pointwise_product(_scalar(u_traj.fields[i], cu),  # noqa: E731
                                    _scalar(v_traj.fields[i], cv), pad).values
    sweep = heat_duhamel(times, lat, w)
    out = {}
    for idx in indices:
        # odd imaginary symbols map real fields to real fields
        sym = operator_symbol(lat, idx)
        real = _scalar(u_traj.fields[0], cu).real and _scalar(v_traj.fields[0], cv).real
        fields = [SpectralField(lat, _symmetrized(lat, sym * I) if real else sym * I, real)
                  for I in sweep]
        out[tuple(idx)] = TrajectorySampler(times, fields, u_traj.window)
    return out


def verify_operator_norm(pairs: Sequence[tuple[TrajectorySampler, TrajectorySampler]],
                         p: float = 4.0, m: float = 1.0, shells: Sequence[int] | None = None,
                         indices: Sequence[Sequence[int]] | None = None) -> OperatorNormResult:
    """max over pairs and operator indices of ||B(u,v)||_Y / (||u||_Y ||v||_Y).

    ``||.||_Y`` is H0 + Hm on ``shells`` (default: every shell 0..max_level
    with enough samples); pairs with a zero factor are skipped.
    """
    ratios, skipped, notes, M = [], 0, [], 0
    for n_pair, (u, v) in enumerate(pairs):
        lat = u.lattice
        M = lat.M
        sh = [s for s in u.shells() if s <= lat.max_level] if shells is None else shells
        idx = distinct_indices(lat.n) if indices is None else indices
        yu = ypm_norm(u, p, m, sh).Y
        yv = ypm_norm(v, p, m, sh).Y
        if yu == 0.0 or yv == 0.0:
            skipped += 1
            notes.append(f"pair {n_pair}: zero norm factor skipped")
            continue
        best = 0.0
        for traj in bilinear_trajectory(u, v, idx).values():
            best = max(best, ypm_norm(traj, p, m, sh).Y / (yu * yv))
        ratios.append(best)
    return OperatorNormResult(ratios, skipped, notes, p, m, M)


def operator_norm_ensemble(M: int, count: int = 50, seed: int = 0, n: int = 2,
                           samples_per_shell: int = 4, extra: int = 2,
                           scaling_only: bool = False
                           ) -> list[tuple[TrajectorySampler, TrajectorySampler]]:
    """Pairs of heat trajectories of random data with unit critical Besov norm (p = 4).

    With ``scaling_only`` the data is a pure scaling band at the data level,
    which only feeds the scaling-scaling family.
    """
    from .heatflow import make_heat_trajectory, random_field

    lat = FrequencyLattice(n, M)
    rng = np.random.default_rng(seed)
    shells = (0, lat.max_level)
    pairs = []
    for _ in range(count):
        pair = []
        for _side in range(2):
            if scaling_only:
                f = _scaling_field(lat, lat.data_level - 1, rng)
            else:
                f = random_field(lat, (0, lat.data_level), rng, besov=1.0)
            pair.append(make_heat_trajectory(f, shells, samples_per_shell, extra,
                                             include_zero=True))
        pairs.append(tuple(pair))
    return pairs


def _scaling_field(lattice: FrequencyLattice, j: int, rng: np.random.Generator) -> SpectralField:
    from .wavelets import WaveletCoefficients, synthesize

    c = WaveletCoefficients.zeros(lattice.n, j, j)
    c.scaling = rng.standard_normal(c.scaling.shape).astype(complex)
    f = synthesize(c, lattice, real=True)
    return f * (1.0 / max(f.norm(), 1e-300))
