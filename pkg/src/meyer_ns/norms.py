"""Besov norms and the shell-block quantities of the time-adapted solution norm.

For a trajectory u(t) sampled on a time mesh, shell j' collects the samples
with 1 <= t 4^{j'} < 4.  On that shell the scaling band sits at level j'
and

    A0[j']      = 2^{p j'(n/2-1)}            max_t sum_k |a^0_{j',k}(t)|^p
    Am[j, j']   = 2^{2mp(j-j')} 2^{pj(n/2-1)} max_t sum_{eps,k} |a^eps_{j,k}(t)|^p

    H0 = (max_{j'} A0[j'])^{1/p},   Hm = max_{j'} (sum_{j >= j'} Am[j, j'])^{1/p}.

Vector fields pool the coefficients of all components inside the p-sums.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence, Union

import numpy as np

from .spectral import SpectralField, VectorField
from .wavelets import (DEFAULT_WINDOW, MeyerWindow, WaveletCoefficients, analyze,
                       analyze_band, analyze_parameter, time_level)

Field = Union[SpectralField, VectorField]
MIN_SHELL_SAMPLES = 4


def _components(f: Field) -> tuple[SpectralField, ...]:
    return f.components if isinstance(f, VectorField) else (f,)


def shell_of(t: float) -> int:
    """Shell index j' with 1 <= t 4^{j'} < 4."""
    return time_level(t)


@dataclass(eq=False)
class TrajectorySampler:
    """Fields sampled on a strictly increasing time mesh.

    Samples at t = 0 are allowed (they belong to no shell).  Per-sample level
    sums are cached, so repeated norm evaluations are cheap.
    """

    times: np.ndarray
    fields: Sequence[Field]
    window: MeyerWindow = DEFAULT_WINDOW
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) != len(self.fields):
            raise ValueError("one field per mesh time is required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time mesh must be strictly increasing")
        if len(self.times) and self.times[0] < 0:
            raise ValueError("time mesh must be nonnegative")

    @property
    def lattice(self):
        return _components(self.fields[0])[0].lattice

    @property
    def n(self) -> int:
        return self.lattice.n

    def __call__(self, i: int) -> Field:
        return self.fields[i]

    def shell_indices(self, shell: int) -> np.ndarray:
        t = self.times
        return np.nonzero((t * 4.0**shell >= 1) & (t * 4.0**shell < 4))[0]

    def shells(self, min_samples: int = MIN_SHELL_SAMPLES) -> list[int]:
        pos = self.times[self.times > 0]
        found = sorted({shell_of(t) for t in pos})
        return [s for s in found if len(self.shell_indices(s)) >= min_samples]

    def level_sums(self, i: int, p: float, j_max: int) -> tuple[float, np.ndarray]:
        """(sum_k |a^0_{j_t,k}|^p, [sum_{eps,k} |a^eps_{j,k}|^p for j = j_t..j_max]) at sample i."""
        key = ("sums", i, p, j_max)
        if key not in self._cache:
            t = float(self.times[i])
            s0 = 0.0
            sj = None
            for comp in _components(self.fields[i]):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    c = analyze_parameter(comp, t, j_max, self.window, check=False)
                s0 += float(np.sum(np.abs(c.scaling) ** p))
                row = np.array([np.sum(np.abs(c.details[j]) ** p)
                                for j in range(c.j_min, c.j_max + 1)])
                sj = row if sj is None else sj + row
            self._cache[key] = (s0, sj)
        return self._cache[key]

    def scale(self, factor: float) -> "TrajectorySampler":
        return TrajectorySampler(self.times, [f * factor for f in self.fields], self.window)


# ------------------------------------------------------------------ Besov ---

def besov_norm(c: WaveletCoefficients | Sequence[WaveletCoefficients], s: float,
               p: float, q: float) -> float:
    """Wavelet Besov norm over the detail bands.

    ( sum_j 2^{jq(s + n/2 - n/p)} ( sum_{eps,k} |c^eps_{j,k}|^p )^{q/p} )^{1/q};
    p or q equal to ``inf`` take maxima.  A sequence of coefficient sets (one
    per vector component) is pooled inside the inner sum.
    """
    if p < 1 or q < 1:
        raise ValueError(f"Besov indices need p, q >= 1, got p = {p}, q = {q}")
    sets = [c] if isinstance(c, WaveletCoefficients) else list(c)
    first = sets[0]
    n = first.n
    levels = range(first.j_min, first.j_max + 1)
    inner = []
    for j in levels:
        if math.isinf(p):
            val = max(float(np.max(np.abs(cs.details[j]))) for cs in sets)
        else:
            val = sum(float(np.sum(np.abs(cs.details[j]) ** p)) for cs in sets) ** (1 / p)
        weight = 2.0 ** (j * (s + n / 2 - (0 if math.isinf(p) else n / p)))
        inner.append(weight * val)
    if not inner:
        return 0.0
    inner = np.array(inner)
    if math.isinf(q):
        return float(inner.max())
    return float(np.sum(inner**q) ** (1 / q))


def scaling_band_norm(c: WaveletCoefficients | Sequence[WaveletCoefficients], p: float) -> float:
    """l^p norm of the scaling band (reported next to the Besov norm)."""
    sets = [c] if isinstance(c, WaveletCoefficients) else list(c)
    if math.isinf(p):
        return max(float(np.max(np.abs(cs.scaling))) for cs in sets)
    return sum(float(np.sum(np.abs(cs.scaling) ** p)) for cs in sets) ** (1 / p)


def field_besov_norm(f: Field, p: float, s: float | None = None, q: float | None = None,
                     j_max: int | None = None, window: MeyerWindow = DEFAULT_WINDOW) -> float:
    """Critical Besov norm (s = n/p - 1, q = p unless given) of a field, levels 0..j_max."""
    comps = _components(f)
    n = comps[0].lattice.n
    s = n / p - 1 if s is None else s
    q = p if q is None else q
    return besov_norm([analyze(c, 0, j_max, window) for c in comps], s, p, q)


# ----------------------------------------------------------- shell blocks ---

def _check_pm(p: float, m: float, n: int, allow_subcritical: bool) -> None:
    if not (p > 0 and math.isfinite(p)):
        raise ValueError("shell blocks need finite p > 0")
    if m <= 0:
        raise ValueError(f"m must be positive, got {m}")
    if p <= n and not allow_subcritical:
        raise ValueError(f"p = {p} must exceed n = {n} (pass allow_subcritical=True to explore)")


def block_norms(traj: TrajectorySampler, p: float, m: float, shell: int,
                j_max: int | None = None, allow_subcritical: bool = False,
                min_samples: int = MIN_SHELL_SAMPLES) -> tuple[float, dict[int, float]]:
    """Shell blocks (A0[j'], {j: Am[j, j']}) for one shell j'."""
    n = traj.n
    _check_pm(p, m, n, allow_subcritical)
    j_max = traj.lattice.max_level if j_max is None else j_max
    if not 0 <= shell <= j_max:
        raise ValueError(f"shell {shell} outside the representable range 0..{j_max}")
    idx = traj.shell_indices(shell)
    if len(idx) < min_samples:
        raise ValueError(f"shell {shell} has {len(idx)} samples; at least {min_samples} needed")
    s0 = 0.0
    sj = np.zeros(j_max - shell + 1)
    for i in idx:
        a, b = traj.level_sums(int(i), p, j_max)
        s0 = max(s0, a)
        sj = np.maximum(sj, b)
    A0 = 2.0 ** (p * shell * (n / 2 - 1)) * s0
    Am = {}
    for off, j in enumerate(range(shell, j_max + 1)):
        Am[j] = 2.0 ** (2 * m * p * (j - shell)) * 2.0 ** (p * j * (n / 2 - 1)) * float(sj[off])
    return float(A0), Am


@dataclass
class NormReport:
    p: float
    m: float
    n: int
    shells: list[int]
    A0: dict[int, float]
    Am: dict[tuple[int, int], float]
    H0: float
    Hm: float
    besov_sup: float | None = None
    tail: dict[int, float] = field(default_factory=dict)
    outside_regime: bool = False

    @property
    def Y(self) -> float:
        """Single scalar size used for increments and ratios: H0 + Hm."""
        return self.H0 + self.Hm

    def recompute(self) -> tuple[float, float]:
        return assemble(self.p, self.shells, self.A0, self.Am)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["A0"] = {str(k): v for k, v in self.A0.items()}
        d["Am"] = {f"{j},{jp}": v for (j, jp), v in self.Am.items()}
        d["tail"] = {str(k): v for k, v in self.tail.items()}
        d["Y"] = self.Y
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "NormReport":
        d = dict(d)
        d.pop("Y", None)
        d["A0"] = {int(k): v for k, v in d["A0"].items()}
        d["Am"] = {tuple(int(x) for x in k.split(",")): v for k, v in d["Am"].items()}
        d["tail"] = {int(k): v for k, v in d.get("tail", {}).items()}
        return cls(**d)


def assemble(p: float, shells: Sequence[int], A0: dict, Am: dict) -> tuple[float, float]:
    """H0 and Hm from stored blocks."""
    if not shells:
        return 0.0, 0.0
    H0 = max(A0[s] for s in shells) ** (1 / p)
    Hm = max(sum(v for (j, jp), v in Am.items() if jp == s) for s in shells) ** (1 / p)
    return H0, Hm


def default_shells(traj: TrajectorySampler, j_max: int) -> list[int]:
    """Mesh shells with enough samples inside [0, j_max - 3]."""
    return [s for s in traj.shells() if 0 <= s <= max(j_max - 3, 0)]


def ypm_norm(traj: TrajectorySampler, p: float, m: float, shells: Sequence[int] | None = None,
             j_max: int | None = None, allow_subcritical: bool = False,
             with_besov: bool = False) -> NormReport:
    """Assemble the shell blocks into H0, Hm and a :class:`NormReport`."""
    j_max = traj.lattice.max_level if j_max is None else j_max
    shells = default_shells(traj, j_max) if shells is None else list(shells)
    A0, Am, tail = {}, {}, {}
    for s in shells:
        a0, am = block_norms(traj, p, m, s, j_max, allow_subcritical)
        A0[s] = a0
        for j, v in am.items():
            Am[(j, s)] = v
        tot = sum(am.values())
        tail[s] = am[j_max] / tot if tot > 0 else 0.0
    H0, Hm = assemble(p, shells, A0, Am)
    besov = None
    if with_besov:
        besov = max((field_besov_norm(traj.fields[i], p, j_max=j_max, window=traj.window)
                     for s in shells for i in traj.shell_indices(s)), default=0.0)
    return NormReport(p, m, traj.n, list(shells), A0, Am, H0, Hm, besov, tail, m < 1)


def low_freq_bound_check(traj: TrajectorySampler, p: float, m: float,
                         shells: Sequence[int] | None = None, j_max: int | None = None) -> float:
    """max over shells, samples, levels j >= j_t and k of 2^{nj/2} |a^0_{j,k}(t)| 2^{-j_t}."""
    lat = traj.lattice
    j_max = lat.max_level if j_max is None else j_max
    shells = default_shells(traj, j_max) if shells is None else list(shells)
    zero = (0,) * lat.n
    best = 0.0
    for s in shells:
        for i in traj.shell_indices(s):
            for comp in _components(traj.fields[int(i)]):
                for j in range(s, j_max + 1):
                    a = analyze_band(comp.values, traj.window, lat, j, zero)
                    best = max(best, 2.0 ** (lat.n * j / 2) * float(np.max(np.abs(a))) * 2.0**-s)
    return best
