"""Certification suites behind the command-line tool.

Each suite returns a report dict with a ``passed`` flag and plain rows that
serialize to JSON and CSV.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .config import RunConfig
from .heatflow import embedding_experiment, make_heat_trajectory, random_field
from .kernels import ESTIMATES, certify
from .norms import low_freq_bound_check
from .paraproduct import operator_norm_ensemble, verify_operator_norm
from .solver import SmallnessWarning, SolverConfig, picard_solve, preset_field, scaling_check
from .spectral import FrequencyLattice, random_band_limited
from .wavelets import (DEFAULT_WINDOW, MeyerWindow, _check_ramp, analyze, atom_spectrum,
                       band_window, detail_eps, quartic_ramp, synthesize)

GRAM_TOL = 1e-8
PARTITION_TOL = 1e-10
ROUND_TRIP_TOL = 1e-10
PARSEVAL_TOL = 1e-10
RESIDUAL_TOL = 1e-4
DIVERGENCE_TOL = 1e-9
SCALING_TOL = 0.01
EXTRA_ESTIMATES = ("embedding", "low-frequency", "bilinear")
ALL_ESTIMATES = ESTIMATES + EXTRA_ESTIMATES


def smoothstep_ramp(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3 - 2 * x)


def square_ramp(x):
    """Deliberately broken ramp: x^2 + (1-x)^2 != 1."""
    x = np.clip(x, 0.0, 1.0)
    return x * x


RAMPS = {"quartic": quartic_ramp, "smoothstep": smoothstep_ramp, "square": square_ramp}


def window_for(name: str) -> MeyerWindow:
    """Window with the named ramp; deliberately left unvalidated so breaches are measured."""
    return DEFAULT_WINDOW if name == "quartic" else MeyerWindow(RAMPS[name])


def _row(name: str, value: float, tol: float, **extra) -> dict:
    ok = bool(math.isfinite(value) and value < tol)
    return {"check": name, "value": float(value), "tolerance": tol, "passed": ok, **extra}


# ------------------------------------------------------------------ basis ---

def gram_deviation(lattice: FrequencyLattice, window: MeyerWindow, j_min: int,
                   rng: np.random.Generator, per_band: int = 2) -> float:
    """max |<atom, Phi> - delta| for sampled atoms against every frame element from j_min up.

    Each analysis returns a full row of the Gram matrix, so the whole frame
    is covered column-wise.
    """
    n = lattice.n
    zero = (0,) * n
    worst = 0.0
    bands = [(zero, j_min)] + [(e, j) for j in range(j_min, lattice.max_level + 1)
                               for e in detail_eps(n)]
    for eps, j in bands:
        for _ in range(per_band):
            k = tuple(int(x) for x in rng.integers(0, 2**j, n))
            atom = atom_spectrum(window, eps, j, k, lattice).spectrum
            row = analyze(atom, j_min, window=window, check=False)
            row.set(eps, j, k, row.get(eps, j, k) - 1.0)
            worst = max(worst, row.max_abs())
    return worst


def partition_residual(lattice: FrequencyLattice, window: MeyerWindow) -> tuple[float, float]:
    """(periodization residual of |psi0|^2, level telescoping residual on the lattice)."""
    xi = np.linspace(-np.pi, np.pi, 4001)
    per = sum(np.abs(window.psi0(xi + 2 * np.pi * k)) ** 2 for k in range(-2, 3))
    periodic = float(np.max(np.abs(per - 1)))
    n = lattice.n
    zero = (0,) * n
    top = lattice.max_level
    ref = np.abs(band_window(window, lattice, top + 1, zero)) ** 2
    worst = 0.0
    for j0 in range(0, top + 1):
        acc = np.abs(band_window(window, lattice, j0, zero)) ** 2
        for j in range(j0, top + 1):
            for e in detail_eps(n):
                acc = acc + np.abs(band_window(window, lattice, j, e)) ** 2
        worst = max(worst, float(np.max(np.abs(acc - ref))))
    return periodic, worst


def verify_basis(cfg: RunConfig) -> dict:
    """Orthonormality, partition of unity, round trip and Parseval for the full frame and five Lambda_t."""
    lat = FrequencyLattice(cfg.n, cfg.M)
    window = window_for(cfg.ramp)
    rng = np.random.default_rng(cfg.seed)
    rows = [_row("ramp_symmetry", _check_ramp(window.ramp), 1e-12)]
    periodic, telescoping = partition_residual(lat, window)
    rows.append(_row("partition_periodization", periodic, PARTITION_TOL))
    rows.append(_row("partition_telescoping", telescoping, PARTITION_TOL))
    levels = sorted({0} | set(np.linspace(1, lat.max_level, 5).round().astype(int).tolist()))
    levels = levels[:1] + levels[-5:] if len(levels) > 5 else levels
    f = random_band_limited(lat, rng)
    total = f.norm() ** 2
    for j_min in levels:
        tag = "full" if j_min == 0 else f"j_t={j_min}"
        rows.append(_row(f"gram[{tag}]", gram_deviation(lat, window, j_min, rng), GRAM_TOL))
        c = analyze(f, j_min, window=window, check=False)
        g = synthesize(c, lat, window, real=True)
        rt = float(np.max(np.abs(g.values - f.values)) / np.max(np.abs(f.values)))
        rows.append(_row(f"round_trip[{tag}]", rt, ROUND_TRIP_TOL))
        rows.append(_row(f"parseval[{tag}]", abs(c.energy() - total) / total, PARSEVAL_TOL))
    return {"suite": "verify-basis", "lattice": {"n": lat.n, "M": lat.M},
            "parameter_levels": [int(j) for j in levels if j > 0],
            "rows": rows, "passed": all(r["passed"] for r in rows)}


# -------------------------------------------------------------- estimates ---

def _embedding_row(cfg: RunConfig) -> dict:
    cases = [(4.0, 1.0), (3.0, 1.0), (4.0, 2.0)]
    runs = []
    for p, m in cases:
        if p <= cfg.n:
            continue
        consts = []
        for M in (cfg.M, 2 * cfg.M):
            lat = FrequencyLattice(cfg.n, M)
            for seed in (cfg.seed, cfg.seed + 1):
                rng = np.random.default_rng(seed)
                ens = [random_field(lat, (0, lat.data_level), rng, besov=1.0, p=p)
                       for _ in range(cfg.embedding_count)]
                r = embedding_experiment(ens, p, m)
                consts.append({"M": M, "seed": seed, "constant": r.constant})
        vals = [c["constant"] for c in consts]
        spread = max(vals) / min(vals) if min(vals) > 0 else math.inf
        runs.append({"p": p, "m": m, "runs": consts, "spread": spread,
                     "passed": bool(all(math.isfinite(v) for v in vals) and spread <= 2.0)})
    return {"estimate": "embedding", "cases": runs,
            "passed": all(r["passed"] for r in runs)}


def _low_frequency_row(cfg: RunConfig) -> dict:
    consts = []
    for M in (cfg.M, 2 * cfg.M):
        lat = FrequencyLattice(cfg.n, M)
        rng = np.random.default_rng(cfg.seed)
        best = 0.0
        for _ in range(cfg.embedding_count):
            f = random_field(lat, (0, lat.data_level), rng, besov=1.0, p=cfg.p)
            traj = make_heat_trajectory(f, (0, lat.max_level), 4)
            best = max(best, low_freq_bound_check(traj, cfg.p, cfg.m,
                                                  list(range(lat.max_level + 1))))
        consts.append({"M": M, "constant": best})
    a, b = consts[0]["constant"], consts[1]["constant"]
    spread = max(a, b) / min(a, b) if min(a, b) > 0 else math.inf
    return {"estimate": "low-frequency", "runs": consts, "spread": spread,
            "passed": bool(math.isfinite(spread) and spread <= 2.0)}


def _bilinear_row(cfg: RunConfig) -> dict:
    consts = []
    for M in (cfg.M, 2 * cfg.M):
        r = verify_operator_norm(operator_norm_ensemble(M, cfg.pairs, cfg.seed, cfg.n),
                                 cfg.p, cfg.m)
        consts.append({"M": M, "constant": r.constant, "skipped": r.skipped})
    a, b = consts[0]["constant"], consts[1]["constant"]
    spread = max(a, b) / min(a, b) if min(a, b) > 0 else math.inf
    return {"estimate": "bilinear", "runs": consts, "spread": spread,
            "passed": bool(math.isfinite(spread) and spread <= 2.0)}


def verify_estimates(cfg: RunConfig, ids=None) -> dict:
    """One row per estimate id; decay fits are checked under M doubling."""
    ids = list(ALL_ESTIMATES) if not ids else list(ids)
    unknown = [i for i in ids if i not in ALL_ESTIMATES]
    if unknown:
        raise ValueError(f"unknown estimate(s) {unknown}; known: {', '.join(ALL_ESTIMATES)}")
    rows = []
    for est in ids:
        if est in ESTIMATES:
            c = certify(est, cfg.M, cfg.count, cfg.seed, cfg.n, cfg.stability_tolerance)
            rows.append({"estimate": est, "C": c.fit.C, "c": c.fit.c, "N": c.fit.N,
                         "C_fine": c.fit_fine.C, "drift": c.drift,
                         "certified": c.fit.certified and c.fit_fine.certified,
                         "stable": c.stable, "samples": c.fit.samples,
                         "configurations": c.fit.configurations,
                         "passed": bool(c.certified)})
        elif est == "embedding":
            rows.append(_embedding_row(cfg))
        elif est == "low-frequency":
            rows.append(_low_frequency_row(cfg))
        else:
            rows.append(_bilinear_row(cfg))
    return {"suite": "verify-estimates", "rows": rows, "passed": all(r["passed"] for r in rows)}


# ------------------------------------------------------------------ solve ---

def solver_config(cfg: RunConfig) -> SolverConfig:
    return SolverConfig(p=cfg.p, m=cfg.m, shell_lo=cfg.shell_lo, shell_hi=cfg.shell_hi,
                        samples_per_shell=cfg.samples_per_shell, extra=cfg.extra_shells,
                        max_iter=cfg.max_iter, tol=cfg.tol, smallness=cfg.smallness,
                        allow_small_m=cfg.m < 1)


def run_solve(cfg: RunConfig):
    """Picard run for the configured preset; returns (report, state)."""
    lat = FrequencyLattice(cfg.n, cfg.M)
    a = preset_field(cfg.preset, lat, cfg.scale, cfg.seed, cfg.p)
    scfg = solver_config(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SmallnessWarning)
        state = picard_solve(a, scfg)
    notes = [str(w.message) for w in caught if issubclass(w.category, SmallnessWarning)]
    checks = {
        "converged": state.converged,
        "residual_ok": state.residual is not None and state.residual < RESIDUAL_TOL,
        "divergence_ok": state.divergence < DIVERGENCE_TOL,
    }
    report = {"suite": "solve", "preset": cfg.preset, "scale": cfg.scale,
              "state": state.to_dict(), "warnings": notes}
    if cfg.lam:
        sc = scaling_check(a, cfg.lam, scfg)
        report["scaling"] = sc.to_dict()
        checks["scaling_ok"] = sc.deviation <= SCALING_TOL and sc.besov_defect <= 1e-10
    if not state.converged:
        report["diagnostics"] = {
            "status": state.status,
            "last_ratios": state.ratios[-3:],
            "besov": state.besov,
            "smallness_threshold": cfg.smallness,
        }
    report["checks"] = checks
    report["passed"] = all(checks.values())
    return report, state
