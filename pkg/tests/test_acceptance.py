"""Desk-scale acceptance checks, one recorded PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
happen; they are also collected in the terminal summary.
"""
import math
import time
import warnings

import numpy as np
import pytest

from meyer_ns.config import RunConfig
from meyer_ns.heatflow import make_heat_trajectory, random_field
from meyer_ns.kernels import ESTIMATES
from meyer_ns.paraproduct import (distinct_indices, low_frequency_defect, paraproduct_decompose,
                                  scaling_coupling)
from meyer_ns.solver import SolverConfig, picard_solve, preset_field, scaling_check
from meyer_ns.spectral import FrequencyLattice
from meyer_ns.suites import _bilinear_row, _embedding_row, verify_basis, verify_estimates
from meyer_ns.wavelets import detail_eps

pytestmark = pytest.mark.slow

M = 128


def test_basis_certification(verdict):
    t0 = time.perf_counter()
    report = verify_basis(RunConfig(n=2, M=256))
    elapsed = time.perf_counter() - t0
    worst = {kind: max(r["value"] for r in report["rows"] if r["check"].startswith(kind))
             for kind in ("gram", "partition", "round_trip")}
    ok = (worst["gram"] < 1e-8 and worst["partition"] < 1e-10 and worst["round_trip"] < 1e-10
          and len(report["parameter_levels"]) == 5 and elapsed <= 60)
    verdict(1, ok, f"gram {worst['gram']:.1e}, partition {worst['partition']:.1e}, "
                   f"round trip {worst['round_trip']:.1e}, j_t {report['parameter_levels']}, "
                   f"{elapsed:.1f}s")
    assert ok


def test_decomposition_identity(verdict):
    lat = FrequencyLattice(2, M)
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        u = random_field(lat, (0, lat.data_level), rng)
        v = random_field(lat, (0, lat.data_level), rng)
        t = 4.0 ** -rng.uniform(0, lat.max_level)
        worst = max(worst, paraproduct_decompose(u, v, t).residual())
    ok = worst < 1e-10
    verdict(2, ok, f"max relative residual {worst:.1e} over 100 pairs")
    assert ok


def test_exact_support_facts(verdict):
    lat = FrequencyLattice(2, M)
    rng = np.random.default_rng(12)
    eps_all = detail_eps(2)
    idx_all = distinct_indices(2)

    low = 0.0
    for _ in range(10):
        u = random_field(lat, (0, lat.data_level), rng)
        v = random_field(lat, (0, lat.data_level), rng)
        tu = make_heat_trajectory(u, (0, lat.max_level), 4, 2, include_zero=True)
        tv = make_heat_trajectory(v, (0, lat.max_level), 4, 2, include_zero=True)
        for _ in range(5):
            t = float(tu.times[rng.integers(8, len(tu.times))])
            eps = eps_all[rng.integers(len(eps_all))]
            idx = idx_all[rng.integers(len(idx_all))]
            low = max(low, low_frequency_defect(tu, tv, t, eps, idx))

    coupling = 0.0
    for _ in range(50):
        j1 = int(rng.integers(2, lat.max_level + 1))
        j_s = int(rng.integers(0, j1 - 1))
        k = tuple(rng.integers(0, 2**j_s, 2))
        k2 = tuple(rng.integers(0, 2**j_s, 2))
        k1 = tuple(rng.integers(0, 2**j1, 2))
        t = 4.0 ** -rng.uniform(0, lat.max_level)
        s = t * rng.uniform(0, 1)
        eps = eps_all[rng.integers(len(eps_all))]
        idx = idx_all[rng.integers(len(idx_all))]
        coupling = max(coupling, abs(scaling_coupling(lat, t, s, j_s, k, k2, eps, j1, k1, idx)))
    ok = low < 1e-10 and coupling < 1e-10
    verdict(3, ok, f"low-frequency {low:.1e}, coupling {coupling:.1e} (50 configurations each)")
    assert ok


def test_decay_certifications(verdict):
    t0 = time.perf_counter()
    report = verify_estimates(RunConfig(n=2, M=M, count=100), ESTIMATES)
    elapsed = time.perf_counter() - t0
    rows = report["rows"]
    ok = (all(r["passed"] and math.isfinite(r["C"]) and r["configurations"] >= 100 for r in rows)
          and elapsed <= 300)
    drifts = ", ".join(f"{r['estimate']} {r['drift']:.3f}" for r in rows)
    verdict(4, ok, f"drift {drifts}; {elapsed:.0f}s")
    assert ok


def test_embedding(verdict):
    row = _embedding_row(RunConfig(n=2, M=M))
    spreads = ", ".join(f"(p={c['p']:g},m={c['m']:g}) {c['spread']:.2f}" for c in row["cases"])
    ok = row["passed"] and len(row["cases"]) == 3
    verdict(5, ok, f"spread {spreads}")
    assert ok


def test_bilinear_boundedness(verdict):
    row = _bilinear_row(RunConfig(n=2, M=M, pairs=50))
    consts = ", ".join(f"M={r['M']} {r['constant']:.3g}" for r in row["runs"])
    ok = row["passed"]
    verdict(6, ok, f"constant {consts}, spread {row['spread']:.2f}")
    assert ok


@pytest.fixture(scope="module")
def atom():
    return preset_field("single-atom", FrequencyLattice(2, M), 1e-3)


def test_well_posedness(verdict, atom):
    t0 = time.perf_counter()
    st = picard_solve(atom, SolverConfig())
    elapsed = time.perf_counter() - t0
    fine = picard_solve(atom, SolverConfig(samples_per_shell=16), with_residual=False)
    change = abs(fine.report.Hm - st.report.Hm) / st.report.Hm
    ok = (st.converged and st.iterations <= 6 and all(r < 0.5 for r in st.ratios)
          and st.residual < 1e-4 and st.divergence <= 1e-9 and change < 0.02 and elapsed <= 300)
    ratios = ", ".join(f"{r:.1e}" for r in st.ratios)
    verdict(7, ok, f"{st.iterations} iterations, ratios [{ratios}], residual {st.residual:.1e}, "
                   f"divergence {st.divergence:.1e}, mesh doubling {change:.1e}, {elapsed:.1f}s")
    assert ok


def test_scaling_invariance(verdict, atom):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = scaling_check(atom, 2, SolverConfig())
    ok = res.deviation <= 0.01 and res.besov_defect <= 1e-10
    verdict(8, ok, f"deviation {res.deviation:.1e}, Besov defect {res.besov_defect:.1e}")
    assert ok


def test_quadratic_smallness(verdict):
    lat = FrequencyLattice(2, M)
    cfg = SolverConfig()
    first = [picard_solve(preset_field("single-atom", lat, s), cfg, with_residual=False).increments[0]
             for s in (1e-3, 5e-4)]
    factor = first[0] / first[1]
    ok = factor >= 3
    verdict(9, ok, f"first increment drops by {factor:.2f}")
    assert ok
