import math

import numpy as np
import pytest

from meyer_ns.heatflow import make_heat_trajectory, random_field
from meyer_ns.paraproduct import (CUT_TERMS, TERM_NAMES, bilinear_B, bilinear_sub, bilinear_terms,
                                  distinct_indices, family_values, level_project,
                                  low_frequency_defect, operator_norm_ensemble,
                                  paraproduct_decompose, scaling_coupling, verify_operator_norm)
from meyer_ns.spectral import FrequencyLattice, SpectralField
from meyer_ns.wavelets import DEFAULT_WINDOW, atom_spectrum, detail_eps


def _atom(lat, eps, j, k):
    return atom_spectrum(DEFAULT_WINDOW, eps, j, k, lat).spectrum


def _traj(f, sps=4):
    lat = f.lattice
    return make_heat_trajectory(f, (0, lat.max_level), sps, 2, include_zero=True)


# ------------------------------------------------------------- projections ---

def test_projections_telescope(lat64, rng):
    f = random_field(lat64, (0, lat64.data_level), rng)
    for j in range(lat64.max_level):
        lhs = level_project(f, j + 1, "P")
        rhs = level_project(f, j, "P") + level_project(f, j, "Q")
        assert (lhs - rhs).norm() <= 1e-12 * f.norm()
    q = sum((level_project(f, 2, e) for e in detail_eps(2)), SpectralField.zeros(lat64))
    assert (q - level_project(f, 2, "Q")).norm() <= 1e-12 * f.norm()


def test_detail_projection_kills_other_levels(lat64):
    a = _atom(lat64, (1, 0), 3, (2, 5))
    assert (level_project(a, 3, "Q") - a).norm() <= 1e-12
    for j in (1, 2, 4):
        assert level_project(a, j, "Q").norm() <= 1e-12


def test_scaling_projection_support(lat64, rng):
    f = random_field(lat64, (0, lat64.data_level), rng)
    for j in range(lat64.max_level):
        g = level_project(f, j, "P")
        m = np.max(np.abs(lat64.modes), axis=0)
        outside = m * 2 * np.pi > 4 * np.pi / 3 * 2**j + 1e-9
        assert np.all(np.abs(g.values[outside]) == 0)


def test_projection_rejects_bad_kind(lat64):
    with pytest.raises(ValueError):
        level_project(SpectralField.zeros(lat64), 1, (0, 0))


# ----------------------------------------------------------- decomposition ---

def test_decomposition_of_zero(lat64, rng):
    v = random_field(lat64, (0, lat64.data_level), rng)
    terms = paraproduct_decompose(SpectralField.zeros(lat64), v, 0.01)
    assert len(terms.terms) == 14 and tuple(terms.terms) == TERM_NAMES
    assert all(np.all(f.values == 0) for f in terms.terms.values())


@pytest.mark.parametrize("t", [1.0, 0.2, 0.02, 2e-3])
def test_decomposition_adds_up(lat64, rng, t):
    for _ in range(5):
        u = random_field(lat64, (0, lat64.data_level), rng)
        v = random_field(lat64, (0, lat64.data_level), rng)
        assert paraproduct_decompose(u, v, t).residual() < 1e-10


def test_same_level_atoms_only_feed_diagonal_term(lat64):
    u = _atom(lat64, (1, 0), 3, (1, 4))
    v = _atom(lat64, (1, 1), 3, (6, 2))
    terms = paraproduct_decompose(u, v, 1.0)
    ref = terms.product.norm()
    assert ref > 0
    for name, f in terms.terms.items():
        if name == "Q[j]u*Q[j]v":
            assert (f - terms.product).norm() <= 1e-12 * ref
        else:
            assert f.norm() <= 1e-12 * ref


def test_cut_terms_for_scaling_inputs(lat64, rng):
    """Inputs living in P_{j_t} only feed the scaling-scaling cut term."""
    u = level_project(random_field(lat64, (0, lat64.data_level), rng), 1, "P")
    v = level_project(random_field(lat64, (0, lat64.data_level), rng), 1, "P")
    terms = paraproduct_decompose(u, v, 0.25)  # j_t = 1
    assert terms.j_t == 1
    ref = terms.product.norm()
    assert (terms.terms[CUT_TERMS[-1]] - terms.product).norm() <= 1e-12 * ref


def test_terms_csv(lat64, rng, tmp_path):
    u = random_field(lat64, (0, 2), rng)
    terms = paraproduct_decompose(u, u, 0.05)
    terms.to_csv(tmp_path / "terms.csv")
    lines = (tmp_path / "terms.csv").read_text().splitlines()
    assert lines[0] == "term,energy" and len(lines) == 15


# ------------------------------------------------------------- Duhamel B ---

@pytest.fixture(scope="module")
def pair32():
    lat = FrequencyLattice(2, 32)
    rng = np.random.default_rng(7)
    u = random_field(lat, (0, lat.data_level), rng, besov=1.0)
    v = random_field(lat, (0, lat.data_level), rng, besov=1.0)
    return lat, u, v


def test_B_of_zero(pair32):
    lat, u, v = pair32
    B = bilinear_B(_traj(SpectralField.zeros(lat)), _traj(v), 1.0)
    assert np.all(B.values == 0)


def test_B_is_bilinear(pair32):
    lat, u, v = pair32
    tu, tv = _traj(u), _traj(v)
    b = bilinear_B(tu, tv, 0.25, (1,), check=False)
    b2 = bilinear_B(_traj(u * 2.0), tv, 0.25, (1,), check=False)
    b3 = bilinear_B(tu, _traj(v * -3.0), 0.25, (1,), check=False)
    assert (b2 - b * 2.0).norm() <= 1e-12 * b.norm()
    assert (b3 - b * -3.0).norm() <= 1e-12 * b.norm()


def test_B_requires_mesh_node(pair32):
    lat, u, v = pair32
    with pytest.raises(ValueError):
        bilinear_B(_traj(u), _traj(v), 0.3)
    with pytest.raises(ValueError):
        bilinear_B(_traj(u, 4), _traj(v, 8), 0.25)


def test_B_step_halving_order(pair32):
    lat, u, v = pair32
    vals = [bilinear_B(_traj(u, s), _traj(v, s), 0.25, (0, 1, 1), check=False) for s in (2, 4, 8)]
    d1 = (vals[0] - vals[1]).norm()
    d2 = (vals[1] - vals[2]).norm()
    assert math.log2(d1 / d2) >= 1.8


def test_terms_add_up_to_B(pair32):
    lat, u, v = pair32
    tu, tv = _traj(u), _traj(v)
    B = bilinear_B(tu, tv, 0.25, (0, 0, 1), check=False)
    terms = bilinear_terms(tu, tv, 0.25, (0, 0, 1))
    total = sum(terms.values(), SpectralField.zeros(lat))
    assert (total - B).norm() <= 1e-10 * B.norm()


def test_families_match_named_terms(pair32):
    lat, u, v = pair32
    tu, tv = _traj(u), _traj(v)
    idx = (0, 1, 1)
    terms = bilinear_terms(tu, tv, 0.25, idx)
    eps_sum = sum((bilinear_sub(tu, tv, 0.25, "eps", e, idx, check=False) for e in detail_eps(2)),
                  SpectralField.zeros(lat))
    b1 = bilinear_sub(tu, tv, 0.25, "B1", index=idx, check=False)
    b2 = bilinear_sub(tu, tv, 0.25, "B2", index=idx, check=False)
    scale = max(f.norm() for f in terms.values())
    assert (eps_sum - terms["P[j-2]u*Q[j]v"]).norm() <= 1e-10 * scale
    assert (b1 - terms["Q[j]u*Q[j]v"]).norm() <= 1e-10 * scale
    assert (b2 - terms["P[jt]u*P[jt]v"]).norm() <= 1e-10 * scale


def test_scaling_family_vanishes_on_details(lat64):
    u = _atom(lat64, (0, 1), 3, (3, 3)).values
    v = _atom(lat64, (1, 0), 4, (0, 9)).values
    for j_s in (0, 1, 2, 3):
        assert np.max(np.abs(family_values(u, v, lat64, j_s, "B2"))) <= 1e-14


def test_family_validation(lat64):
    z = np.zeros(lat64.shape, complex)
    with pytest.raises(ValueError):
        family_values(z, z, lat64, 0, "eps")
    with pytest.raises(ValueError):
        family_values(z, z, lat64, 0, "B3")


# ------------------------------------------------------ exact-zero facts ---

@pytest.mark.parametrize("eps", [(1, 0), (0, 1), (1, 1)])
@pytest.mark.parametrize("t", [1.0, 0.25, 0.0625])
def test_low_frequency_defect_is_zero(pair32, eps, t):
    lat, u, v = pair32
    assert low_frequency_defect(_traj(u), _traj(v), t, eps, (1, 0, 0)) <= 1e-10


def test_scaling_coupling_zero_below_gap(lat64):
    for j1 in (2, 3, 4):
        for j_s in range(0, j1 - 1):
            k = (0, min(1, 2**j_s - 1))
            val = scaling_coupling(lat64, 0.01, 0.002, j_s, k, (0, 0), (1, 0), j1, (1, 2))
            assert abs(val) <= 1e-14


def test_scaling_coupling_needs_order():
    with pytest.raises(ValueError):
        scaling_coupling(FrequencyLattice(2, 32), 0.1, 0.1, 0, (0, 0), (0, 0), (1, 0), 2, (0, 0))


# ---------------------------------------------------------- operator norm ---

def test_distinct_indices_2d():
    assert distinct_indices(2) == [(0,), (1,), (0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)]


def test_operator_norm_skips_zero_pairs():
    lat = FrequencyLattice(2, 32)
    z = _traj(SpectralField.zeros(lat))
    res = verify_operator_norm([(z, z)])
    assert res.skipped == 1 and res.constant == 0.0 and res.ratios == []


def test_operator_norm_is_finite():
    pairs = operator_norm_ensemble(32, count=2, seed=3)
    res = verify_operator_norm(pairs)
    assert res.skipped == 0 and len(res.ratios) == 2
    assert 0 < res.constant < math.inf
    only = verify_operator_norm(operator_norm_ensemble(32, count=2, seed=3, scaling_only=True))
    assert 0 < only.constant < math.inf
    assert res.to_dict()["constant"] == res.constant
