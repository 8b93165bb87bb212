import math
import warnings

import numpy as np
import pytest

from meyer_ns.norms import field_besov_norm
from meyer_ns.solver import (PRESETS, SmallnessWarning, SolverConfig, _trajectory, bilinear_direct,
                             bilinear_values, full_bilinear, heat_values, picard_solve,
                             preset_field, rescale_field, residual, scaling_check)
from meyer_ns.spectral import FrequencyLattice, VectorField, divergence_defect

CFG = SolverConfig(samples_per_shell=4)


@pytest.fixture(scope="module")
def lat():
    return FrequencyLattice(2, 32)


@pytest.fixture(scope="module")
def atom(lat):
    return preset_field("single-atom", lat, 1e-3)


@pytest.fixture(scope="module")
def solved(atom):
    return picard_solve(atom, CFG)


def _rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_config_validation():
    for bad in (dict(m=0.5), dict(max_iter=2), dict(samples_per_shell=3), dict(tol=0.0),
                dict(shell_lo=3, shell_hi=1), dict(p=math.inf)):
        with pytest.raises(ValueError):
            SolverConfig(**bad)
    assert SolverConfig(m=0.5, allow_small_m=True).m == 0.5


@pytest.mark.parametrize("name", PRESETS)
def test_presets_are_divergence_free_with_given_norm(lat, name):
    a = preset_field(name, lat, 2e-3, seed=5)
    assert divergence_defect(a) <= 1e-12
    assert field_besov_norm(a, 4.0) == pytest.approx(2e-3, rel=1e-10)


def test_zero_data_converges_immediately(lat):
    a = preset_field("single-atom", lat, 1.0) * 0.0
    st = picard_solve(VectorField(a.components, True), CFG)
    assert st.converged and st.iterations == 0 and st.increments == []
    assert np.all(st.values == 0)


def test_single_atom_contracts(solved):
    assert solved.converged
    assert solved.iterations <= 6
    assert all(r < 0.5 for r in solved.ratios)
    assert solved.residual <= 1e-4
    assert solved.divergence <= 1e-9


def test_state_serializes(solved):
    d = solved.to_dict()
    assert d["status"] == "converged" and d["lattice"] == {"n": 2, "M": 32}
    assert solved.to_json() == solved.to_json()


def test_residual_of_heat_flow_without_B(lat, atom):
    times = CFG.mesh(lat).times
    traj = _trajectory(lat, times, heat_values(atom, times))
    assert residual(traj, atom, include_bilinear=False) <= 1e-14
    assert residual(traj, atom) > 0


def test_residual_detects_perturbed_data(solved, atom):
    base = residual(solved.trajectory(), atom)
    bumped = VectorField(tuple(c * 1.01 for c in atom.components), True)
    assert residual(solved.trajectory(), bumped) > 100 * max(base, 1e-14)


def test_bilinear_routes_agree(lat, solved):
    U = solved.values
    a = bilinear_values(U, U, lat, solved.times)
    b = bilinear_direct(U, U, lat, solved.times)
    assert _rel(a[1:], b[1:]) <= 1e-10


def test_full_bilinear_matches_sweep(lat, solved):
    traj = solved.trajectory()
    t = float(solved.times[-1])
    B = full_bilinear(traj, traj, t)
    ref = bilinear_values(solved.values, solved.values, lat, solved.times)[-1]
    assert _rel(B.stack(), ref) <= 1e-10
    with pytest.raises(ValueError):
        full_bilinear(traj, traj, 0.3)


def test_initial_guess_zero_reaches_same_solution(atom, solved):
    other = picard_solve(atom, CFG, initial_guess=np.zeros_like(solved.values))
    assert other.converged
    assert _rel(other.values[1:], solved.values[1:]) <= 1e-6


def test_initial_guess_shape_checked(atom):
    with pytest.raises(ValueError):
        picard_solve(atom, CFG, initial_guess=np.zeros((2, 2)))


def test_rejects_compressible_data(lat, atom):
    bad = VectorField((atom.components[0], atom.components[0]))
    with pytest.raises(ValueError):
        picard_solve(bad, CFG)


def test_smaller_data_contracts_faster(lat):
    big = picard_solve(preset_field("random", lat, 2e-3, seed=1), CFG, with_residual=False)
    small = picard_solve(preset_field("random", lat, 1e-3, seed=1), CFG, with_residual=False)
    assert small.increments[0] <= big.increments[0] / 3


def test_large_data_warns_and_reports(lat):
    a = preset_field("random", lat, 10.0, seed=2)
    with pytest.warns(SmallnessWarning):
        st = picard_solve(a, SolverConfig(samples_per_shell=4, max_iter=4), with_residual=False)
    assert not st.converged
    assert st.status in ("cap", "non-contraction")


def test_rescale_field_doubles_frequencies(lat, atom):
    b = rescale_field(atom, 2)
    assert divergence_defect(b) <= 1e-12
    ratio = field_besov_norm(b, 4.0) / field_besov_norm(atom, 4.0)
    assert ratio == pytest.approx(2 ** (2 / 4), rel=1e-10)


def test_scaling_law(atom):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = scaling_check(atom, 2, SolverConfig(samples_per_shell=4, shell_hi=2))
    assert res.deviation <= 0.01
    assert res.besov_defect <= 1e-10
    with pytest.raises(ValueError):
        scaling_check(atom, 3)


def test_mesh_doubling(lat, atom, solved):
    fine = picard_solve(atom, SolverConfig(samples_per_shell=8), with_residual=False)
    common = np.isin(fine.times, solved.times)
    assert common.sum() == len(solved.times)
    assert _rel(fine.values[common][1:], solved.values[1:]) < 0.02
