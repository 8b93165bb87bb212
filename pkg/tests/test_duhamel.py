import numpy as np
import pytest
from hypothesis import given, strategies as st

from meyer_ns.duhamel import TimeMesh, duhamel_sweep, phi_functions


@given(st.lists(st.floats(0, 50), min_size=1, max_size=20))
def test_phi_functions_match_closed_form(zs):
    z = np.array(zs)
    g1, g2 = phi_functions(z)
    big = z > 1e-2
    assert np.allclose(g1[big], (1 - np.exp(-z[big])) / z[big], rtol=1e-12, atol=0)
    assert np.allclose(g2[big], (1 - np.exp(-z[big]) * (1 + z[big])) / z[big] ** 2, rtol=1e-9, atol=0)
    assert np.allclose(g1[z == 0], 1.0) and np.allclose(g2[z == 0], 0.5)


def test_sweep_is_exact_for_linear_integrands():
    lam = np.array([0.0, 3.0, 40.0])
    times = np.array([0.0, 0.01, 0.05, 0.2, 0.21, 1.0])
    a, b = 0.7, -2.0
    out = duhamel_sweep(times, lam, lambda i: a + b * times[i] + 0 * lam)
    for t, I in zip(times, out):
        # int_0^t e^{-(t-s) L} (a + b s) ds in closed form
        L = lam
        with np.errstate(divide="ignore", invalid="ignore"):
            e = np.exp(-t * L)
            exact = np.where(L == 0, a * t + b * t * t / 2,
                             a * (1 - e) / L + b * (t / L - (1 - e) / L**2))
        assert np.allclose(I, exact, rtol=1e-12, atol=1e-15)


def test_sweep_requires_zero_start():
    with pytest.raises(ValueError):
        duhamel_sweep(np.array([0.1, 0.2]), np.ones(1), lambda i: np.ones(1))


def test_mesh_layout():
    mesh = TimeMesh(2, 3, 4, include_zero=False)
    t = mesh.times
    assert len(t) == 8 and np.all(np.diff(t) > 0)
    assert np.all((t[:4] >= 4.0**-3) & (t[:4] < 4.0**-2))
    assert np.all((t[4:] >= 4.0**-2) & (t[4:] < 4.0**-1))
    full = TimeMesh(0, 2, 8, extra=2)
    assert full.times[0] == 0.0 and len(full.times) == 1 + 5 * 8
    assert full.refined().samples_per_shell == 16
    assert full.index_of(full.times[7]) == 7
    with pytest.raises(KeyError):
        full.index_of(0.123456)
    assert list(full.interval_levels()[1:9]) == [4] * 8
