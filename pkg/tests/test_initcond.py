import numpy as np
import pytest

from pdesuite import initcond as ic
from pdesuite.grid import Grid, SeededRng
from pdesuite.metrics import shell_index
from pdesuite.solvers.hyperbolic import ConservedState, to_primitive


def test_sinusoid_reproducible_and_periodic_band_limited():
    g = Grid.uniform(256)
    a = ic.sinusoidal_superposition(SeededRng(3, 1), g).values[:, 0]
    b = ic.sinusoidal_superposition(SeededRng(3, 1), g).values[:, 0]
    np.testing.assert_array_equal(a, b)
    no_post = ic.SinusoidSpec(abs_prob=0.0, window_prob=0.0)
    u = ic.sinusoidal_superposition(SeededRng(3, 2), g, no_post).values[:, 0]
    spec = np.abs(np.fft.rfft(u))
    assert np.all(spec[9:] < 1e-10 * spec.max())          # modes n <= 8 only
    assert abs(u.mean()) < 1e-12


def test_post_ops_occur_at_their_rates():
    g = Grid.uniform(64)
    spec = ic.SinusoidSpec(abs_prob=0.5, window_prob=0.5)
    n_abs = n_win = 0
    for i in range(200):
        u = ic.sinusoidal_superposition(SeededRng(0, i), g, spec).values[:, 0]
        n_abs += bool(np.all(u >= 0) or np.all(u <= 0))
        n_win += bool(u[0] == 0 and u[-1] == 0)
    assert 60 < n_abs < 140 and 60 < n_win < 140


def test_normalized_positive_ic_range():
    g = Grid.uniform(128)
    for i in range(20):
        u = ic.normalized_positive_ic(SeededRng(1, i), g).values
        assert u.min() >= 0 and u.max() == pytest.approx(1.0)


def test_grf_std_mean_and_spectrum_slope():
    g = Grid.uniform((64, 64))
    tau = -3.0
    shells = shell_index(g.shape)
    acc = np.zeros(shells.max() + 1)
    for i in range(30):
        f = ic.gaussian_random_field(SeededRng(2, i), g, ic.GrfSpec(tau, 2.0)).values[..., 0]
        assert f.mean() == pytest.approx(0.0, abs=1e-12) and f.std() == pytest.approx(2.0)
        p = np.abs(np.fft.fftn(f)) ** 2
        acc += np.bincount(shells.ravel(), p.ravel(), minlength=len(acc))
    counts = np.bincount(shells.ravel())
    k = np.arange(3, 30)
    slope = np.polyfit(np.log(k), np.log(acc[k] / counts[k]), 1)[0]
    assert slope == pytest.approx(tau, abs=0.25)
    # nothing above the Nyquist shell
    f = ic.gaussian_random_field(SeededRng(0), g).values[..., 0]
    assert np.all(np.abs(np.fft.fftn(f))[shells > 32] < 1e-9)


def test_helmholtz_projection_is_solenoidal_and_idempotent():
    g = Grid((0.0, 0.0), (1.0, 2.0), (32, 48))
    v = SeededRng(5).normal(size=g.shape + (2,))
    assert ic.spectral_divergence_ratio(v, g) > 0.1
    p = ic.helmholtz_project(v, g)
    assert ic.spectral_divergence_ratio(p, g) < 1e-25
    np.testing.assert_allclose(ic.helmholtz_project(p, g), p, atol=1e-12)


@pytest.mark.parametrize("shape", [(32, 32), (16, 16, 16)])
def test_turbulence_velocity(shape):
    g = Grid.uniform(shape)
    v = ic.turbulence_velocity(SeededRng(4), g, mach=0.5).values
    assert np.sqrt(np.mean(np.sum(v**2, axis=-1))) == pytest.approx(0.5)
    assert ic.spectral_divergence_ratio(v, g) < 1e-20


def test_shock_tube_and_sod():
    g = Grid.uniform(100)
    st = ic.shock_tube_ic(SeededRng(0), g, ic.ShockTubeSpec.sod())
    w = st.primitive()
    assert np.all(w[:50, 0] == 1.0) and np.all(w[50:, 0] == 0.125)
    np.testing.assert_allclose(w[:50, 2], 1.0)
    np.testing.assert_allclose(w[50:, 2], 0.1)
    for i in range(20):
        s = ic.shock_tube_ic(SeededRng(1, i), g)
        w = s.primitive()
        assert np.all(w[:, 0] > 0) and np.all(w[:, -1] > 0)
        assert len(np.unique(w[:, 0])) <= 2


def test_radial_dam_break():
    g = Grid.uniform((64, 64), -2.5, 2.5)
    h = ic.radial_dam_break_ic(SeededRng(0), g, radius=0.5).values[..., 0]
    x, y = g.mesh()
    r = np.hypot(x, y)
    assert np.all(h[r < 0.5] == 2.0) and np.all(h[r >= 0.5] == 1.0)
    for i in range(10):
        h = ic.radial_dam_break_ic(SeededRng(1, i), g).values[..., 0]
        area = (h == 2.0).sum() * g.cell_volume
        assert np.pi * 0.2**2 < area < np.pi * 0.8**2


def test_uniform_and_normal_ics():
    g = Grid.uniform(1000)
    u = ic.uniform_random_ic(SeededRng(0), g).values
    assert 0 <= u.min() and u.max() <= 0.2
    n = ic.normal_noise_ic(SeededRng(0), Grid.uniform((64, 64)), 2).values
    assert n.shape == (64, 64, 2) and abs(n.std() - 1.0) < 0.05


@pytest.mark.parametrize("n", [(128,), (32, 32)])
def test_random_field_cns_ic(n):
    g = Grid.uniform(n)
    st = ic.random_field_cns_ic(SeededRng(9), g, mach=0.1)
    assert isinstance(st, ConservedState)
    w = to_primitive(st.values)
    assert np.max(np.abs(w[..., 0] - 1.0)) == pytest.approx(0.3)
    assert np.max(np.abs(w[..., -1] * ic.GAMMA - 1.0)) == pytest.approx(0.3)
    vel = w[..., 1:-1]
    assert np.sqrt(np.mean(np.sum(vel**2, axis=-1))) == pytest.approx(0.1)


def test_darcy_coefficient_two_levels():
    a = ic.darcy_coefficient(SeededRng(0), Grid.uniform((64, 64))).values
    assert set(np.unique(a)) == {0.1, 1.0}
    assert 0.45 < np.mean(a == 1.0) < 0.55


def test_dimension_guards():
    with pytest.raises(ValueError):
        ic.sinusoidal_superposition(SeededRng(0), Grid.uniform((8, 8)))
    with pytest.raises(ValueError):
        ic.turbulence_velocity(SeededRng(0), Grid.uniform(8), 1.0)
    with pytest.raises(ValueError):
        ic.radial_dam_break_ic(SeededRng(0), Grid.uniform(8))
