import numpy as np
import pytest

from pdesuite.grid import Field, Grid, SeededRng, TimeAxis
from pdesuite.initcond import (GAMMA, ShockTubeSpec, radial_dam_break_ic, random_field_cns_ic,
                               shock_tube_ic)
from pdesuite.solvers import hyperbolic as hy

import riemann_exact


def test_primitive_conserved_roundtrip():
    w = np.abs(SeededRng(0).normal(size=(10, 5))) + 0.1
    w[:, 1:-1] -= 0.5
    np.testing.assert_allclose(hy.to_primitive(hy.to_conserved(w)), w, rtol=1e-13)


@pytest.mark.parametrize("axis", [0, 1, 2])
def test_hllc_consistency(axis):
    w = np.array([[0.7, 0.3, -0.2, 0.1, 0.9]])
    np.testing.assert_allclose(hy.hllc_flux(w, w, axis=axis), hy.euler_flux(w, axis), rtol=1e-13)


def test_hllc_resolves_isolated_contact_exactly():
    wl = np.array([[1.0, 0.0, 1.0]])
    wr = np.array([[0.2, 0.0, 1.0]])
    np.testing.assert_allclose(hy.hllc_flux(wl, wr), [[0.0, 1.0, 0.0]], atol=1e-14)


def test_hllc_rejects_nonpositive_states():
    with pytest.raises(hy.PositivityError):
        hy.hllc_flux(np.array([[1.0, 0.0, -1.0]]), np.array([[1.0, 0.0, 1.0]]))


def test_uniform_flow_is_preserved():
    g = Grid.uniform((16, 16))
    w = np.broadcast_to([1.3, 0.4, -0.2, 0.8], g.shape + (4,))
    q = hy.to_conserved(np.array(w))
    out = hy.cns_step(q, 1e-2, g, hy.CnsParams(eta=0.0, zeta=0.0))
    np.testing.assert_allclose(out, q, rtol=1e-14)


def test_sod_against_exact_solution():
    g = Grid.uniform(256)
    st = shock_tube_ic(SeededRng(0), g, ShockTubeSpec.sod())
    tr = hy.solve_cns(st, hy.CnsParams(eta=0.0, zeta=0.0, bc="outgoing"), TimeAxis(0, 0.2, 2))
    x = g.centers(0)
    exact = riemann_exact.sample((1.0, 0.0, 1.0), (0.125, 0.0, 0.1), GAMMA, (x - 0.5) / 0.2)
    l1 = np.mean(np.abs(tr.values[-1, :, 0] - exact[:, 0]))
    assert l1 < 0.02
    assert tr.channel_names == ("density", "Vx", "pressure")


def test_periodic_cns_conserves_totals():
    g = Grid.uniform((32, 32))
    st = random_field_cns_ic(SeededRng(2), g, mach=0.5)
    q = np.array(st.values)
    p = hy.CnsParams(eta=1e-3, zeta=1e-3)
    for _ in range(30):
        q = hy.cns_step(q, hy.cns_dt(q, g, p), g, p)
    totals = q.sum(axis=(0, 1)) * g.cell_volume
    np.testing.assert_allclose(totals, st.totals(), rtol=0, atol=1e-12)


def test_viscosity_dissipates_kinetic_energy():
    g = Grid.uniform((32, 32))
    st = random_field_cns_ic(SeededRng(5), g, mach=0.1)
    ke = []
    for eta in (0.0, 0.05):
        tr = hy.solve_cns(st, hy.CnsParams(eta=eta, zeta=eta), TimeAxis(0, 0.1, 2))
        w = tr.values[-1]
        ke.append(np.sum(0.5 * w[..., 0] * np.sum(w[..., 1:-1] ** 2, axis=-1)))
    assert ke[1] < 0.9 * ke[0]


def test_conserved_state_validation():
    g = Grid.uniform(8)
    with pytest.raises(ValueError):
        hy.ConservedState(g, np.ones((8, 4)))
    bad = hy.to_conserved(np.tile([1.0, 0.0, 1.0], (8, 1)))
    bad[3, 0] = -1.0
    with pytest.raises(hy.PositivityError):
        hy.ConservedState(g, bad)
    with pytest.raises(ValueError):
        hy.CnsParams(bc="reflective")


def test_swe_lake_at_rest():
    g = Grid.uniform((16, 16), -2.5, 2.5)
    st = hy.SweState.at_rest(Field(g, np.full(g.shape, 1.5)))
    tr = hy.solve_swe(st, TimeAxis(0, 0.5, 3), store_all=True)
    np.testing.assert_allclose(tr.values[-1], st.values, atol=1e-14)


def test_swe_dam_break_conserves_mass_and_symmetry():
    g = Grid.uniform((48, 48), -2.5, 2.5)
    st = hy.SweState.at_rest(radial_dam_break_ic(SeededRng(0), g, radius=0.5))
    tr = hy.solve_swe(st, TimeAxis(0, 1.0, 3), store_all=True)
    h = tr.values[..., 0]
    np.testing.assert_allclose(h.sum(axis=(1, 2)), h[0].sum(), rtol=1e-13)
    np.testing.assert_allclose(h[-1], h[-1].T, atol=1e-12)
    np.testing.assert_allclose(h[-1], h[-1][::-1], atol=1e-12)
    assert h[-1].max() < 2.0 and h[-1].min() > 0


def test_swe_reflective_walls_keep_mass_when_wave_hits_wall():
    g = Grid.uniform((24, 24), -2.5, 2.5)
    h = np.where(g.mesh()[0] < -1.5, 2.0, 1.0)
    st = hy.SweState.at_rest(Field(g, h))
    tr = hy.solve_swe(st, TimeAxis(0, 4.0, 2))
    np.testing.assert_allclose(tr.values[-1].sum(), h.sum(), rtol=1e-13)


def test_swe_state_validation():
    g = Grid.uniform((4, 4))
    with pytest.raises(hy.PositivityError):
        hy.SweState(g, np.zeros((4, 4, 3)))
    with pytest.raises(ValueError):
        hy.SweState(Grid.uniform(4), np.ones((4, 3)))
