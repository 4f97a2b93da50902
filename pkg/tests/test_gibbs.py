import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdiff.auxiliary import Contraction, HessianQuadratic, NoAux, make_effective
from qdiff.dynamics import Ball, Superlevel
from qdiff.errors import ConfigurationError
from qdiff.gibbs import GibbsSpec, density_grid, gibbs_mass, m_star, tv_distance
from qdiff.potentials import (catalog_make, constant, double_well, multi_well_cos, quadratic_bowl,
                              range_of)

DW = double_well(0.5)


def test_constant_is_uniform():
    g = density_grid(GibbsSpec(constant(3.0, 2), NoAux(), 0.0, 0.5), 32)
    np.testing.assert_allclose(g.density, 0.25, rtol=1e-14)
    assert g.Z == pytest.approx(4.0 * np.exp(-3.0 / 0.5))


def test_gamma_zero_reduces_to_plain_gibbs():
    a = density_grid(GibbsSpec(DW, Contraction(), 0.0, 0.4), 512)
    b = density_grid(GibbsSpec(DW, NoAux(), 0.0, 0.4), 512)
    np.testing.assert_array_equal(a.density, b.density)


def test_double_well_modes_balanced():
    g = density_grid(GibbsSpec(DW, NoAux(), 0.0, 0.4), 4096)
    left = g.probabilities[:2048].sum()
    assert left == pytest.approx(0.5, abs=1e-6)
    peaks = g.centers[np.argsort(g.density)[-2:]]
    np.testing.assert_allclose(np.sort(peaks), [-0.5, 0.5], atol=1e-3)


def test_m_star_values():
    assert m_star(DW, NoAux(), 0.0) == pytest.approx(0.5625)
    assert m_star(DW, Contraction(), 0.25) == pytest.approx(0.421875)
    hq = HessianQuadratic((0.1,))
    oracle = range_of(make_effective(DW, hq, 1.0).value, 1, 4097).M
    assert m_star(DW, hq, 1.0, 4097) == oracle


def test_gibbs_mass():
    g = density_grid(GibbsSpec(DW, NoAux(), 0.0, 0.1), 1024)
    assert gibbs_mass(g, Ball((0.0,), 5.0)) == pytest.approx(1.0)
    assert gibbs_mass(g, Superlevel(10.0)) == 0.0
    cold = density_grid(GibbsSpec(DW, NoAux(), 0.0, 0.05), 1024)
    s = Superlevel(0.05)
    assert 0 < gibbs_mass(cold, s) < gibbs_mass(g, s) < 0.5


def test_tv_distance_cases():
    h = np.full(8, 1 / 8)
    assert tv_distance(h, h) == 0.0
    a = np.r_[np.ones(4), np.zeros(4)] / 4
    assert tv_distance(a, a[::-1]) == 1.0
    g = density_grid(GibbsSpec(constant(0.0), NoAux(), 0.0, 1.0), 64)
    assert tv_distance(h, g) <= 1e-12
    with pytest.raises(ConfigurationError):
        tv_distance(np.full(7, 1 / 7), g)


@settings(max_examples=40, deadline=None)
@given(res=st.integers(1, 400), T=st.floats(0.05, 5.0))
def test_normalisation(res, T):
    g = density_grid(GibbsSpec(multi_well_cos(4, 0.25), NoAux(), 0.0, T), res)
    assert g.probabilities.sum() == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("name,params", [("double_well", {"a": 0.5}),
                                         ("tilted_double_well", {"a": 0.5, "b": 0.05}),
                                         ("multi_well_cos", {"k": 4, "depth": 0.25}),
                                         ("quadratic_bowl", {"center": 0.3})])
@pytest.mark.parametrize("T", [0.1, 0.4, 1.0])
def test_refinement_stability(name, params, T):
    p = catalog_make(name, params)
    z1 = density_grid(GibbsSpec(p, NoAux(), 0.0, T), 1024).log_z
    z2 = density_grid(GibbsSpec(p, NoAux(), 0.0, T), 2048).log_z
    assert abs(np.expm1(z2 - z1)) <= 1e-4


@settings(max_examples=30, deadline=None)
@given(T=st.floats(0.05, 3.0), res=st.integers(2, 300))
def test_even_potential_gives_even_density(T, res):
    d = density_grid(GibbsSpec(DW, NoAux(), 0.0, T), res).density
    np.testing.assert_allclose(d, d[::-1], rtol=1e-12, atol=0)


def test_tilt_converges_monotonically():
    base = density_grid(GibbsSpec(DW, NoAux(), 0.0, 0.4), 1024).probabilities
    gammas = [0.8, 0.4, 0.2, 0.1, 0.05, 0.0]
    d = [tv_distance(density_grid(GibbsSpec(DW, Contraction(), g, 0.4), 1024).probabilities, base)
         for g in gammas]
    assert all(a > b for a, b in zip(d, d[1:])) and d[-1] == 0.0


def test_two_dimensional_grid():
    g = density_grid(GibbsSpec(quadratic_bowl([0.2, -0.1]), NoAux(), 0.0, 0.2), 64)
    assert g.density.shape == (64, 64)
    assert g.coarsen(8).sum() == pytest.approx(1.0)
