import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdiff.auxiliary import (Contraction, HessianQuadratic, Homotopy, Kinetic1D, KineticND, NoAux,
                             aux_grad, aux_grad_fd, aux_range, aux_value, contact_test,
                             critical_points_1d, eval_aux, make_aux, make_effective, sign_test,
                             validate_aux)
from qdiff.errors import ConfigurationError
from qdiff.potentials import double_well, multi_well_cos, quadratic_bowl, separable_nd

DW = double_well(0.5)


def test_hessian_quadratic_at_local_max():
    v, _ = eval_aux(HessianQuadratic((0.1,)), DW, [0.0])
    assert v == pytest.approx(0.01)


def test_kinetic_vanishes_at_inflection():
    v, _ = eval_aux(Kinetic1D(0.1), DW, [np.sqrt(1 / 12)])
    assert abs(v) < 1e-14


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-1.0, 1.0))
def test_contraction_is_identity(x):
    pt = np.array([[x]])
    assert aux_value(Contraction(), DW, pt)[0] == DW.value(pt)[0]


def test_make_effective_cases():
    x = np.linspace(-1, 1, 101)[:, None]
    assert make_effective(DW, Contraction(), 0.0) is DW
    np.testing.assert_allclose(make_effective(DW, Contraction(), 0.25).value(x), 0.75 * DW.value(x))
    v0 = quadratic_bowl(0.0)
    np.testing.assert_allclose(make_effective(DW, Homotopy(v0), 1.0).value(x), v0.value(x),
                               atol=1e-15)


def test_aux_ranges():
    assert aux_range(NoAux(), DW).M == 0.0
    assert aux_range(Contraction(), DW, 4097).M == pytest.approx(0.5625)
    # -eps^2 (12x^2 - 1) runs from 0.01 at x=0 down to -0.11 at the faces
    assert aux_range(HessianQuadratic((0.1,)), DW, 4097).M == pytest.approx(0.12)


def test_validation():
    with pytest.raises(ConfigurationError):
        validate_aux(Kinetic1D(0.1), quadratic_bowl(0.0, n=2))
    with pytest.raises(ConfigurationError):
        validate_aux(HessianQuadratic((0.1, 0.2, 0.3)), quadratic_bowl(0.0, n=2))
    with pytest.raises(ConfigurationError):
        validate_aux(Homotopy(DW), DW)  # two minimizers
    with pytest.raises(ConfigurationError):
        make_aux("bogus")


@pytest.mark.parametrize("aux", [HessianQuadratic((0.1,)), Kinetic1D(0.1), KineticND((0.1,)),
                                 Homotopy(), Contraction()])
def test_fd_gradient_matches_analytic(aux):
    x = np.linspace(-0.99, 0.99, 41)[:, None]
    np.testing.assert_allclose(aux_grad(aux, DW, x), aux_grad_fd(aux, DW, x), atol=1e-4)


def test_fd_gradient_nd():
    p = separable_nd([{"name": "double_well", "params": {"a": 0.5}},
                      {"name": "multi_well_cos", "params": {"k": 2, "depth": 0.25}}])
    x = np.random.default_rng(1).uniform(-0.9, 0.9, size=(20, 2))
    for aux in (HessianQuadratic(None), KineticND(None)):
        np.testing.assert_allclose(aux_grad(aux, p, x), aux_grad_fd(aux, p, x), atol=1e-4)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-1.0, 1.0))
def test_gamma_zero_bit_identical(x):
    pt = np.array([[x]])
    W = make_effective(DW, HessianQuadratic((0.1,)), 0.0)
    assert W.value(pt)[0] == DW.value(pt)[0]
    assert W.grad(pt)[0, 0] == DW.grad(pt)[0, 0]


def test_critical_points():
    mins, maxs = critical_points_1d(DW)
    np.testing.assert_allclose(mins, [-0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(maxs, [0.0], atol=1e-12)


@pytest.mark.parametrize("p", [DW, multi_well_cos(4, 0.25)])
def test_sign_and_contact(p):
    s = sign_test(p, 0.1, 4097)
    assert s["violations"] == 0 and s["minima"] and s["maxima"]
    c = contact_test(p, 0.1, 1.0, 4097)
    assert c["violations"] == 0 and c["points"] >= 1
