import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdiff.auxiliary import Contraction, NoAux
from qdiff.dynamics import (Ball, LinkFunctions, NetworkState, SimConfig, Superlevel, Trajectory,
                            default_u_max, diffusion_coeffs, drift, em_step, histogram, link_eval,
                            run_ensemble, simulate, simulate_batch, trajectory_streams)
from qdiff.errors import ConfigurationError, DomainError, StepError
from qdiff.gibbs import GibbsSpec, density_grid, tv_distance
from qdiff.potentials import Potential, double_well, quadratic_bowl
from qdiff.schedules import ConstantGamma, ConstantT, Logarithmic, PowerDecay, ZeroGamma

DW = double_well(0.5)


def test_link_values():
    x, u, f = link_eval(LinkFunctions(1.0), u=0.0)
    assert (x, u, f) == (0.0, 0.0, 1.0)
    assert LinkFunctions(2.0).f(0.5) == pytest.approx(0.375)
    assert link_eval(LinkFunctions(1.0), u=1.0)[0] == pytest.approx(0.761594, abs=1e-6)
    with pytest.raises(DomainError):
        LinkFunctions().g_inv(1.0)
    with pytest.raises(ConfigurationError):
        LinkFunctions(0.0)


@settings(max_examples=60, deadline=None)
@given(u=st.floats(-10, 10), w=st.floats(0.2, 5))
def test_link_round_trip(u, w):
    lf = LinkFunctions(w)
    x = lf.g(u)
    if abs(u / w) < 8:
        assert lf.g_inv(x) == pytest.approx(u, rel=1e-6, abs=1e-6)
    # f(x) equals dg/du
    h = 1e-6
    assert lf.f(x) == pytest.approx((lf.g(u + h) - lf.g(u - h)) / (2 * h), abs=1e-6)


def test_drift_values():
    assert drift(np.array([0.5]), DW, NoAux(), 0.0)[0] == 0.0
    assert drift(np.array([0.8]), DW, NoAux(), 0.0)[0] == pytest.approx(-1.248)
    assert drift(np.array([0.8]), DW, Contraction(), 0.25)[0] == pytest.approx(-0.936)


def test_diffusion_values():
    lf = LinkFunctions(1.0)
    assert diffusion_coeffs(np.array([0.0]), 0.5, lf)[0] == pytest.approx(1.0)
    assert diffusion_coeffs(np.array([0.3]), 0.0, lf)[0] == 0.0
    assert diffusion_coeffs(np.array([0.8]), 0.5, lf)[0] == pytest.approx(1.0 / 0.6)


def test_em_step_fixed_point_and_drift():
    lf = LinkFunctions()
    rng = np.random.default_rng(0)
    s = NetworkState.from_x([0.5], lf)
    out = em_step(s, 1e-3, 0.0, 0.0, rng, DW)
    assert out.x[0] == s.x[0] and out.t == pytest.approx(1e-3)
    s = NetworkState.from_x([0.8], lf)
    out = em_step(s, 1e-3, 0.0, 0.0, rng, DW)
    assert out.u[0] - s.u[0] == pytest.approx(-1.248e-3, rel=1e-12)
    for mode in ("u_space", "x_space"):
        out = em_step(s, 1e-3, 0.4, 0.0, rng, DW, mode=mode)
        assert abs(out.x[0]) < 1


def test_determinism_and_csv(tmp_path):
    cfg = SimConfig(dt=1e-3, steps=1000, seed=42)
    a = simulate(cfg, DW, th=ConstantT(0.4))
    b = simulate(cfg, DW, th=ConstantT(0.4))
    assert np.array_equal(a.x, b.x)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    back = Trajectory.from_csv(tmp_path / "a.csv")
    np.testing.assert_array_equal(back.x, a.x)
    c = simulate(SimConfig(dt=1e-3, steps=1000, seed=43), DW, th=ConstantT(0.4))
    assert not np.array_equal(a.x, c.x)


def test_zero_steps():
    tr = simulate(SimConfig(steps=0, x0=[0.2]), DW)
    assert len(tr) == 1 and tr.x[0, 0] == 0.2


@pytest.mark.parametrize("mode", ["u_space", "x_space"])
def test_hopfield_descent(mode):
    cfg = SimConfig(dt=1e-3, steps=10_000, x0=[0.2], mode=mode)
    tr = simulate(cfg, DW)
    assert np.all(np.diff(tr.V) <= 1e-15)
    assert tr.x[-1, 0] == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("mode", ["u_space", "x_space"])
def test_interior_preserved(mode):
    p = Potential(1, lambda x: 3 * x[..., 0], lambda x: np.full_like(x, 3.0),
                  lambda x: np.zeros(x.shape + (1,)))
    tr = simulate(SimConfig(dt=1e-2, steps=5000, mode=mode, seed=1), p, th=ConstantT(1.0))
    assert np.all(np.abs(tr.x) < 1)


def test_step_error_keeps_partial_record():
    def grad(x):
        return np.where(x < 0.6, np.nan, 1.0)

    p = Potential(1, lambda x: x[..., 0], grad, lambda x: np.zeros(x.shape + (1,)))
    with pytest.raises(StepError) as err:
        simulate(SimConfig(steps=10, x0=[0.59]), p, th=ConstantT(0.0))
    assert err.value.trajectory is not None


def test_batch_drops_failed_members():
    def grad(x):
        return np.where(x > 0, np.nan, -1.0)

    p = Potential(1, lambda x: -x[..., 0], grad, lambda x: np.zeros(x.shape + (1,)))
    trs = simulate_batch(SimConfig(steps=10, seed=3), p, NoAux(), ConstantT(0.0), ZeroGamma(), 8)
    assert 0 < len(trs) < 8


def test_streams_are_split():
    a = trajectory_streams(7, 3)
    b = trajectory_streams(7, 3)
    assert [r.standard_normal() for r in a] == [r.standard_normal() for r in b]
    assert len({r.standard_normal() for r in trajectory_streams(7, 3)}) == 3


def test_default_clamp():
    assert default_u_max(1.0, 0.0, 1e-3) == 15.0
    um = default_u_max(1.0, 0.4, 1e-3)
    assert um < 15.0
    assert np.sqrt(2 * 0.4 * 1e-3) * np.cosh(um) == pytest.approx(1.0)


def test_ensemble_trivial_targets():
    cfg = SimConfig(dt=1e-3, steps=200, seed=5)
    whole = Ball((0.0,), 10.0)
    empty = Superlevel(10.0)
    r = run_ensemble(cfg, DW, NoAux(), ConstantT(0.4), ZeroGamma(), 20, whole, [0.1, 0.2])
    assert r.hit_fractions == [1.0, 1.0]
    assert r.fractions(DW, empty) == [0.0, 0.0]
    with pytest.raises(ConfigurationError):
        run_ensemble(cfg, DW, NoAux(), ConstantT(0.4), ZeroGamma(), 4, whole, [1.0])


def test_ensemble_matches_single_stream_rule():
    cfg = SimConfig(dt=1e-3, steps=300, seed=9)
    trs = simulate_batch(cfg, DW, Contraction(), Logarithmic(1.2), PowerDecay(0.5), 3)
    r = run_ensemble(cfg, DW, Contraction(), Logarithmic(1.2), PowerDecay(0.5), 3,
                     Ball((0.0,), 10.0), [0.3])
    np.testing.assert_array_equal(r.final_x, np.stack([t.x[-1] for t in trs]))


@pytest.mark.slow
def test_modes_cross_validate():
    # short-run version of the u/x cross-validation, at a matching tolerance
    T, bins = 0.4, 64
    hists = []
    for mode in ("u_space", "x_space"):
        tr = simulate(SimConfig(dt=1e-3, steps=600_000, seed=11, mode=mode), DW, th=ConstantT(T))
        hists.append(histogram(tr.x[50_000:], bins))
    assert tv_distance(hists[0], hists[1]) <= 0.05
    grid = density_grid(GibbsSpec(DW, NoAux(), 0.0, T), 1024)
    for h in hists:
        assert tv_distance(h, grid) <= 0.05


def test_ensemble_relaxes_to_tilted_gibbs():
    T, gamma = 0.4, 0.25
    cfg = SimConfig(dt=1e-3, steps=8000, seed=2)
    r = run_ensemble(cfg, DW, Contraction(), ConstantT(T), ConstantGamma(gamma), 2000,
                     Ball((0.0,), 10.0), [8.0], bins=16)
    grid = density_grid(GibbsSpec(DW, Contraction(), gamma, T), 256)
    assert tv_distance(r.histograms[-1], grid) <= 0.05
