"""A diffusion network at fixed temperature samples exp(-V/T).

Runs one path on the double well, bins it, and compares with the quadrature
density. Shorter than the acceptance run; expect TV of a few percent.
"""
import numpy as np

from qdiff import ConstantT, GibbsSpec, NoAux, SimConfig, density_grid, double_well, histogram, simulate
from qdiff import tv_distance

spacer = "_" * 60
p = double_well(0.5)
T = 0.4

print("\nThe objective is V(x) = (x^2 - a^2)^2 with a = 0.5, minima at +-0.5.")
print("V(0) =", p.value(np.array([0.0])), " V(0.5) =", p.value(np.array([0.5])))
print(spacer)

cfg = SimConfig(dt=1e-3, steps=400_000, seed=1)
tr = simulate(cfg, p, NoAux(), ConstantT(T))
print(f"\nSimulated {cfg.steps} Euler-Maruyama steps in u-space (x = tanh u).")
print("max |x| along the path:", np.abs(tr.x).max())

hist = histogram(tr.x[50_000:], bins=32)
grid = density_grid(GibbsSpec(p, NoAux(), 0.0, T), 32 * 16)
gibbs = grid.coarsen(32)
print("\n bin centre   empirical   exp(-V/T)/Z")
centres = -1 + (np.arange(32) + 0.5) / 16
for c, a, b in list(zip(centres, hist, gibbs))[::4]:
    print(f"   {c:+.3f}     {a:.4f}      {b:.4f}")
print("\nTV distance:", round(tv_distance(hist, gibbs), 4))
print(spacer)

print("\nThe x-space integrator (Ito drift -f V' + T f') should agree:")
tr_x = simulate(SimConfig(dt=1e-3, steps=400_000, seed=1, mode="x_space"), p, NoAux(), ConstantT(T))
hist_x = histogram(tr_x.x[50_000:], bins=32)
print("TV(u-space, x-space):", round(tv_distance(hist, hist_x), 4))
