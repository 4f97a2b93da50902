"""Spectral gap of the Fokker-Planck generator and its Arrhenius lower bound.

On a flat potential the generator is the Legendre operator with eigenvalues
k(k+1)T/w. On the double well the gap closes like exp(-2M/T) at worst.
"""
import numpy as np

from qdiff import (Contraction, Grid1D, NoAux, build_generator, constant, double_well, gap_bound_sweep,
                   poincare_c, spectral_gap)
from qdiff.fpgrid import arrhenius_slope

spacer = "_" * 60
grid = Grid1D(400)

gen = build_generator(constant(0.0), NoAux(), 0.0, 0.5, grid)
ev = np.sort(-np.linalg.eigvals(gen.L).real)[:5]
print("\nFlat potential, T = 0.5: lowest eigenvalues of -L")
print(np.round(ev, 6), " expected k(k+1)/2 =", [k * (k + 1) / 2 for k in range(5)])
print("gap:", spectral_gap(gen))
print(spacer)

c = poincare_c(grid, 1.0)
print("\nPoincare constant c of the cube with weight (1 - x^2)/w, w = 1:", round(c, 6))
print("(attained by phi(x) = x, the first Legendre polynomial)")
print(spacer)

p = double_well(0.5)
for gamma in (0.0, 0.25):
    rows = gap_bound_sweep(p, Contraction(), gamma, [0.2, 0.3, 0.5, 1.0], grid)
    print(f"\nDouble well, contraction tilt Gamma = {gamma}: M* = {rows[0].m_star:.4f}")
    print("   T      gap         c T exp(-2M*/T)")
    for r in rows:
        print(f"  {r.T:.1f}   {r.gap:.4e}   {r.bound:.4e}")
    print("Arrhenius slope:", round(arrhenius_slope(rows), 4), " floor -2M* =", round(-2 * rows[0].m_star, 4))
