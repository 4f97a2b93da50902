"""Gibbs-type densities ``exp(-(V - Gamma*Vaux)/T) / Z`` by midpoint quadrature."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .auxiliary import AuxiliarySpec, NoAux, aux_value, make_effective, validate_aux
from .errors import ConfigurationError, UnsupportedDimensionError
from .potentials import MAX_GRID_DIM, Potential, range_of


@dataclass(frozen=True, eq=False)
class GibbsSpec:
    p: Potential
    aux: AuxiliarySpec = NoAux()
    gamma: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigurationError(f"Gibbs density needs T > 0, got {self.T}")
        if self.gamma < 0:
            raise ConfigurationError("gamma must be nonnegative")
        validate_aux(self.aux, self.p)

    def effective(self, x) -> np.ndarray:
        """``W(x) = V(x) - gamma * Vaux(x)`` on a batch of points."""
        W = self.p.value(x)
        if self.gamma != 0.0 and not isinstance(self.aux, NoAux):
            W = W - self.gamma * aux_value(self.aux, self.p, x)
        return W


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Cell-centred density on a uniform tensor grid of ``(-1, 1)^n``.

    ``density`` has shape ``(r,) * n``; ``log_z`` is the log partition value,
    kept separately because ``Z`` itself under- or overflows at small ``T``.
    """

    spec: GibbsSpec
    centers: np.ndarray
    cell_volume: float
    density: np.ndarray
    log_z: float

    @property
    def resolution(self) -> int:
        return len(self.centers)

    @property
    def dim(self) -> int:
        return self.density.ndim

    @property
    def Z(self) -> float:
        return float(np.exp(self.log_z))

    @property
    def probabilities(self) -> np.ndarray:
        return self.density * self.cell_volume

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*([self.centers] * self.dim), indexing="ij")
        return np.stack(mesh, axis=-1)

    def coarsen(self, bins: int) -> np.ndarray:
        """Cell probabilities summed onto ``bins`` per axis (resolution must be a multiple)."""
        r = self.resolution
        if r % bins:
            raise ConfigurationError(f"resolution {r} is not a multiple of {bins}")
        prob = self.probabilities
        shape = []
        for _ in range(self.dim):
            shape += [bins, r // bins]
        return prob.reshape(shape).sum(axis=tuple(range(1, 2 * self.dim, 2)))

    def to_csv(self, path) -> None:
        pts = self.points().reshape(-1, self.dim)
        header = ",".join([f"x{k + 1}" for k in range(self.dim)] + ["density"])
        np.savetxt(path, np.column_stack([pts, self.density.ravel()]), delimiter=",",
                   header=header, comments="", fmt="%.17g")


def cell_centers(resolution: int) -> np.ndarray:
    h = 2.0 / resolution
    return -1.0 + h * (np.arange(resolution) + 0.5)


def density_grid(spec: GibbsSpec, resolution: int = 1024) -> DensityGrid:
    """Midpoint-rule density and partition function of ``exp(-W/T)``."""
    n = spec.p.dim
    if n > MAX_GRID_DIM:
        raise UnsupportedDimensionError(f"density grids are limited to n <= {MAX_GRID_DIM}")
    if resolution < 1:
        raise ConfigurationError("resolution must be positive")
    centers = cell_centers(resolution)
    mesh = np.meshgrid(*([centers] * n), indexing="ij")
    W = spec.effective(np.stack(mesh, axis=-1))
    w_min = float(W.min())
    weights = np.exp(-(W - w_min) / spec.T)
    vol = (2.0 / resolution) ** n
    s = float(weights.sum() * vol)
    return DensityGrid(spec, centers, vol, weights / s, float(np.log(s) - w_min / spec.T))


def m_star(p: Potential, aux: AuxiliarySpec, gamma: float, resolution: int = 4097, **kwargs) -> float:
    """Range of ``V - gamma*Vaux`` over the closed cube."""
    W = make_effective(p, aux, gamma)
    return range_of(W.value, p.dim, resolution, **kwargs).M


def gibbs_mass(grid: DensityGrid, S) -> float:
    """Probability of ``S`` under the grid density, by cell-centre membership."""
    inside = S.mask(grid.spec.p, grid.points())
    return float(np.clip(grid.probabilities[inside].sum(), 0.0, 1.0))


def tv_distance(hist, grid) -> float:
    """Total variation ``0.5 * sum |p_i - q_i|`` between two binned distributions.

    ``grid`` is a :class:`DensityGrid` (its cell probabilities are used,
    coarsened to the histogram's bins when the resolution is a multiple) or a
    probability array of the same shape as ``hist``.
    """
    hist = np.asarray(hist, dtype=float)
    if isinstance(grid, DensityGrid):
        bins = hist.shape[0]
        if hist.shape != (bins,) * grid.dim:
            raise ConfigurationError(f"histogram shape {hist.shape} does not match a {grid.dim}-D grid")
        q = grid.coarsen(bins)
    else:
        q = np.asarray(grid, dtype=float)
    if q.shape != hist.shape:
        raise ConfigurationError(f"bin mismatch: {hist.shape} vs {q.shape}")
    return float(0.5 * np.abs(hist - q).sum())
