"""Finite-volume Fokker-Planck generator on (-1, 1)^n and spectral diagnostics.

The density evolves as ``dp/dt = div[A (T grad p + p grad W)]`` with
``A = diag(f(x^k))``. Cells are uniform; the faces at +-1 carry no flux
(``f(+-1) = 0``). The face flux along an axis is

    F = f(x_face) [T (p_right - p_left)/h + pbar W'(x_face)],

where ``pbar`` is a weighted average of the two neighbours. The default
Chang-Cooper weights make the scheme exact for a locally linear ``W``, keep
every off-diagonal coupling positive at any Peclet number, and fall back to
full upwinding as ``|h W'/T|`` grows. ``"upwind"`` and ``"central"`` are
kept for comparison.

Spectral work (gap, Poincare constant, Rayleigh quotients) is one-dimensional
and dense; density evolution works for ``n <= 3`` on sparse matrices.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .auxiliary import AuxiliarySpec, NoAux, aux_grad, aux_range, validate_aux
from .errors import ConfigurationError, EvaluationError, NumericError, UnsupportedDimensionError
from .gibbs import GibbsSpec, density_grid, m_star
from .potentials import Potential
from .schedules import ConstantT, QuantumSchedule, ThermalSchedule

SCHEMES = ("chang_cooper", "upwind", "central")


@dataclass(frozen=True)
class Grid1D:
    """``N`` uniform cells covering (-1, 1)."""

    N: int

    def __post_init__(self):
        if self.N < 16:
            raise ConfigurationError(f"grid needs at least 16 cells, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 / self.N

    @property
    def centers(self) -> np.ndarray:
        return -1.0 + self.h * (np.arange(self.N) + 0.5)

    @property
    def faces(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.N + 1)


def bernoulli(z):
    """``z / (exp(z) - 1)`` with the removable singularity at 0 filled in."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-6
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = z / np.expm1(z)
    out = np.where(small, 1.0 - 0.5 * z, out)
    # exp overflow: z -> +inf gives 0, z -> -inf gives -z
    return np.where(np.isnan(out), np.where(z > 0, 0.0, -z), out)


class FokkerPlanck:
    """Face data for one ``(p, aux, T, grid, w)``; builds ``L_Gamma`` for any ``Gamma``."""

    def __init__(self, p: Potential, aux: AuxiliarySpec, T: float, grid: Grid1D,
                 w: float = 1.0, scheme: str = "chang_cooper"):
        if not T > 0:
            raise ConfigurationError("the Fokker-Planck generator needs T > 0")
        if scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {scheme!r}")
        if p.dim > 3:
            raise UnsupportedDimensionError("finite-volume grids are limited to n <= 3")
        validate_aux(aux, p)
        self.p, self.aux, self.T, self.grid, self.w, self.scheme = p, aux, float(T), grid, w, scheme
        n, N = p.dim, grid.N
        self.shape = (N,) * n
        centers, faces = grid.centers, grid.faces[1:-1]
        idx = np.arange(N ** n).reshape(self.shape)
        self._axes = []
        for k in range(n):
            coords = [centers] * n
            coords[k] = faces
            pts = np.stack(np.meshgrid(*coords, indexing="ij"), axis=-1)
            dV = p.grad(pts)[..., k]
            daux = (np.zeros_like(dV) if isinstance(aux, NoAux)
                    else aux_grad(aux, p, pts)[..., k])
            if not (np.all(np.isfinite(dV)) and np.all(np.isfinite(daux))):
                raise EvaluationError("non-finite potential gradient on a face")
            f_face = (1.0 - pts[..., k] ** 2) / w
            lo = np.take(idx, np.arange(N - 1), axis=k)
            hi = np.take(idx, np.arange(1, N), axis=k)
            self._axes.append((f_face.ravel(), dV.ravel(), daux.ravel(), lo.ravel(), hi.ravel()))

    @property
    def size(self) -> int:
        return self.grid.N ** self.p.dim

    def _couplings(self, f_face, dV, daux, gamma):
        # rates lo->hi ("lower", L[hi, lo]) and hi->lo ("upper", L[lo, hi])
        T, h = self.T, self.grid.h
        Wp = dV - gamma * daux if gamma != 0.0 else dV
        D = f_face * T / h ** 2
        if self.scheme == "chang_cooper":
            z = h * Wp / T
            return D * bernoulli(z), D * bernoulli(-z)
        if self.scheme == "upwind":
            return (f_face * (T / h - np.minimum(Wp, 0.0)) / h,
                    f_face * (T / h + np.maximum(Wp, 0.0)) / h)
        return f_face * (T / h - 0.5 * Wp) / h, f_face * (T / h + 0.5 * Wp) / h

    def couplings(self, gamma: float = 0.0):
        """Per-axis ``(lower, upper, lo_index, hi_index)`` arrays."""
        out = []
        for f_face, dV, daux, lo, hi in self._axes:
            lower, upper = self._couplings(f_face, dV, daux, float(gamma))
            out.append((lower, upper, lo, hi))
        return out

    def sparse(self, gamma: float = 0.0) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        diag = np.zeros(self.size)
        for lower, upper, lo, hi in self.couplings(gamma):
            rows += [hi, lo]
            cols += [lo, hi]
            vals += [lower, upper]
            np.add.at(diag, lo, -lower)
            np.add.at(diag, hi, -upper)
        rows.append(np.arange(self.size))
        cols.append(np.arange(self.size))
        vals.append(diag)
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(self.size, self.size))

    def dense(self, gamma: float = 0.0) -> np.ndarray:
        return self.sparse(gamma).toarray()

    def banded(self, gamma: float = 0.0):
        """``(lower, diag, upper)`` diagonals of the tridiagonal 1-D matrix."""
        if self.p.dim != 1:
            raise UnsupportedDimensionError("banded form exists only for n = 1")
        lower, upper, _, _ = self.couplings(gamma)[0]
        diag = np.zeros(self.grid.N)
        diag[:-1] -= lower
        diag[1:] -= upper
        return lower, diag, upper


@dataclass(eq=False)
class GeneratorMatrix:
    L: np.ndarray
    T: float
    gamma: float
    aux: str
    potential: str
    grid: Grid1D
    w: float
    scheme: str
    lower: np.ndarray = field(repr=False, default=None)
    upper: np.ndarray = field(repr=False, default=None)

    def column_sum_error(self) -> float:
        return float(np.abs(self.L.sum(axis=0)).max())


def build_generator(p: Potential, aux: AuxiliarySpec, gamma: float, T: float, grid: Grid1D,
                    w: float = 1.0, scheme: str = "chang_cooper") -> GeneratorMatrix:
    """Dense 1-D generator ``L_Gamma`` acting on cell densities."""
    if p.dim != 1:
        raise UnsupportedDimensionError("dense generators are one-dimensional")
    fp = FokkerPlanck(p, aux, T, grid, w, scheme)
    lower, _, upper = fp.banded(gamma)
    return GeneratorMatrix(fp.dense(gamma), float(T), float(gamma), aux.kind, p.name, grid, w,
                           scheme, lower, upper)


def stationary_vector(gen: GeneratorMatrix) -> np.ndarray:
    """Null vector of ``L`` normalised to unit mass (``sum p_i h = 1``).

    With zero-flux faces the stationary state carries no flux across any
    face, so neighbouring cells satisfy ``lower_j p_j = upper_j p_{j+1}``.
    """
    h = gen.grid.h
    lower, upper = gen.lower, gen.upper
    if lower is not None and np.all(lower > 0) and np.all(upper > 0):
        logp = np.concatenate([[0.0], np.cumsum(np.log(lower) - np.log(upper))])
        p = np.exp(logp - logp.max())
    else:
        p = np.abs(sla.null_space(gen.L, rcond=1e-12)[:, 0])
    return p / (p.sum() * h)


def spectral_gap(gen: GeneratorMatrix, method: str = "dense") -> float:
    """Distance from 0 to the rest of the spectrum of ``L``.

    ``"dense"`` runs a general eigensolve and takes real parts after checking
    that imaginary parts are negligible; ``"symmetric"`` symmetrises the
    tridiagonal matrix by a diagonal similarity and uses a tridiagonal solver.
    """
    if method == "dense":
        try:
            ev = np.linalg.eigvals(gen.L)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigensolve failed: {exc}") from None
        radius = np.abs(ev).max()
        if np.abs(ev.imag).max() > 1e-8 * radius:
            raise NumericError("generator spectrum is not real to working precision")
        re = np.sort(np.abs(ev.real))
    elif method == "symmetric":
        lower, upper = gen.lower, gen.upper
        d = np.diag(gen.L)
        off = np.sqrt(lower * upper)
        try:
            re = np.sort(np.abs(sla.eigvalsh_tridiagonal(d, off)))
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigensolve failed: {exc}") from None
    else:
        raise ConfigurationError(f"unknown method {method!r}")
    return float(re[1])


@lru_cache(maxsize=None)
def poincare_c(grid: Grid1D, w: float = 1.0) -> float:
    """``inf 2 int f phi'^2 / int int (phi(x) - phi(y))^2`` over nonconstant ``phi``.

    Solved as a generalised eigenproblem on the mean-zero subspace of cell
    values; independent of ``T`` and ``Gamma``, hence cached per grid.
    """
    N, h = grid.N, grid.h
    f_face = (1.0 - grid.faces[1:-1] ** 2) / w
    # numerator: 2 * sum_faces f (dphi)^2 / h
    A = np.zeros((N, N))
    i = np.arange(N - 1)
    wts = 2.0 * f_face / h
    A[i, i] += wts
    A[i + 1, i + 1] += wts
    A[i, i + 1] -= wts
    A[i + 1, i] -= wts
    # denominator: 2|D| h sum phi^2 - 2 (h sum phi)^2 with |D| = 2
    B = 4.0 * h * np.eye(N) - 2.0 * h * h * np.ones((N, N))
    Q = sla.null_space(np.ones((1, N)))
    try:
        ev = sla.eigh(Q.T @ A @ Q, Q.T @ B @ Q, eigvals_only=True, subset_by_index=[0, 0])
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolve failed: {exc}") from None
    return float(ev[0])


def rayleigh_ratio(gen: GeneratorMatrix, phi) -> float:
    """Dirichlet-form quotient of ``phi`` under the discrete stationary law.

    Numerator ``2 * sum_faces q_j r_j (phi_{j+1} - phi_j)^2`` with ``q`` the
    stationary cell masses and ``r_j`` the rate across face ``j``; denominator
    ``sum_ij (phi_i - phi_j)^2 q_i q_j``. The infimum over ``phi`` is the gap.
    """
    phi = np.asarray(phi, dtype=float)
    q = stationary_vector(gen) * gen.grid.h
    num = 2.0 * np.sum(q[:-1] * gen.lower * np.diff(phi) ** 2)
    mean = np.sum(q * phi)
    den = 2.0 * (np.sum(q * phi ** 2) - mean ** 2)
    if den <= 0:
        raise ConfigurationError("trial function must be nonconstant")
    return float(num / den)


def gibbs_density(p, aux, gamma, T, grid: Grid1D) -> np.ndarray:
    return density_grid(GibbsSpec(p, aux, gamma, T), grid.N).density


def generator_residual(p, aux, gamma, T, grid: Grid1D, w=1.0, scheme="chang_cooper") -> float:
    """``max |L mu|`` for the quadrature density ``mu`` at the cell centres."""
    gen = build_generator(p, aux, gamma, T, grid, w, scheme)
    return float(np.abs(gen.L @ gibbs_density(p, aux, gamma, T, grid)).max())


def tv(a, b, h) -> float:
    return float(0.5 * np.abs(np.asarray(a) - np.asarray(b)).sum() * h)


# --- gap sweep -------------------------------------------------------------


@dataclass
class GapReport:
    T: float
    gamma: float
    gap: float
    stationary_tv: float
    c: float
    m_star: float
    bound: float
    passed: bool
    b_value: float = 1.0
    b_denominator: float = 1.0

    def to_dict(self) -> dict:
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v))
                for k, v in self.__dict__.items()}


def b_function(M_tilde: float, c: float, T: float, gamma_dot: float, mstar: float):
    """``(1 + M~ gamma_dot exp(2 M*/T) / (2 c T^2))^-1`` and its denominator."""
    denom = 1.0 + M_tilde / (2.0 * c * T * T) * gamma_dot * np.exp(2.0 * mstar / T)
    with np.errstate(divide="ignore"):
        return (1.0 / denom if denom != 0 else np.inf), denom


def gap_bound_sweep(p: Potential, aux: AuxiliarySpec, gamma: float, T_list, grid: Grid1D,
                    w: float = 1.0, resolution: int = 4097, scheme: str = "chang_cooper",
                    slack: float = 0.1) -> list:
    """Measured gap against ``c T exp(-2 M*(Gamma)/T)`` for each temperature.

    A point passes when ``gap >= bound * (1 - slack)``.
    """
    c = poincare_c(grid, w)
    ms = m_star(p, aux, gamma, resolution)
    out = []
    for T in T_list:
        if not T > 0:
            raise ConfigurationError("temperatures must be positive")
        gen = build_generator(p, aux, gamma, T, grid, w, scheme)
        gap = spectral_gap(gen)
        mu = gibbs_density(p, aux, gamma, T, grid)
        bound = c * T * np.exp(-2.0 * ms / T)
        out.append(GapReport(float(T), float(gamma), gap, tv(stationary_vector(gen), mu, grid.h),
                             c, ms, float(bound), bool(gap >= bound * (1.0 - slack))))
    return out


def arrhenius_slope(reports) -> float:
    """Least-squares slope of ``log gap`` against ``1/T``."""
    invT = np.array([1.0 / r.T for r in reports])
    logg = np.log([r.gap for r in reports])
    return float(np.polyfit(invT, logg, 1)[0])


# --- density evolution -----------------------------------------------------


@dataclass
class DensityPath:
    times: np.ndarray
    densities: np.ndarray
    gammas: np.ndarray
    gamma_dots: np.ndarray
    mass_drift: float
    h: float

    def to_csv(self, path) -> None:
        N = self.densities.shape[1]
        header = ",".join(["t"] + [f"m{i}" for i in range(N)])
        np.savetxt(path, np.column_stack([self.times, self.densities]), delimiter=",",
                   header=header, comments="", fmt="%.17g")


def evolve_density(fp: FokkerPlanck, th: ThermalSchedule, q: QuantumSchedule, m0, t_end: float,
                   dt_ode: float = 1e-2, refresh: Optional[float] = None,
                   record_every: Optional[int] = None) -> DensityPath:
    """Implicit-Euler solution of ``dm/dt = L_{Gamma(t)} m``.

    ``L`` is rebuilt at ``Gamma(t_{k+1})`` whenever ``refresh`` time units
    have passed since the last build (default: every step). Mass is
    renormalised each step; the largest pre-normalisation drift is reported.
    """
    if not isinstance(th, ConstantT) or th.T != fp.T:
        raise ConfigurationError("density evolution needs the constant temperature of the generator")
    if not (t_end > 0 and dt_ode > 0):
        raise ConfigurationError("t_end and dt_ode must be positive")
    m = np.asarray(m0, dtype=float).ravel().copy()
    cell = fp.grid.h ** fp.p.dim
    if m.shape != (fp.size,) or np.any(m < 0):
        raise ConfigurationError("m0 must be a nonnegative density on the grid")
    m /= m.sum() * cell
    steps = int(np.ceil(t_end / dt_ode - 1e-9))
    dt = t_end / steps
    refresh = dt if refresh is None else refresh
    record_every = max(1, steps // 400) if record_every is None else record_every
    one_d = fp.p.dim == 1
    times, dens, gams, dgams = [0.0], [m.copy()], [], []
    g0, gd0 = q.at(0.0)
    gams.append(g0)
    dgams.append(gd0)
    drift = 0.0
    built_at, solver, ab = -np.inf, None, None
    for k in range(1, steps + 1):
        t = k * dt
        if t - built_at >= refresh - 1e-12:
            gamma, _ = q.at(t)
            built_at = t
            if one_d:
                lower, diag, upper = fp.banded(gamma)
                ab = np.zeros((3, fp.size))
                ab[0, 1:] = -dt * upper
                ab[1] = 1.0 - dt * diag
                ab[2, :-1] = -dt * lower
            else:
                A = (sp.identity(fp.size, format="csc") - dt * fp.sparse(gamma).tocsc())
                try:
                    solver = spla.splu(A)
                except RuntimeError as exc:
                    raise NumericError(f"factorisation failed at t={t}: {exc}") from None
        try:
            m = sla.solve_banded((1, 1), ab, m) if one_d else solver.solve(m)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericError(f"linear solve failed at t={t}: {exc}") from None
        mass = m.sum() * cell
        drift = max(drift, abs(mass - 1.0))
        np.maximum(m, 0.0, out=m)
        m /= m.sum() * cell
        if k % record_every == 0 or k == steps:
            g, gd = q.at(t)
            times.append(t)
            dens.append(m.copy())
            gams.append(g)
            dgams.append(gd)
    return DensityPath(np.array(times), np.array(dens), np.array(gams), np.array(dgams),
                       float(drift), fp.grid.h)


@dataclass
class ZtTrace:
    times: np.ndarray
    z: np.ndarray
    gammas: np.ndarray
    b_values: np.ndarray
    b_denominators: np.ndarray
    lower_bound_ok: np.ndarray
    K: float
    excluded_cells: int = 0

    @property
    def b_positive(self) -> np.ndarray:
        return self.b_denominators > 0

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(), "z": self.z.tolist(), "gammas": self.gammas.tolist(),
            "B": [float(b) if np.isfinite(b) else None for b in self.b_values],
            "B_denominator": self.b_denominators.tolist(),
            "B_denominator_positive": self.b_positive.tolist(),
            "z_lower_bound_ok": self.lower_bound_ok.tolist(),
            "K": self.K, "excluded_cells": self.excluded_cells,
        }


def z_trace(path: DensityPath, fp: FokkerPlanck, resolution: int = 4097,
            c: Optional[float] = None) -> ZtTrace:
    """``z_t = sum m_t^2 / mu_{Gamma(t)} h`` along a density path (1-D).

    Cells where ``mu`` underflows to zero are excluded and counted.
    """
    if fp.p.dim != 1:
        raise UnsupportedDimensionError("z_t tracking is one-dimensional")
    c = poincare_c(fp.grid, fp.w) if c is None else c
    M_tilde = aux_range(fp.aux, fp.p, resolution).M
    z, bvals, bden = [], [], []
    excluded = 0
    ms_cache = {}
    for t, m, g, gd in zip(path.times, path.densities, path.gammas, path.gamma_dots):
        mu = gibbs_density(fp.p, fp.aux, g, fp.T, fp.grid)
        ok = mu > 0
        excluded += int((~ok).sum())
        z.append(float(np.sum(m[ok] ** 2 / mu[ok]) * path.h))
        if g not in ms_cache:
            ms_cache[g] = m_star(fp.p, fp.aux, g, resolution)
        b, den = b_function(M_tilde, c, fp.T, gd, ms_cache[g])
        bvals.append(b)
        bden.append(den)
    if excluded:
        warnings.warn(f"{excluded} cells excluded where the Gibbs density underflowed", RuntimeWarning)
    z = np.array(z)
    return ZtTrace(path.times.copy(), z, path.gammas.copy(), np.array(bvals), np.array(bden),
                   z >= 1.0 - 1e-8, float(np.sqrt(z.max())), excluded)


def hit_bound_check(path: DensityPath, trace: ZtTrace, fp: FokkerPlanck, S, tol: float = 1e-8):
    """Grid mass of ``m_t`` on ``S`` against ``K_t sqrt(mu_{Gamma(t)}(S))``.

    ``K_t`` is the running maximum of ``sqrt(z_s)`` for ``s <= t``. Returns
    rows ``(t, mass, bound, ok)``.
    """
    pts = fp.grid.centers[:, None]
    inside = S.mask(fp.p, pts)
    K_run = np.sqrt(np.maximum.accumulate(trace.z))
    rows = []
    for t, m, g, K in zip(path.times, path.densities, path.gammas, K_run):
        mass = float(m[inside].sum() * path.h)
        mu = gibbs_density(fp.p, fp.aux, g, fp.T, fp.grid)
        bound = float(K * np.sqrt(mu[inside].sum() * path.h))
        rows.append((float(t), mass, bound, mass <= bound + tol))
    return rows
