"""Objective functions on the closed cube [-1, 1]^n.

Every callable on a :class:`Potential` is batched: it accepts an array of
shape ``(..., n)`` and returns ``(...)`` for values, ``(..., n)`` for
gradients, ``(..., n, n)`` for Hessians and ``(..., n, n, n)`` for third
derivatives.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, EvaluationError, UnsupportedDimensionError

MAX_GRID_DIM = 3


@dataclass(frozen=True, eq=False)
class Potential:
    """An objective ``V`` with analytic first and second derivatives.

    Parameters
    ----------
    dim : int
        Dimension ``n`` of the cube.
    value, grad, hess : callable
        Batched maps for ``V``, its gradient and its Hessian.
    third : callable, optional
        Batched third-derivative tensor. Auxiliary gradients fall back to
        finite differences when it is absent.
    minimizers : ndarray, optional
        Known global minimizers, shape ``(k, n)``.
    name, params : str, dict
        Catalog identity, echoed into reports.
    """

    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    third: Optional[Callable[[np.ndarray], np.ndarray]] = None
    minimizers: Optional[np.ndarray] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ConfigurationError(f"dimension must be positive, got {self.dim}")
        if self.minimizers is not None:
            mins = np.atleast_2d(np.asarray(self.minimizers, dtype=float))
            if mins.shape[1] != self.dim:
                raise ConfigurationError("minimizers must have shape (k, dim)")
            if np.any(np.abs(mins) >= 1.0):
                raise ConfigurationError("known minimizers must lie strictly inside the cube")
            object.__setattr__(self, "minimizers", mins)

    @property
    def spec(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


@dataclass(frozen=True)
class RangeReport:
    """Extremes of a function over a probe set of the closed cube."""

    inf: float
    sup: float
    M: float
    arg_inf: np.ndarray
    arg_sup: np.ndarray
    resolution: int
    approximate: bool = False


@dataclass(frozen=True)
class DerivativeReport:
    grad_error: float
    hess_error: float
    grad_point: np.ndarray
    hess_point: np.ndarray
    samples: int
    h: float

    def passed(self, tol: float = 1e-5) -> bool:
        return self.grad_error <= tol and self.hess_error <= tol


def as_points(x, dim: int) -> np.ndarray:
    """Coerce ``x`` to a float array whose last axis has length ``dim``."""
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise DomainError(f"expected points with last axis {dim}, got shape {x.shape}")
    return x


def eval_all(p: Potential, x):
    """Value, gradient and Hessian of ``p`` at a single point of the cube."""
    x = as_points(x, p.dim).reshape(p.dim)
    if np.any(np.abs(x) > 1.0) or not np.all(np.isfinite(x)):
        raise DomainError(f"point {x} is outside the closed cube")
    value = float(p.value(x))
    grad = np.asarray(p.grad(x), dtype=float).reshape(p.dim)
    hess = np.asarray(p.hess(x), dtype=float).reshape(p.dim, p.dim)
    if not (np.isfinite(value) and np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
        raise EvaluationError(f"non-finite evaluation of {p.name} at {x}", point=x)
    return value, grad, 0.5 * (hess + hess.T)


# ---------------------------------------------------------------------------
# range statistics


def cube_grid(dim: int, resolution: int) -> np.ndarray:
    """Tensor grid including the cube faces, shape ``(resolution**dim, dim)``."""
    axis = np.linspace(-1.0, 1.0, resolution)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def range_of(fn, dim: int, resolution: int = 257, *, sampled: bool = False,
             samples: int = 200_000, seed: int = 0) -> RangeReport:
    """Range of a batched scalar function over the closed cube.

    Dense tensor grid for ``dim <= 3``. Above that, ``sampled=True`` probes
    seeded uniform points plus the cube corners and flags the result as
    approximate.
    """
    if resolution < 3:
        raise ConfigurationError("resolution must be at least 3")
    if dim > MAX_GRID_DIM:
        if not sampled:
            raise UnsupportedDimensionError(
                f"exhaustive grid limited to n <= {MAX_GRID_DIM}; pass sampled=True for an estimate")
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-1.0, 1.0, size=(samples, dim))
        if dim <= 16:
            corners = np.array(list(itertools.product([-1.0, 1.0], repeat=dim)))
            pts = np.concatenate([pts, corners])
        approximate = True
    else:
        pts = cube_grid(dim, resolution)
        approximate = False
    vals = np.empty(len(pts))
    chunk = 1 << 18
    for start in range(0, len(pts), chunk):
        vals[start:start + chunk] = fn(pts[start:start + chunk])
    if not np.all(np.isfinite(vals)):
        bad = pts[np.argmax(~np.isfinite(vals))]
        raise EvaluationError(f"non-finite value at {bad}", point=bad)
    i_lo, i_hi = int(np.argmin(vals)), int(np.argmax(vals))
    lo, hi = float(vals[i_lo]), float(vals[i_hi])
    return RangeReport(lo, hi, hi - lo, pts[i_lo].copy(), pts[i_hi].copy(),
                       resolution, approximate)


def potential_range(p: Potential, resolution: int = 257, **kwargs) -> RangeReport:
    """``M = sup V - inf V`` over the closed cube."""
    return range_of(p.value, p.dim, resolution, **kwargs)


def check_derivatives(p: Potential, samples: int = 100, h: float = 1e-4,
                      seed: int = 0) -> DerivativeReport:
    """Compare analytic derivatives with central differences at random points.

    Gradient against differences of ``V``; Hessian against differences of
    the analytic gradient. Errors are mixed absolute/relative,
    ``|a - fd| / max(1, |a|)``, so steep potentials are not penalised for the
    ``h^2`` truncation term.
    """
    if h <= 0 or samples < 1:
        raise ConfigurationError("need h > 0 and samples >= 1")
    rng = np.random.default_rng(seed)
    n = p.dim
    pts = rng.uniform(-1.0 + h, 1.0 - h, size=(samples, n))
    eye = np.eye(n) * h
    plus = pts[:, None, :] + eye
    minus = pts[:, None, :] - eye
    fd_grad = (p.value(plus) - p.value(minus)) / (2 * h)
    fd_hess = (p.grad(plus) - p.grad(minus)) / (2 * h)
    grad = p.grad(pts)
    hess = p.hess(pts)
    for arr in (fd_grad, fd_hess, grad, hess):
        bad = ~np.isfinite(arr.reshape(samples, -1)).all(axis=1)
        if bad.any():
            point = pts[np.argmax(bad)]
            raise EvaluationError(f"non-finite derivative of {p.name} at {point}", point=point)
    g_err = (np.abs(grad - fd_grad) / np.maximum(1.0, np.abs(grad))).max(axis=1)
    h_err = (np.abs(hess - fd_hess) / np.maximum(1.0, np.abs(hess))).reshape(samples, -1).max(axis=1)
    return DerivativeReport(float(g_err.max()), float(h_err.max()),
                            pts[int(g_err.argmax())], pts[int(h_err.argmax())], samples, h)


# ---------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class _Factor:
    # elementwise 1-D pieces of a separable potential
    v: Callable
    d1: Callable
    d2: Callable
    d3: Callable
    minimizers: Optional[tuple]
    spec: dict


def _double_well_factor(a=0.5):
    a = float(a)
    if not 0.0 < a < 1.0:
        raise ConfigurationError(f"double_well needs 0 < a < 1, got a={a}")
    a2 = a * a
    return _Factor(
        v=lambda x: (x * x - a2) ** 2,
        d1=lambda x: 4.0 * x * (x * x - a2),
        d2=lambda x: 12.0 * x * x - 4.0 * a2,
        d3=lambda x: 24.0 * x,
        minimizers=(-a, a),
        spec={"name": "double_well", "params": {"a": a}},
    )


def _tilted_double_well_factor(a=0.5, b=0.05):
    a, b = float(a), float(b)
    if not 0.0 < a < 1.0:
        raise ConfigurationError(f"tilted_double_well needs 0 < a < 1, got a={a}")
    a2 = a * a
    v = lambda x: (x * x - a2) ** 2 + b * x  # noqa: E731
    d1 = lambda x: 4.0 * x * (x * x - a2) + b  # noqa: E731
    d2 = lambda x: 12.0 * x * x - 4.0 * a2  # noqa: E731
    roots = np.roots([4.0, 0.0, -4.0 * a2, b])
    crit = []
    for r in roots[np.abs(roots.imag) < 1e-10].real:
        for _ in range(5):
            r = r - d1(r) / d2(r)
        if abs(r) < 1.0 and d2(r) > 0:
            crit.append(float(r))
    mins = None
    if crit:
        vals = np.array([v(r) for r in crit])
        best = vals.min()
        # boundary values beat the interior wells only for very large tilts
        if best <= min(v(-1.0), v(1.0)):
            mins = tuple(sorted(r for r, val in zip(crit, vals) if val - best <= 1e-14))
    return _Factor(v, d1, d2, lambda x: 24.0 * x, mins,
                   {"name": "tilted_double_well", "params": {"a": a, "b": b}})


def _multi_well_cos_factor(k=4, depth=0.25):
    if int(k) != k or k < 1:
        raise ConfigurationError(f"multi_well_cos needs a positive integer k, got {k}")
    k, depth = int(k), float(depth)
    if depth <= 0:
        raise ConfigurationError("multi_well_cos needs depth > 0")
    w = k * np.pi
    # wells at the centres of k equal cells, maxima on the faces
    return _Factor(
        v=lambda x: depth * np.cos(w * (x + 1.0)),
        d1=lambda x: -depth * w * np.sin(w * (x + 1.0)),
        d2=lambda x: -depth * w * w * np.cos(w * (x + 1.0)),
        d3=lambda x: depth * w ** 3 * np.sin(w * (x + 1.0)),
        minimizers=tuple(-1.0 + (2 * j + 1) / k for j in range(k)),
        spec={"name": "multi_well_cos", "params": {"k": k, "depth": depth}},
    )


def _quadratic_factor(center=0.0, scale=1.0):
    c, s = float(center), float(scale)
    if abs(c) >= 1.0:
        raise ConfigurationError(f"quadratic center must be interior, got {c}")
    if s <= 0:
        raise ConfigurationError("quadratic scale must be positive")
    return _Factor(
        v=lambda x: s * (x - c) ** 2,
        d1=lambda x: 2.0 * s * (x - c),
        d2=lambda x: np.full_like(x, 2.0 * s),
        d3=lambda x: np.zeros_like(x),
        minimizers=(c,),
        spec={"name": "quadratic_bowl", "params": {"center": c, "scale": s}},
    )


def _linear_factor(c=1.0):
    c = float(c)
    return _Factor(
        v=lambda x: c * x,
        d1=lambda x: np.full_like(x, c),
        d2=lambda x: np.zeros_like(x),
        d3=lambda x: np.zeros_like(x),
        minimizers=None,
        spec={"name": "linear", "params": {"c": c}},
    )


def _constant_factor(c=0.0):
    c = float(c)
    return _Factor(
        v=lambda x: np.full_like(x, c),
        d1=lambda x: np.zeros_like(x),
        d2=lambda x: np.zeros_like(x),
        d3=lambda x: np.zeros_like(x),
        minimizers=None,
        spec={"name": "constant", "params": {"c": c}},
    )


_FACTORS = {
    "double_well": _double_well_factor,
    "tilted_double_well": _tilted_double_well_factor,
    "multi_well_cos": _multi_well_cos_factor,
    "quadratic_bowl": _quadratic_factor,
    "linear": _linear_factor,
    "constant": _constant_factor,
}


def separable(factors, name="separable_nd", params=None) -> Potential:
    """``V(x) = sum_j V_j(x_j)`` from one-dimensional factors."""
    factors = list(factors)
    n = len(factors)
    if n == 0:
        raise ConfigurationError("separable potential needs at least one factor")
    eye = np.eye(n)
    diag3 = np.zeros((n, n, n))
    diag3[np.arange(n), np.arange(n), np.arange(n)] = 1.0

    if all(f is factors[0] for f in factors):
        fac = factors[0]

        def value(x):
            return fac.v(x).sum(axis=-1)

        grad = fac.d1

        def hess(x):
            return fac.d2(x)[..., :, None] * eye

        def third(x):
            return fac.d3(x)[..., :, None, None] * diag3
    else:
        def _cols(which, x):
            return np.stack([getattr(f, which)(x[..., j]) for j, f in enumerate(factors)], axis=-1)

        def value(x):
            return _cols("v", x).sum(axis=-1)

        def grad(x):
            return _cols("d1", x)

        def hess(x):
            return _cols("d2", x)[..., :, None] * eye

        def third(x):
            return _cols("d3", x)[..., :, None, None] * diag3

    mins = None
    if all(f.minimizers is not None for f in factors):
        count = int(np.prod([len(f.minimizers) for f in factors]))
        if count <= 4096:
            mins = np.array(list(itertools.product(*[f.minimizers for f in factors])), dtype=float)
    if params is None:
        params = {"factors": [f.spec for f in factors]}
    return Potential(n, value, grad, hess, third, mins, name, params)


def double_well(a=0.5) -> Potential:
    """``(x^2 - a^2)^2`` on [-1, 1]; minimizers ``+-a``."""
    return separable([_double_well_factor(a)], "double_well", {"a": float(a)})


def tilted_double_well(a=0.5, b=0.05) -> Potential:
    """Double well plus the tilt ``b*x``; unique ground state for ``b != 0``."""
    return separable([_tilted_double_well_factor(a, b)], "tilted_double_well",
                     {"a": float(a), "b": float(b)})


def multi_well_cos(k=4, depth=0.25, n=1) -> Potential:
    """``depth * sum_j cos(k*pi*(x_j + 1))``: ``k`` equal wells per axis, maxima on the faces."""
    fac = _multi_well_cos_factor(k, depth)
    return separable([fac] * int(n), "multi_well_cos", {"k": int(k), "depth": float(depth), "n": int(n)})


def quadratic_bowl(center=0.0, n=None, scale=1.0) -> Potential:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if n is not None and center.size == 1:
        center = np.full(int(n), center[0])
    elif n is not None and center.size != int(n):
        raise ConfigurationError("center length does not match n")
    facs = [_quadratic_factor(c, scale) for c in center]
    if all(c == center[0] for c in center):
        facs = [facs[0]] * len(center)
    return separable(facs, "quadratic_bowl",
                     {"center": center.tolist(), "n": len(center), "scale": float(scale)})


def linear(c) -> Potential:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return separable([_linear_factor(ci) for ci in c], "linear", {"c": c.tolist()})


def constant(c=0.0, n=1) -> Potential:
    facs = [_constant_factor(float(c) / int(n))] * int(n)
    return separable(facs, "constant", {"c": float(c), "n": int(n)})


def separable_nd(factors) -> Potential:
    """Sum of one-dimensional catalog factors, each given as ``{"name", "params"}``."""
    built = []
    for item in factors:
        if not isinstance(item, dict) or "name" not in item:
            raise ConfigurationError(f"factor must be a {{'name', 'params'}} record, got {item!r}")
        name = item["name"]
        if name not in _FACTORS:
            raise ConfigurationError(f"unknown 1-D factor {name!r}")
        built.append(_build(_FACTORS[name], item.get("params", {}), name))
    return separable(built, "separable_nd", {"factors": [f.spec for f in built]})


def _build(ctor, params, name):
    try:
        return ctor(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {name!r}: {exc}") from None


CATALOG = {
    "double_well": double_well,
    "tilted_double_well": tilted_double_well,
    "multi_well_cos": multi_well_cos,
    "quadratic_bowl": quadratic_bowl,
    "separable_nd": separable_nd,
    "linear": linear,
    "constant": constant,
}


def catalog_make(name: str, params: Optional[dict] = None) -> Potential:
    """Build a catalog potential by name."""
    if name not in CATALOG:
        raise ConfigurationError(f"unknown potential {name!r}; choose from {sorted(CATALOG)}")
    return _build(CATALOG[name], dict(params or {}), name)
