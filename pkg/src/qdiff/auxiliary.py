"""Auxiliary functions and the effective potential ``W = V - Gamma * Vaux``.

Four auxiliary constructions are supported next to the trivial one:

* :class:`Homotopy` -- ``Vaux = V - V0`` for a unimodal ``V0``;
* :class:`Contraction` -- ``Vaux = V``, a linear contraction of the objective;
* :class:`HessianQuadratic` -- ``Vaux = -eps' H eps`` with ``H`` the Hessian of ``V``;
* :class:`Kinetic1D` / :class:`KineticND` -- the Hessian quadratic augmented by
  the gradient term, ``-(eps^2 + V'^2) V''`` in one dimension and
  ``-eps' H eps - g' H g`` in general.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from .errors import ConfigurationError, DomainError, EvaluationError
from .potentials import Potential, RangeReport, as_points, quadratic_bowl, range_of

FD_STEP = 1e-4
UNIMODAL_RESOLUTION = 512


@dataclass(frozen=True)
class NoAux:
    kind = "none"


@dataclass(frozen=True, eq=False)
class Homotopy:
    """``Vaux = V - V0``. ``v0=None`` means a bowl centred at the cube midpoint."""

    v0: Optional[Potential] = None
    kind = "homotopy"


@dataclass(frozen=True)
class Contraction:
    kind = "contraction"


@dataclass(frozen=True)
class HessianQuadratic:
    eps: Optional[tuple] = None
    kind = "hessian_quadratic"


@dataclass(frozen=True)
class Kinetic1D:
    eps: Optional[float] = None
    kind = "kinetic_1d"


@dataclass(frozen=True)
class KineticND:
    eps: Optional[tuple] = None
    kind = "kinetic_nd"


AuxiliarySpec = Union[NoAux, Homotopy, Contraction, HessianQuadratic, Kinetic1D, KineticND]

AUX_KINDS = {
    "none": NoAux,
    "homotopy": Homotopy,
    "contraction": Contraction,
    "hessian_quadratic": HessianQuadratic,
    "kinetic_1d": Kinetic1D,
    "kinetic_nd": KineticND,
}


def make_aux(kind: str = "none", eps=None, v0: Optional[Potential] = None) -> AuxiliarySpec:
    """Build an auxiliary spec from its configuration keys."""
    if kind not in AUX_KINDS:
        raise ConfigurationError(f"unknown auxiliary kind {kind!r}; choose from {sorted(AUX_KINDS)}")
    if kind == "homotopy":
        return Homotopy(v0)
    if kind == "kinetic_1d":
        return Kinetic1D(None if eps is None else float(np.asarray(eps, dtype=float).ravel()[0]))
    if kind in ("hessian_quadratic", "kinetic_nd"):
        eps = None if eps is None else tuple(np.atleast_1d(np.asarray(eps, dtype=float)).tolist())
        return AUX_KINDS[kind](eps)
    return AUX_KINDS[kind]()


def default_eps(n: int) -> np.ndarray:
    return np.full(n, 0.1 / np.sqrt(n))


def eps_vector(aux: AuxiliarySpec, n: int) -> np.ndarray:
    eps = getattr(aux, "eps", None)
    if eps is None:
        return default_eps(n)
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if eps.size == 1 and n > 1:
        eps = np.full(n, eps[0])
    if eps.shape != (n,):
        raise ConfigurationError(f"eps must have length {n}, got {eps.size}")
    return eps


@lru_cache(maxsize=None)
def _midpoint_bowl(n: int) -> Potential:
    return quadratic_bowl(0.0, n=n)


def homotopy_base(aux: Homotopy, n: int) -> Potential:
    return aux.v0 if aux.v0 is not None else _midpoint_bowl(n)


def validate_aux(aux: AuxiliarySpec, p: Potential) -> None:
    """Raise :class:`ConfigurationError` if ``aux`` cannot act on ``p``."""
    if isinstance(aux, Kinetic1D) and p.dim != 1:
        raise ConfigurationError("kinetic_1d auxiliary is only defined for n = 1")
    if isinstance(aux, (HessianQuadratic, Kinetic1D, KineticND)):
        eps_vector(aux, p.dim)
    if isinstance(aux, Homotopy):
        v0 = homotopy_base(aux, p.dim)
        if v0.dim != p.dim:
            raise ConfigurationError("homotopy V0 dimension differs from the objective")
        if v0.minimizers is None or len(v0.minimizers) != 1:
            raise ConfigurationError("homotopy V0 must declare exactly one minimizer")
        if aux.v0 is not None and v0.dim <= 2:
            check_unimodal(v0)


def check_unimodal(v0: Potential, resolution: int = UNIMODAL_RESOLUTION) -> None:
    """Grid test: the only strict interior local minimum is the declared one."""
    axis = np.linspace(-1.0, 1.0, resolution)
    mesh = np.meshgrid(*([axis] * v0.dim), indexing="ij")
    vals = v0.value(np.stack(mesh, axis=-1))
    inner = tuple(slice(1, -1) for _ in range(v0.dim))
    is_min = np.ones(vals[inner].shape, dtype=bool)
    centre = vals[inner]
    for ax in range(v0.dim):
        for shift in (-1, 1):
            idx = [slice(1, -1)] * v0.dim
            idx[ax] = slice(1 + shift, resolution - 1 + shift)
            is_min &= centre < vals[tuple(idx)]
    locs = np.argwhere(is_min)
    spacing = 2.0 / (resolution - 1)
    declared = v0.minimizers[0]
    ok = len(locs) == 1 and np.all(np.abs(axis[locs[0] + 1] - declared) <= 2 * spacing)
    if not ok:
        raise ConfigurationError(
            f"homotopy V0 is not unimodal at grid resolution {resolution}: "
            f"{len(locs)} strict interior local minima")


# ---------------------------------------------------------------------------
# batched evaluation


def aux_value(aux: AuxiliarySpec, p: Potential, x) -> np.ndarray:
    x = as_points(x, p.dim)
    if isinstance(aux, NoAux):
        return np.zeros(x.shape[:-1])
    if isinstance(aux, Contraction):
        return p.value(x)
    if isinstance(aux, Homotopy):
        return p.value(x) - homotopy_base(aux, p.dim).value(x)
    eps = eps_vector(aux, p.dim)
    H = p.hess(x)
    out = -np.einsum("...ij,i,j->...", H, eps, eps)
    if isinstance(aux, (Kinetic1D, KineticND)):
        g = p.grad(x)
        out = out - np.einsum("...i,...ij,...j->...", g, H, g)
    return out


def aux_grad_fd(aux: AuxiliarySpec, p: Potential, x, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of the auxiliary value."""
    x = as_points(x, p.dim)
    eye = np.eye(p.dim) * h
    xs = x[..., None, :]
    return (aux_value(aux, p, xs + eye) - aux_value(aux, p, xs - eye)) / (2 * h)


def aux_grad(aux: AuxiliarySpec, p: Potential, x) -> np.ndarray:
    """Gradient of the auxiliary function; analytic when ``p.third`` exists."""
    x = as_points(x, p.dim)
    if isinstance(aux, NoAux):
        return np.zeros(x.shape)
    if isinstance(aux, Contraction):
        return p.grad(x)
    if isinstance(aux, Homotopy):
        return p.grad(x) - homotopy_base(aux, p.dim).grad(x)
    if p.third is None:
        return aux_grad_fd(aux, p, x)
    eps = eps_vector(aux, p.dim)
    T3 = p.third(x)
    out = -np.einsum("...ijk,i,j->...k", T3, eps, eps)
    if isinstance(aux, (Kinetic1D, KineticND)):
        g = p.grad(x)
        H = p.hess(x)
        Hg = np.einsum("...ij,...j->...i", H, g)
        out = out - 2.0 * np.einsum("...ij,...j->...i", H, Hg) \
            - np.einsum("...ijk,...i,...j->...k", T3, g, g)
    return out


def aux_hess(aux: AuxiliarySpec, p: Potential, x) -> np.ndarray:
    x = as_points(x, p.dim)
    if isinstance(aux, NoAux):
        return np.zeros(x.shape + (p.dim,))
    if isinstance(aux, Contraction):
        return p.hess(x)
    if isinstance(aux, Homotopy):
        return p.hess(x) - homotopy_base(aux, p.dim).hess(x)
    eye = np.eye(p.dim) * FD_STEP
    xs = x[..., None, :]
    H = (aux_grad(aux, p, xs + eye) - aux_grad(aux, p, xs - eye)) / (2 * FD_STEP)
    return 0.5 * (H + np.swapaxes(H, -1, -2))


def eval_aux(aux: AuxiliarySpec, p: Potential, x):
    """Auxiliary value and gradient at a single point of the closed cube."""
    validate_aux(aux, p)
    x = as_points(x, p.dim).reshape(p.dim)
    if np.any(np.abs(x) > 1.0):
        raise DomainError(f"point {x} is outside the closed cube")
    val = float(aux_value(aux, p, x))
    grad = np.asarray(aux_grad(aux, p, x), dtype=float).reshape(p.dim)
    if not (np.isfinite(val) and np.all(np.isfinite(grad))):
        raise EvaluationError(f"non-finite auxiliary value at {x}", point=x)
    return val, grad


def make_effective(p: Potential, aux: AuxiliarySpec, gamma: float) -> Potential:
    """The potential ``W = V - gamma * Vaux`` that drives the dynamics."""
    gamma = float(gamma)
    if gamma < 0:
        raise ConfigurationError(f"gamma must be nonnegative, got {gamma}")
    validate_aux(aux, p)
    if gamma == 0.0 or isinstance(aux, NoAux):
        return p
    if isinstance(aux, Contraction):
        s = 1.0 - gamma
        third = None if p.third is None else (lambda x: s * p.third(x))
        return Potential(p.dim, lambda x: s * p.value(x), lambda x: s * p.grad(x),
                         lambda x: s * p.hess(x), third, p.minimizers if s > 0 else None,
                         f"{p.name}-eff", {"base": p.spec, "aux": aux.kind, "gamma": gamma})
    return Potential(
        p.dim,
        lambda x: p.value(x) - gamma * aux_value(aux, p, x),
        lambda x: p.grad(x) - gamma * aux_grad(aux, p, x),
        lambda x: p.hess(x) - gamma * aux_hess(aux, p, x),
        None, None, f"{p.name}-eff", {"base": p.spec, "aux": aux.kind, "gamma": gamma},
    )


def aux_range(aux: AuxiliarySpec, p: Potential, resolution: int = 257, **kwargs) -> RangeReport:
    """Range ``M~`` of the auxiliary function over the closed cube."""
    validate_aux(aux, p)
    return range_of(lambda x: aux_value(aux, p, x), p.dim, resolution, **kwargs)


def aux_to_config(aux: AuxiliarySpec) -> dict:
    out = {"kind": aux.kind}
    if getattr(aux, "eps", None) is not None:
        out["eps"] = aux.eps
    if isinstance(aux, Homotopy) and aux.v0 is not None:
        out["v0"] = aux.v0.spec
    return out


# ---------------------------------------------------------------------------
# one-dimensional property checks


def _roots_1d(fn, resolution: int) -> np.ndarray:
    from scipy.optimize import brentq

    xs = np.linspace(-1.0, 1.0, resolution)
    vals = fn(xs)
    roots = list(xs[vals == 0.0])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    roots += [brentq(lambda s: float(fn(np.array([s]))[0]), xs[i], xs[i + 1], xtol=1e-15)
              for i in idx]
    return np.unique(np.array(roots, dtype=float))


def critical_points_1d(p: Potential, resolution: int = 4097):
    """Strict interior local minima and maxima of a 1-D potential, refined by root finding."""
    if p.dim != 1:
        raise ConfigurationError("critical_points_1d needs n = 1")
    crit = _roots_1d(lambda s: p.grad(s[:, None])[:, 0], resolution)
    crit = crit[np.abs(crit) < 1.0]
    curv = p.hess(crit[:, None])[:, 0, 0] if len(crit) else np.array([])
    return crit[curv > 0], crit[curv < 0]


def inflection_points_1d(p: Potential, resolution: int = 4097) -> np.ndarray:
    return _roots_1d(lambda s: p.hess(s[:, None])[:, 0, 0], resolution)


def sign_test(p: Potential, eps=0.1, resolution: int = 4097) -> dict:
    """Hessian-quadratic auxiliary is positive at maxima and negative at minima."""
    aux = HessianQuadratic((float(eps),))
    mins, maxs = critical_points_1d(p, resolution)
    at_min = aux_value(aux, p, mins[:, None]) if len(mins) else np.array([])
    at_max = aux_value(aux, p, maxs[:, None]) if len(maxs) else np.array([])
    return {
        "minima": mins.tolist(), "maxima": maxs.tolist(),
        "violations": int(np.sum(at_min >= 0) + np.sum(at_max <= 0)),
    }


def contact_test(p: Potential, eps=0.1, gamma: float = 1.0, resolution: int = 4097,
                 threshold: float = 1e-10) -> dict:
    """Where ``|V''| <= threshold`` the kinetic auxiliary leaves ``W`` equal to ``V``.

    Probes the grid plus the root-refined inflection points.
    """
    aux = Kinetic1D(float(eps))
    xs = np.concatenate([np.linspace(-1.0, 1.0, resolution), inflection_points_1d(p, resolution)])
    pts = xs[:, None]
    d2 = p.hess(pts)[:, 0, 0]
    d1 = p.grad(pts)[:, 0]
    sel = np.abs(d2) <= threshold
    W = make_effective(p, aux, gamma).value(pts[sel])
    gap = np.abs(W - p.value(pts[sel]))
    allowed = gamma * threshold * (eps ** 2 + d1[sel] ** 2)
    return {"points": int(sel.sum()), "violations": int(np.sum(gap > allowed)),
            "max_gap": float(gap.max()) if sel.any() else 0.0}
