"""Euler-Maruyama simulation of the diffusion network.

The internal state ``u`` follows

    du = -grad W(x) dt + sqrt(2T / f(x)) dB,    x = tanh(u / w),

with ``W = V - Gamma * Vaux`` and ``f(y) = (1 - y^2) / w``. The equivalent
x-space equation, obtained by Ito's rule, is

    dx = (-f(x) grad W(x) + T f'(x)) dt + sqrt(2 T f(x)) dB,

and is offered as a second integrator. Both are vectorised over a batch of
independent trajectories; each trajectory draws its Gaussian increments from
its own Philox stream split off a master seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .auxiliary import AuxiliarySpec, Contraction, NoAux, aux_grad, aux_value, validate_aux
from .errors import ConfigurationError, DomainError, StepError
from .potentials import Potential, as_points, potential_range
from .schedules import ConstantT, QuantumSchedule, ThermalSchedule, ZeroGamma

X_REFLECT = 1.0 - 1e-9
BLOCK = 4096


@dataclass(frozen=True)
class LinkFunctions:
    """``g(u) = tanh(u/w)`` and its slope ``f(y) = g'(g^{-1}(y)) = (1 - y^2)/w``."""

    w: float = 1.0

    def __post_init__(self):
        if not self.w > 0:
            raise ConfigurationError(f"gain w must be positive, got {self.w}")

    def g(self, u):
        return np.tanh(np.asarray(u, dtype=float) / self.w)

    def g_inv(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) >= 1.0):
            raise DomainError("g^{-1} needs |x| < 1")
        return self.w * np.arctanh(x)

    def f(self, y):
        y = np.asarray(y, dtype=float)
        return (1.0 - y * y) / self.w

    def f_prime(self, y):
        return -2.0 * np.asarray(y, dtype=float) / self.w


def link_eval(lf: LinkFunctions, u=None, x=None):
    """Return the consistent triple ``(x, u, f(x))`` from either ``u`` or ``x``."""
    if (u is None) == (x is None):
        raise ConfigurationError("pass exactly one of u or x")
    if u is not None:
        u = np.asarray(u, dtype=float)
        x = lf.g(u)
    else:
        x = np.asarray(x, dtype=float)
        u = lf.g_inv(x)
    return x, u, lf.f(x)


@dataclass
class NetworkState:
    t: float
    u: np.ndarray
    x: np.ndarray

    @classmethod
    def from_x(cls, x, lf: LinkFunctions, t: float = 0.0) -> "NetworkState":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(t, lf.g_inv(x), x)


@dataclass(frozen=True)
class SimConfig:
    """Integrator settings.

    ``x0=None`` draws the start uniformly from ``(-0.5, 0.5)^n`` using the
    trajectory's own stream. ``u_max=None`` picks :func:`default_u_max` at the
    initial temperature.
    """

    dt: float = 1e-3
    steps: int = 1000
    stride: int = 1
    seed: int = 0
    x0: Optional[Sequence[float]] = None
    mode: str = "u_space"
    u_max: Optional[float] = None
    w: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.stride < 1 or self.steps < 0:
            raise ConfigurationError("stride must be >= 1 and steps >= 0")
        if self.mode not in ("u_space", "x_space"):
            raise ConfigurationError(f"unknown integrator mode {self.mode!r}")
        if self.x0 is not None and np.any(np.abs(np.asarray(self.x0, dtype=float)) >= 1.0):
            raise ConfigurationError("initial x must be strictly interior")
        if self.u_max is not None and not self.u_max > 0:
            raise ConfigurationError("u_max must be positive")

    @property
    def link(self) -> LinkFunctions:
        return LinkFunctions(self.w)

    def clamp(self, T0: float) -> float:
        return default_u_max(self.w, T0, self.dt) if self.u_max is None else float(self.u_max)


@dataclass
class Trajectory:
    """Recorded ``(t, x, V(x), W(x))`` samples of one path."""

    t: np.ndarray
    x: np.ndarray
    V: np.ndarray
    W: np.ndarray

    def __len__(self):
        return len(self.t)

    def to_csv(self, path) -> None:
        n = self.x.shape[1]
        header = ",".join(["t"] + [f"x{k + 1}" for k in range(n)] + ["V", "W"])
        data = np.column_stack([self.t, self.x, self.V, self.W])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        data = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
        return cls(data[:, 0], data[:, 1:-2], data[:, -2], data[:, -1])


# --- target sets -----------------------------------------------------------


@dataclass(frozen=True)
class Superlevel:
    """``{x : V(x) >= theta + inf V}``."""

    theta: float
    kind = "superlevel"

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigurationError("superlevel theta must be positive")

    def mask(self, p: Potential, x) -> np.ndarray:
        return p.value(as_points(x, p.dim)) >= self.theta + infimum(p)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float
    kind = "ball"

    def mask(self, p: Potential, x) -> np.ndarray:
        x = as_points(x, p.dim)
        c = np.broadcast_to(np.asarray(self.center, dtype=float), (p.dim,))
        return np.linalg.norm(x - c, axis=-1) <= self.radius


@dataclass(frozen=True)
class BallUnion:
    balls: tuple
    kind = "ball_union"

    def mask(self, p: Potential, x) -> np.ndarray:
        out = np.zeros(as_points(x, p.dim).shape[:-1], dtype=bool)
        for b in self.balls:
            out |= b.mask(p, x)
        return out


TargetSet = Union[Superlevel, Ball, BallUnion]

_INF_CACHE: dict = {}


def infimum(p: Potential, resolution: int = 4097) -> float:
    """``inf V`` from known minimizers, else from a dense grid (cached per potential)."""
    key = id(p)
    hit = _INF_CACHE.get(key)
    if hit is not None and hit[0] is p:
        return hit[1]
    if p.minimizers is not None:
        val = float(np.min(p.value(p.minimizers)))
    else:
        res = resolution if p.dim == 1 else (257 if p.dim == 2 else 65)
        val = potential_range(p, res).inf
    _INF_CACHE[key] = (p, val)
    return val


def ground_ball(p: Potential, radius: float) -> BallUnion:
    """Union of balls of ``radius`` around the known global minimizers."""
    if p.minimizers is None:
        raise ConfigurationError(f"{p.name} has no known minimizers")
    return BallUnion(tuple(Ball(tuple(m), radius) for m in p.minimizers))


def target_from_config(cfg: dict, p: Potential) -> TargetSet:
    kind = cfg.get("kind")
    if kind == "superlevel":
        return Superlevel(float(cfg["theta"]))
    if kind == "ball":
        return Ball(tuple(np.broadcast_to(cfg["center"], (p.dim,)).tolist()), float(cfg["radius"]))
    if kind == "ground":
        return ground_ball(p, float(cfg["radius"]))
    if kind == "ball_union":
        return BallUnion(tuple(Ball(tuple(b["center"]), float(b["radius"])) for b in cfg["balls"]))
    raise ConfigurationError(f"unknown target kind {kind!r}")


# --- single-step pieces ----------------------------------------------------


def _grad_w(p: Potential, aux: AuxiliarySpec, gamma: float, x: np.ndarray) -> np.ndarray:
    g = p.grad(x)
    if gamma != 0.0 and not isinstance(aux, NoAux):
        g = g - gamma * aux_grad(aux, p, x)
    return g


def drift(state, p: Potential, aux: AuxiliarySpec, gamma: float) -> np.ndarray:
    """``-grad_x W`` at the state's x (or at an array of points)."""
    x = state.x if isinstance(state, NetworkState) else np.asarray(state, dtype=float)
    return -_grad_w(p, aux, float(gamma), as_points(x, p.dim))


def diffusion_coeffs(x, T: float, lf: LinkFunctions) -> np.ndarray:
    """Componentwise ``sqrt(2T / f(x))``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= 1.0):
        raise DomainError("diffusion coefficients need |x| < 1")
    if T < 0:
        raise ConfigurationError("temperature must be nonnegative")
    if T == 0:
        return np.zeros_like(x)
    return np.sqrt(2.0 * T / lf.f(x))


def _advance(u, x, g, T, dt, xi, w, u_max, mode):
    # one Euler-Maruyama step for a batch; returns new (u, x)
    if mode == "u_space":
        # sqrt(2T/f(x)) written in u to avoid the 1 - x^2 cancellation
        noise = math.sqrt(2.0 * T * w * dt) * np.cosh(u / w) * xi if T > 0.0 else 0.0
        u = u - g * dt + noise
        np.minimum(u, u_max, out=u)
        np.maximum(u, -u_max, out=u)
        return u, np.tanh(u / w)
    x = _x_step(x, g, T, dt, xi, w)
    return w * np.arctanh(x), x


def _x_step(x, g, T, dt, xi, w):
    f = (1.0 - x * x) / w
    x = x - (f * g + (2.0 * T / w) * x) * dt
    if T > 0.0:
        x += np.sqrt((2.0 * T * dt) * f) * xi
    if np.abs(x).max() > X_REFLECT:
        x = np.where(x > X_REFLECT, 2.0 * X_REFLECT - x, x)
        x = np.where(x < -X_REFLECT, -2.0 * X_REFLECT - x, x)
        np.clip(x, -X_REFLECT, X_REFLECT, out=x)
    return x


def default_u_max(w: float, T0: float, dt: float) -> float:
    """Clamp level where the one-step noise std in ``u`` reaches ``w``, capped at ``15 w``.

    Beyond it one step can carry ``u`` from one clamp to the other and the
    chain locks onto the faces.
    """
    if T0 <= 0:
        return 15.0 * w
    ratio = w / math.sqrt(2.0 * T0 * w * dt)
    return min(15.0 * w, w * math.acosh(max(ratio, 1.0)))


def em_step(state: NetworkState, dt: float, T: float, gamma: float, rng: np.random.Generator,
            p: Potential, aux: AuxiliarySpec = NoAux(), lf: LinkFunctions = LinkFunctions(),
            mode: str = "u_space", u_max: Optional[float] = None) -> NetworkState:
    """Advance one state by a single Euler-Maruyama step."""
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    u_max = default_u_max(lf.w, T, dt) if u_max is None else u_max
    x = np.atleast_1d(np.asarray(state.x, dtype=float))
    u = np.atleast_1d(np.asarray(state.u, dtype=float))
    g = _grad_w(p, aux, float(gamma), x)
    xi = rng.standard_normal(x.shape) if T > 0 else np.zeros_like(x)
    u_new, x_new = _advance(u.copy(), x, g, float(T), dt, xi, lf.w, u_max, mode)
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(x_new))):
        raise StepError("non-finite proposal", state=state)
    return NetworkState(state.t + dt, u_new, x_new)


# --- integration loop ------------------------------------------------------


def trajectory_streams(seed: int, count: int) -> list:
    """Independent Philox generators split deterministically from ``seed``."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def _single_stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def _initial_x(cfg: SimConfig, n: int, rngs) -> np.ndarray:
    if cfg.x0 is not None:
        x0 = np.broadcast_to(np.asarray(cfg.x0, dtype=float), (n,))
        return np.tile(x0, (len(rngs), 1))
    return np.stack([r.uniform(-0.5, 0.5, size=n) for r in rngs])


def _noise_off(th: ThermalSchedule) -> bool:
    return isinstance(th, ConstantT) and th.T == 0.0


def _integrate(cfg: SimConfig, p: Potential, aux: AuxiliarySpec, th: ThermalSchedule,
               q: QuantumSchedule, rngs, record_steps: np.ndarray):
    """Run a batch; return states at ``record_steps`` plus a per-member failure mask.

    Members that go non-finite are frozen and flagged. A single-member batch
    raises :class:`StepError` instead.
    """
    validate_aux(aux, p)
    n, B = p.dim, len(rngs)
    w, dt, mode = cfg.w, cfg.dt, cfg.mode
    u_max = cfg.clamp(float(th.at(0.0)))
    x = _initial_x(cfg, n, rngs)
    u = w * np.arctanh(x)
    failed = np.zeros(B, dtype=bool)
    rec_x = np.empty((len(record_steps), B, n))
    rec_list = record_steps.tolist()
    rec_i = 0
    if rec_list and rec_list[0] == 0:
        rec_x[0] = x
        rec_i = 1
    next_rec = rec_list[rec_i] if rec_i < len(rec_list) else -1
    use_aux = not isinstance(aux, NoAux) and not isinstance(q, ZeroGamma)
    contraction = isinstance(aux, Contraction)
    quiet = _noise_off(th)
    grad = p.grad
    inv_w = 1.0 / w
    step = 0
    while step < cfg.steps:
        blk = min(BLOCK, cfg.steps - step)
        t = (step + np.arange(blk)) * dt
        T_blk = np.asarray(th.at(t), dtype=float)
        G_blk = np.asarray(q.at(t)[0], dtype=float).tolist()
        if quiet:
            noise = np.zeros((blk, B, n))
        else:
            noise = np.stack([r.standard_normal((blk, n)) for r in rngs], axis=1)
        if mode == "u_space":
            noise *= np.sqrt(2.0 * T_blk * w * dt)[:, None, None]
        T_list = T_blk.tolist()
        for k in range(blk):
            g = grad(x)
            gam = G_blk[k]
            if use_aux and gam != 0.0:
                g = (1.0 - gam) * g if contraction else g - gam * aux_grad(aux, p, x)
            if mode == "u_space":
                if quiet:
                    u = u - g * dt
                else:
                    u = u - g * dt + np.cosh(u * inv_w) * noise[k]
                np.minimum(u, u_max, out=u)
                np.maximum(u, -u_max, out=u)
                x = np.tanh(u * inv_w)
            else:
                x = _x_step(x, g, T_list[k], dt, noise[k], w)
            step += 1
            if step == next_rec:
                rec_x[rec_i] = x
                rec_i += 1
                next_rec = rec_list[rec_i] if rec_i < len(rec_list) else -1
        if mode == "x_space":
            u = w * np.arctanh(x)
        bad = ~np.isfinite(u).all(axis=1) | ~np.isfinite(x).all(axis=1)
        if bad.any():
            if B == 1:
                raise StepError(f"non-finite state within steps {step - blk}..{step}",
                                state=None, trajectory=rec_x[:rec_i, 0], step=step)
            failed |= bad
            u[bad] = 0.0
            x[bad] = 0.0
    failed_rec = ~np.isfinite(rec_x).all(axis=(0, 2))
    return rec_x, failed | failed_rec


def _record_steps(cfg: SimConfig) -> np.ndarray:
    return np.arange(0, cfg.steps + 1, cfg.stride)


def _finish(p, aux, q, t, x) -> Trajectory:
    V = p.value(x)
    G, _ = q.at(t)
    Vaux = aux_value(aux, p, x) if not isinstance(aux, NoAux) else np.zeros_like(V)
    return Trajectory(t, x, V, V - np.asarray(G) * Vaux)


def simulate(cfg: SimConfig, p: Potential, aux: AuxiliarySpec = NoAux(),
             th: ThermalSchedule = ConstantT(0.0), q: QuantumSchedule = ZeroGamma()) -> Trajectory:
    """Integrate one path and record every ``stride``-th state.

    On a non-finite step a :class:`StepError` is raised whose ``trajectory``
    holds the partial record.
    """
    steps = _record_steps(cfg)
    try:
        rec, _ = _integrate(cfg, p, aux, th, q, [_single_stream(cfg.seed)], steps)
    except StepError as err:
        part = np.asarray(err.trajectory)
        t = steps[:len(part)] * cfg.dt
        err.trajectory = _finish(p, aux, q, t, part) if len(part) else None
        raise
    t = steps * cfg.dt
    return _finish(p, aux, q, t, rec[:, 0, :])


# --- ensembles -------------------------------------------------------------


@dataclass
class EnsembleReport:
    times: list
    hit_fractions: list
    mean_v: list
    min_v: list
    failures: int
    n_traj: int
    seed: int
    histograms: list = field(default_factory=list)
    states: Optional[np.ndarray] = None
    config: dict = field(default_factory=dict)

    @property
    def final_x(self) -> Optional[np.ndarray]:
        return None if self.states is None or not len(self.states) else self.states[-1]

    def fractions(self, p: Potential, target: "TargetSet") -> list:
        """Hit fractions of another target at the recorded checkpoints."""
        return [float(np.mean(target.mask(p, xs))) if len(xs) else float("nan")
                for xs in self.states]

    def to_dict(self) -> dict:
        return {
            "times": list(map(float, self.times)),
            "hit_fractions": list(map(float, self.hit_fractions)),
            "meanV": list(map(float, self.mean_v)),
            "minV": list(map(float, self.min_v)),
            "failures": int(self.failures),
            "n_traj": int(self.n_traj),
            "seed": int(self.seed),
            "config": self.config,
        }


def histogram(samples, bins: int = 64, dim: int = 1) -> np.ndarray:
    """Normalised histogram on the uniform ``bins``-per-axis grid of ``(-1, 1)^dim``."""
    samples = np.asarray(samples, dtype=float).reshape(-1, dim)
    edges = [np.linspace(-1.0, 1.0, bins + 1)] * dim
    h, _ = np.histogramdd(samples, bins=edges)
    total = h.sum()
    return h / total if total > 0 else h


def run_ensemble(cfg: SimConfig, p: Potential, aux: AuxiliarySpec, th: ThermalSchedule,
                 q: QuantumSchedule, n_traj: int, target: TargetSet,
                 eval_times: Sequence[float], bins: int = 64) -> EnsembleReport:
    """Run ``n_traj`` independent paths and tabulate ``P(x_t in S)`` at ``eval_times``.

    Trajectory ``i`` uses the ``i``-th child of ``SeedSequence(cfg.seed)``.
    """
    if n_traj < 1:
        raise ConfigurationError("need at least one trajectory")
    eval_steps = np.array(sorted({int(round(t / cfg.dt)) for t in eval_times}))
    if len(eval_steps) and (eval_steps[0] < 0 or eval_steps[-1] > cfg.steps):
        raise ConfigurationError("evaluation times must lie within the simulated horizon")
    rec, failed = _integrate(cfg, p, aux, th, q, trajectory_streams(cfg.seed, n_traj), eval_steps)
    ok = ~failed
    fracs, mean_v, min_v, hists = [], [], [], []
    for i in range(len(eval_steps)):
        xs = rec[i, ok]
        V = p.value(xs)
        fracs.append(float(np.mean(target.mask(p, xs))) if len(xs) else float("nan"))
        mean_v.append(float(V.mean()) if len(xs) else float("nan"))
        min_v.append(float(V.min()) if len(xs) else float("nan"))
        if p.dim <= 3:
            hists.append(histogram(xs, bins, p.dim))
    return EnsembleReport(
        times=(eval_steps * cfg.dt).tolist(), hit_fractions=fracs, mean_v=mean_v, min_v=min_v,
        failures=int(failed.sum()), n_traj=n_traj, seed=cfg.seed, histograms=hists,
        states=rec[:, ok],
    )


def simulate_batch(cfg: SimConfig, p: Potential, aux: AuxiliarySpec, th: ThermalSchedule,
                   q: QuantumSchedule, n_traj: int) -> list:
    """``n_traj`` full trajectories on the ensemble seed-splitting rule.

    Members that go non-finite are dropped.
    """
    steps = _record_steps(cfg)
    rec, failed = _integrate(cfg, p, aux, th, q, trajectory_streams(cfg.seed, n_traj), steps)
    t = steps * cfg.dt
    return [_finish(p, aux, q, t, rec[:, i, :]) for i in range(n_traj) if not failed[i]]
