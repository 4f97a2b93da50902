"""Thermal ``T(t)`` and quantum ``Gamma(t)`` schedules."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigurationError


class ScheduleWarning(UserWarning):
    """A schedule pair violates a sufficient condition of the convergence results."""


# --- thermal ---------------------------------------------------------------


@dataclass(frozen=True)
class ConstantT:
    """Fixed temperature. ``T = 0`` switches the noise off (Hopfield limit)."""

    T: float
    kind = "constant"

    def __post_init__(self):
        if not self.T >= 0:
            raise ConfigurationError(f"temperature must be >= 0, got {self.T}")

    def at(self, t):
        return np.full(np.shape(t), float(self.T)) if np.ndim(t) else float(self.T)

    @property
    def T0(self):
        return float(self.T)


@dataclass(frozen=True)
class Logarithmic:
    """``T(t) = T0 / log2(2 + t)``."""

    T0: float
    kind = "logarithmic"

    def __post_init__(self):
        if not self.T0 > 0:
            raise ConfigurationError(f"T0 must be positive, got {self.T0}")

    def at(self, t):
        return self.T0 / np.log2(2.0 + np.asarray(t, dtype=float)) if np.ndim(t) \
            else self.T0 / float(np.log2(2.0 + t))


ThermalSchedule = Union[ConstantT, Logarithmic]


# --- quantum ---------------------------------------------------------------


@dataclass(frozen=True)
class ZeroGamma:
    kind = "zero"

    def at(self, t):
        z = np.zeros(np.shape(t)) if np.ndim(t) else 0.0
        return z, z


@dataclass(frozen=True)
class ConstantGamma:
    gamma0: float
    kind = "constant"

    def __post_init__(self):
        if not self.gamma0 >= 0:
            raise ConfigurationError(f"gamma0 must be >= 0, got {self.gamma0}")

    def at(self, t):
        if np.ndim(t):
            return np.full(np.shape(t), float(self.gamma0)), np.zeros(np.shape(t))
        return float(self.gamma0), 0.0


@dataclass(frozen=True)
class PowerDecay:
    """``Gamma(t) = gamma0 / (1 + t)^p``."""

    gamma0: float
    p: float = 1.0
    kind = "power_decay"

    def __post_init__(self):
        if not self.gamma0 >= 0 or not self.p > 0:
            raise ConfigurationError("power_decay needs gamma0 >= 0 and p > 0")

    def at(self, t):
        s = 1.0 + np.asarray(t, dtype=float)
        val = self.gamma0 * s ** (-self.p)
        der = -self.p * self.gamma0 * s ** (-self.p - 1.0)
        if np.ndim(t):
            return val, der
        return float(val), float(der)


@dataclass(frozen=True)
class LinearToZero:
    """``max(0, gamma0 (1 - t / t_end))``; left derivative at the kink."""

    gamma0: float
    t_end: float
    kind = "linear_to_zero"

    def __post_init__(self):
        if not self.gamma0 >= 0 or not self.t_end > 0:
            raise ConfigurationError("linear_to_zero needs gamma0 >= 0 and t_end > 0")

    def at(self, t):
        tt = np.asarray(t, dtype=float)
        val = np.maximum(0.0, self.gamma0 * (1.0 - tt / self.t_end))
        der = np.where(tt <= self.t_end, -self.gamma0 / self.t_end, 0.0)
        if np.ndim(t):
            return val, der
        return float(val), float(der)


QuantumSchedule = Union[ZeroGamma, ConstantGamma, PowerDecay, LinearToZero]


def thermal_at(s: ThermalSchedule, t):
    return s.at(t)


def quantum_at(s: QuantumSchedule, t):
    """``(Gamma(t), dGamma/dt)``."""
    return s.at(t)


_THERMAL = {"constant": ConstantT, "logarithmic": Logarithmic}
_QUANTUM = {"zero": ZeroGamma, "constant": ConstantGamma, "power_decay": PowerDecay,
            "linear_to_zero": LinearToZero}


def _from_config(table, cfg, what):
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    if kind not in table:
        raise ConfigurationError(f"unknown {what} kind {kind!r}; choose from {sorted(table)}")
    try:
        return table[kind](**cfg)
    except TypeError as exc:
        raise ConfigurationError(f"bad {what} parameters: {exc}") from None


def thermal_from_config(cfg: dict) -> ThermalSchedule:
    return _from_config(_THERMAL, cfg, "thermal")


def quantum_from_config(cfg: dict) -> QuantumSchedule:
    return _from_config(_QUANTUM, cfg, "quantum")


def schedule_to_config(s) -> dict:
    return {"kind": s.kind, **asdict(s)}


# --- joint validity --------------------------------------------------------


@dataclass
class JointReport:
    M: float
    M_tilde: float
    T0: float
    t0_exceeds_2M: bool
    lambda_max: float
    lambda_final: float
    lambda_nonincreasing: bool
    probe_times: np.ndarray
    D_samples: np.ndarray
    m_star_sup: Optional[float] = None
    t0_exceeds_2m_star_sup: Optional[bool] = None
    warnings: list = field(default_factory=list)


def probe_times(horizon: float, probes: int = 65) -> np.ndarray:
    t = np.linspace(0.0, horizon, probes)
    if horizon > 1e-3:
        t = np.union1d(t, np.geomspace(1e-3, horizon, probes))
    return t


def validate_joint(th: ThermalSchedule, q: QuantumSchedule, M: float, M_tilde: float,
                   horizon: float, probes: int = 65,
                   m_star: Optional[Callable[[float], float]] = None) -> JointReport:
    """Check the schedule pair against the joint-annealing conditions.

    Violations (``T(0) <= 2M``; ``Gamma/T`` not nonincreasing) are returned
    in ``warnings`` and emitted as :class:`ScheduleWarning`; nothing raises.
    ``m_star`` maps ``Gamma`` to the range of ``V - Gamma*Vaux``; when given,
    ``T(0)`` is also compared with ``2 sup_t M*(Gamma(t))``.
    """
    if horizon <= 0:
        raise ConfigurationError("horizon must be positive")
    t = probe_times(horizon, probes)
    T = np.asarray(th.at(t), dtype=float)
    G, _ = q.at(t)
    G = np.asarray(G, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(G == 0.0, 0.0, G / T)
        D = 1.0 / T
    T0 = float(th.at(0.0))
    scale = max(1.0, float(np.max(np.abs(lam))))
    nonincreasing = bool(np.all(np.diff(lam) <= 1e-12 * scale))
    report = JointReport(
        M=float(M), M_tilde=float(M_tilde), T0=T0, t0_exceeds_2M=T0 > 2.0 * M,
        lambda_max=float(lam.max()), lambda_final=float(lam[-1]),
        lambda_nonincreasing=nonincreasing, probe_times=t, D_samples=D,
    )
    if m_star is not None:
        sup = max(float(m_star(g)) for g in np.unique(G))
        report.m_star_sup = sup
        report.t0_exceeds_2m_star_sup = T0 > 2.0 * sup
    if isinstance(th, Logarithmic) and not report.t0_exceeds_2M:
        report.warnings.append(f"T0 = {T0:g} does not exceed 2M = {2 * M:g}")
    if not nonincreasing:
        report.warnings.append("Gamma/T is not nonincreasing over the probe horizon")
    for msg in report.warnings:
        warnings.warn(msg, ScheduleWarning, stacklevel=2)
    return report
