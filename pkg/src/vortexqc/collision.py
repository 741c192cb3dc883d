"""Controlled-collision phase between a trapped atom and a vortex-core atom.

SI units throughout; phases in radians. Only the dimensionless groups
``upsilon = d0^2 / abar^2``, ``eta = exp(-tau_i^2 / tau_r^2)``,
``omega * tau_r`` and ``tau_bar = tau / tau_r`` enter the phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy.constants import hbar
from scipy.optimize import brentq

from .encoding import RegisterLayout, VortexQubit
from .majorana import FockSpace, Unitary, pair_number
from .quadrature import DEFAULT_MAX_EVALUATIONS, integrate

CALIBRATION_TOLERANCE = 1e-9
BRACKET_RANGE = (1e-3, 1e3)

LI6_OMEGA = 2 * math.pi * 6.6e3
LI6_OMEGA_TAU_R = 3.57


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class CollisionModel:
    omega: float
    a_D: float
    a_V: float
    d0: float
    tau_r: float
    tau_i: float
    tau: float

    def __post_init__(self):
        for name in ("a_D", "a_V", "d0", "tau_r", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.tau_i < 0:
            raise ValueError(f"tau_i must be non-negative, got {self.tau_i!r}")

    @classmethod
    def lithium6(cls, sign: int = 1) -> CollisionModel:
        """6Li estimate: a_D = a_V = 0.4 um, d0 = 10 a_D, tau_r = tau_i = 3.57/omega, tau = 10 tau_r."""
        tau_r = LI6_OMEGA_TAU_R / LI6_OMEGA
        return cls(sign * LI6_OMEGA, 0.4e-6, 0.4e-6, 4e-6, tau_r, tau_r, 10 * tau_r)

    @property
    def a_bar_sq(self) -> float:
        return self.a_D**2 + self.a_V**2

    @property
    def upsilon(self) -> float:
        return self.d0**2 / self.a_bar_sq

    @property
    def eta(self) -> float:
        return math.exp(-((self.tau_i / self.tau_r) ** 2))

    @property
    def tau_bar(self) -> float:
        return self.tau / self.tau_r

    @property
    def omega_tau_r(self) -> float:
        return self.omega * self.tau_r


def _ramp(x2: float, eta: float) -> float:
    # eta (e^x2 - 1) / (1 + eta e^x2), rewritten to stay finite for large x2.
    e = math.exp(-x2)
    return eta * (1.0 - e) / (e + eta)


def trajectory_z0(t: float, model: CollisionModel, clamp: bool = True) -> float:
    """Trap height above the vortex plane; zero at t = 0, tending to d0 far out."""
    if clamp:
        t = max(-model.tau, min(model.tau, t))
    return model.d0 * _ramp((t / model.tau_r) ** 2, model.eta)


def collision_energy(i: int, j: int, t: float, model: CollisionModel, relative: bool = False) -> float:
    """Collision energy for flying state ``i`` and vortex-pair occupancy ``j`` (J).

    Zero unless both are occupied. The vortex zero-mode energy vanishes and the
    flying-qubit energy is absorbed into its definition, so this is the only
    state-dependent term. ``relative`` divides by ``hbar * |omega|``.
    """
    if i not in (0, 1) or j not in (0, 1):
        raise ValueError("occupations are 0 or 1")
    if not (i and j):
        return 0.0
    z0 = trajectory_z0(t, model)
    shape = math.exp(-(z0**2) / model.a_bar_sq)
    if relative:
        return math.copysign(shape, model.omega)
    return hbar * model.omega * shape


def phase_integrand(x: float, upsilon: float, eta: float) -> float:
    return math.exp(-upsilon * _ramp(x * x, eta))


class PhaseResult(NamedTuple):
    theta: float
    evaluations: int
    error: float


def collision_phase(
    model: CollisionModel,
    tol: float = 1e-10,
    method: str = "gauss-kronrod",
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> PhaseResult:
    """Controlled collision phase in scaled time, split at the even integrand's peak."""
    if tol < 1e-12:
        raise ValueError("tolerance below 1e-12 is not supported")
    if model.omega == 0:
        return PhaseResult(0.0, 0, 0.0)
    scale = abs(model.omega_tau_r)
    ups, eta = model.upsilon, model.eta
    f = lambda x: phase_integrand(x, ups, eta)
    # Absolute tolerance on theta, shared by the two halves.
    part_tol = tol / (2 * scale)
    left = integrate(f, -model.tau_bar, 0.0, part_tol, method, max_evaluations)
    right = integrate(f, 0.0, model.tau_bar, part_tol, method, max_evaluations - left.evaluations)
    theta = model.omega_tau_r * (left.value + right.value)
    return PhaseResult(theta, left.evaluations + right.evaluations, scale * (left.error + right.error))


def _scaled(model: CollisionModel, free_parameter: str, k: float) -> CollisionModel:
    if free_parameter == "omega":
        return replace(model, omega=model.omega * k)
    if free_parameter == "tau_r":
        # Whole schedule scales together so eta and tau_bar stay fixed.
        return replace(model, tau_r=model.tau_r * k, tau_i=model.tau_i * k, tau=model.tau * k)
    raise ValueError(f"free_parameter must be 'tau_r' or 'omega', got {free_parameter!r}")


def calibrate(
    model: CollisionModel,
    free_parameter: str,
    theta_target: float,
    tol: float = CALIBRATION_TOLERANCE,
    grid: int = 25,
) -> CollisionModel:
    """Rescale ``tau_r`` (with the whole time schedule) or ``omega`` to hit ``theta_target``."""
    if theta_target == 0:
        raise CalibrationError("target phase must be nonzero")
    if model.omega == 0:
        raise CalibrationError("omega = 0 gives zero phase for every scaling")

    def theta(k: float) -> float:
        return collision_phase(_scaled(model, free_parameter, k), tol=1e-12).theta

    ks = np.geomspace(*BRACKET_RANGE, grid)
    values = np.array([theta(k) for k in ks])
    steps = np.diff(values)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise CalibrationError("phase is not monotonic in the free parameter over the bracket")
    residual = values - theta_target
    crossings = np.flatnonzero(np.sign(residual[:-1]) != np.sign(residual[1:]))
    if residual[0] == 0:
        k = ks[0]
    elif not crossings.size:
        raise CalibrationError(
            f"no bracket for theta={theta_target} in {BRACKET_RANGE[0]:g}..{BRACKET_RANGE[1]:g} x {free_parameter}"
        )
    else:
        c = crossings[0]
        k = brentq(lambda k: theta(k) - theta_target, ks[c], ks[c + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    adjusted = _scaled(model, free_parameter, k)
    achieved = collision_phase(adjusted, tol=1e-12).theta
    if abs(achieved - theta_target) > tol:
        raise CalibrationError(f"calibration reached {achieved}, target {theta_target}")
    return adjusted


CP_SPACE = FockSpace(1, 1)


def cp_gate(theta: float) -> Unitary:
    """diag(1, 1, 1, e^{i theta}) on |n_F n_V> in the order 00, 01, 10, 11."""
    return Unitary(CP_SPACE, np.diag([1, 1, 1, np.exp(1j * theta)]).astype(complex), "collision")


def cp_unitary(layout: RegisterLayout, flying: str, vortex: str, theta: float) -> Unitary:
    """The collision gate acting on a flying register and the first pair of a vortex qubit."""
    space = layout.space
    f_bit = layout.space.qubit_bit(layout[flying].register)
    n_f = (np.arange(space.dim) >> f_bit) & 1
    n_v = pair_number(space, layout[vortex].pairs[0])
    return Unitary(space, np.diag(np.exp(1j * theta * n_f * n_v)), "collision")


class PhaseGate(NamedTuple):
    phi: float
    matrix: np.ndarray
    evaluations: int
    error: float


def tunneling_phase_gate(
    profile: Callable[[float], float], t_p: float, tol: float = 1e-12, method: str = "gauss-kronrod"
) -> PhaseGate:
    """Logical diag(1, e^{i phi}) with phi = (1/hbar) * integral of the splitting over [-t_p, t_p]."""
    if t_p <= 0:
        raise ValueError("t_p must be positive")
    q = integrate(lambda t: profile(t) / hbar, -t_p, t_p, tol, method)
    return PhaseGate(q.value, np.diag([1.0, np.exp(1j * q.value)]), q.evaluations, q.error)


def calibrate_t_p(
    profile: Callable[[float], float],
    target: float = math.pi / 4,
    bracket: tuple[float, float] = (1e-9, 1.0),
    tol: float = CALIBRATION_TOLERANCE,
) -> float:
    """Half-period ``t_p`` at which the accumulated tunneling phase equals ``target``."""
    f = lambda t: tunneling_phase_gate(profile, t).phi - target
    lo, hi = bracket
    if f(lo) * f(hi) > 0:
        raise CalibrationError(f"target phase {target} not bracketed by t_p in {bracket}")
    t_p = brentq(f, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps)
    if abs(f(t_p)) > tol:
        raise CalibrationError(f"t_p calibration missed by {f(t_p):.3e}")
    return t_p


def tunneling_unitary(layout: RegisterLayout, qubit: str | VortexQubit, phi: float) -> Unitary:
    """exp(i phi n) on the qubit's first pair: logical diag(1, e^{i phi})."""
    q = layout[qubit] if isinstance(qubit, str) else qubit
    n = pair_number(layout.space, q.pairs[0])
    return Unitary(layout.space, np.diag(np.exp(1j * phi * n)), "compiled")
