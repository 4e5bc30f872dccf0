"""Single shots: first zero, critical points, spike count, energy split."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .ode_core import (
    Params,
    State,
    TerminalReason,
    Tolerances,
    Trajectory,
    IntegrationError,
    cot_weighted_integral,
    integrate_ivp,
    potential_F,
    rhs,
    _theta_of_x,
)

__all__ = [
    "PointKind",
    "CriticalPoint",
    "ShootProfile",
    "EnergySplit",
    "DegenerateShotError",
    "shoot",
    "first_zero",
    "critical_points",
    "energy_split",
    "zero_energy_identity_residual",
]


class DegenerateShotError(ValueError):
    """Shooting value outside the open interval (0, 1)."""


class PointKind(Enum):
    MAX = "Max"
    MIN = "Min"


@dataclass(frozen=True)
class CriticalPoint:
    tau: float
    value: float
    kind: PointKind
    index: int  # 1-based position in theta order


@dataclass
class ShootProfile:
    """One classified shot: first zero, ordered criticals, spike count."""

    params: Params
    theta_zero: Optional[float]
    criticals: list[CriticalPoint]
    spikes: int
    trajectory: Trajectory

    @property
    def kinds_alternate(self) -> bool:
        """Max/Min strictly alternate along theta (true for positive shots)."""
        ks = [c.kind for c in self.criticals]
        return all(a != b for a, b in zip(ks, ks[1:]))


@dataclass(frozen=True)
class EnergySplit:
    """Potential bookkeeping between the start and a reference maximum t_ref:

    F(u(t_ref)) = F(alpha) + J1 + J2, with J1 the (non-positive) loss on
    (0, pi/4) and J2 the (non-negative) gain on (pi/4, t_ref).
    """

    t_ref: float
    j1: float
    j2: float
    f_alpha: float
    f_peak: float

    @property
    def residual(self) -> float:
        return self.f_peak - self.f_alpha - self.j1 - self.j2


def _du_root_in_step(traj: Trajectory, i: int) -> float:
    """Refine the du sign change inside step [i, i+1]; returns theta."""
    if traj.xsol is not None:
        g = lambda x: float(traj.xsol(x)[1])
        x_root = brentq(g, traj.xs[i], traj.xs[i + 1], xtol=1e-14)
        return float(_theta_of_x(x_root))
    g = lambda t: traj.eval(t)[1]
    return float(brentq(g, traj.thetas[i], traj.thetas[i + 1],
                        xtol=1e-14))


def critical_points(traj: Trajectory, event_tol: float = 1e-12) -> list[CriticalPoint]:
    """Locate and classify every sign change of u' on the trajectory.

    Kind follows the derivative transition (falling du = Max).  A node where
    du vanishes exactly between same-signed neighbours is a double root and
    is classified by the sign of u'' from the equation.
    """
    dus = traj.dus
    n = len(dus)
    signs = np.sign(dus)
    found: list[tuple[float, PointKind]] = []
    for i in range(n - 1):
        if signs[i] == 0.0:
            if 0 < i and signs[i - 1] != 0.0 and signs[i + 1] != 0.0:
                tau = float(traj.thetas[i])
                if signs[i - 1] != signs[i + 1]:
                    kind = PointKind.MAX if signs[i - 1] > 0 else PointKind.MIN
                else:
                    kind = _tie_break_kind(traj, tau, float(traj.us[i]))
                found.append((tau, kind))
            continue
        if signs[i] * signs[i + 1] < 0.0:
            tau = _du_root_in_step(traj, i)
            kind = PointKind.MAX if signs[i] > 0 else PointKind.MIN
            found.append((tau, kind))
    out: list[CriticalPoint] = []
    for tau, kind in found:
        if out and abs(tau - out[-1].tau) <= max(event_tol, 1e-12):
            continue
        value = float(traj.eval(tau)[0])
        out.append(CriticalPoint(tau=tau, value=value, kind=kind,
                                 index=len(out) + 1))
    return out


def _tie_break_kind(traj: Trajectory, tau: float, u: float) -> PointKind:
    """Classify a tangential du root by the curvature the equation forces."""
    if traj.lam is not None:
        upp = 4.0 * traj.lam * u if traj.linear else rhs(tau, u, 0.0, traj.lam)
        return PointKind.MAX if upp < 0.0 else PointKind.MIN
    return PointKind.MAX if u > 1.0 else PointKind.MIN


def first_zero(traj: Trajectory, event_tol: float = 1e-12) -> Optional[float]:
    """Smallest theta with u = 0, refined by bracketed root finding.

    Returns None when u stays positive over the whole span.
    """
    if traj.terminal_reason == TerminalReason.HIT_ZERO:
        return traj.terminal_theta
    us = traj.us
    if us[0] <= 0.0:
        return traj.thetas[0] if us[0] == 0.0 else None
    idx = None
    for i in range(len(us) - 1):
        if us[i] > 0.0 >= us[i + 1]:
            idx = i
            break
    if idx is None:
        return None
    if traj.xsol is not None:
        g = lambda x: float(traj.xsol(x)[0])
        x_root = brentq(g, traj.xs[idx], traj.xs[idx + 1], xtol=1e-15)
        return float(_theta_of_x(x_root))
    g = lambda t: traj.eval(t)[0]
    return float(brentq(g, traj.thetas[idx], traj.thetas[idx + 1],
                        xtol=min(event_tol, 1e-13)))


def shoot(params: Params, tol: Tolerances = Tolerances()) -> ShootProfile:
    """Run one shot and classify it.

    Integration halts at the first zero; critical points are bracketed on the
    dense output and refined; spikes are the maxima strictly before the first
    zero (or the cap, when the solution stays positive).
    """
    if not (0.0 < params.alpha < 1.0):
        raise DegenerateShotError(
            f"shooting value must lie in (0, 1), got {params.alpha}")
    traj = integrate_ivp(params, tol, stop_on_zero=True)
    if traj.terminal_reason == TerminalReason.BLOWUP:
        raise IntegrationError(
            f"overflow guard tripped at theta={traj.terminal_theta:.6f} "
            f"(alpha={params.alpha}, lambda={params.lam})")
    theta_zero = (traj.terminal_theta
                  if traj.terminal_reason == TerminalReason.HIT_ZERO else None)
    crits = critical_points(traj, tol.event_tol)
    spikes = sum(1 for c in crits if c.kind is PointKind.MAX)
    return ShootProfile(params=params, theta_zero=theta_zero, criticals=crits,
                        spikes=spikes, trajectory=traj)


def energy_split(profile: ShootProfile, t_ref: float) -> EnergySplit:
    """Split the potential change up to t_ref into the two half-interval parts.

    J1 = -2*eps^2 * int_0^{pi/4} cot(2t) u'^2 dt   (<= 0),
    J2 = -2*eps^2 * int_{pi/4}^{t_ref} cot(2t) u'^2 dt   (>= 0).

    The bookkeeping F(u(t_ref)) = F(alpha) + J1 + J2 is exact when t_ref is a
    critical point of the shot (the kinetic term vanishes there).
    """
    traj = profile.trajectory
    quarter = math.pi / 4.0
    if not (quarter < t_ref < math.pi / 2.0):
        raise ValueError(f"t_ref must lie in (pi/4, pi/2), got {t_ref}")
    if t_ref > traj.span[1] * (1.0 + 1e-15):
        raise ValueError(f"t_ref={t_ref} beyond trajectory span {traj.span}")
    t_ref = min(t_ref, traj.span[1])
    eps2 = profile.params.epsilon ** 2
    j1 = -2.0 * eps2 * cot_weighted_integral(traj, 0.0, quarter)
    j2 = -2.0 * eps2 * cot_weighted_integral(traj, quarter, t_ref)
    u_ref = float(traj.eval(t_ref)[0])
    return EnergySplit(t_ref=t_ref, j1=j1, j2=j2,
                       f_alpha=potential_F(profile.params.alpha),
                       f_peak=potential_F(u_ref))


def zero_energy_identity_residual(profile: ShootProfile) -> Optional[float]:
    """Residual of the first-zero energy identity, relative to its term scale.

    At the first zero theta_1 the shot satisfies

        u'(theta_1)^2 / 2 + 2 * int_0^{theta_1} cot(2t) u'(t)^2 dt
            = -lambda * F(alpha).

    Zeros can sit exponentially close to pi/2 where u' is huge and the two
    sides cancel catastrophically, so the residual is normalized by
    max(1, |terms|).  Returns None when the shot never vanishes.
    """
    if profile.theta_zero is None:
        return None
    traj = profile.trajectory
    kin = 0.5 * float(traj.dus[-1]) ** 2
    circ = 2.0 * cot_weighted_integral(traj, 0.0, profile.theta_zero)
    pot = profile.params.lam * potential_F(profile.params.alpha)
    scale = max(1.0, abs(kin), abs(circ), abs(pot))
    return abs(kin + circ + pot) / scale
