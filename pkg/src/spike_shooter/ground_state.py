"""Symmetric positive solutions on the whole interval, by matching tau_k = pi/4.

A shot whose k-th critical point lands exactly on pi/4 has u'(pi/4) = 0 and
extends, by uniqueness, to a solution symmetric about pi/4 that is positive
on all of (0, pi/2).  The matching value alpha0 is found by bisection on the
predicate "tau_k(alpha) < pi/4" (true near alpha = 1, false below the
critical-point threshold) followed by a brentq polish on u'(pi/4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .ode_core import Params, Tolerances, Trajectory, integrate_ivp
from .shooting import PointKind, ShootProfile, critical_points, shoot

__all__ = [
    "GroundState",
    "AlphaStar",
    "WindowViolationError",
    "NoSignChangeError",
    "PredicateAlwaysTrue",
    "PredicateAlwaysFalse",
    "spectral_window",
    "find_alpha_matching_tau",
    "find_ground_state",
    "symmetry_residual",
    "alpha_star",
]

_TIGHT = Tolerances(rel_tol=1e-12, abs_tol=1e-12)

#: Descending probe ladder used to orient bisections on (0, 1).  Matching a
#: late spike position at small eps needs exponentially small alpha (the
#: spike sits near eps*log(1/alpha)), hence the deep geometric tail.
_PROBE_LADDER = (0.9, 0.7, 0.5, 0.3, 0.15, 0.05, 0.02, 0.01,
                 3e-3, 1e-3) + tuple(10.0 ** (-e) for e in range(4, 31, 2))
_ALPHA_NEAR_ONE = 1.0 - 1e-9


class WindowViolationError(ValueError):
    """lambda outside every admissible window, or k beyond the window's depth."""


class NoSignChangeError(RuntimeError):
    """The tau_k = target bracket could not be established."""


class PredicateAlwaysTrue(RuntimeError):
    pass


class PredicateAlwaysFalse(RuntimeError):
    pass


@dataclass
class GroundState:
    """Symmetric positive solution with exactly k maxima on (0, pi/2)."""

    n: int
    k: int
    alpha0: float
    lam: float
    half: Trajectory
    trajectory: Trajectory
    symmetry_residual: float
    maxima: int


@dataclass(frozen=True)
class AlphaStar:
    """Bisection estimate of the k-critical-point threshold in alpha."""

    k: int
    lam: float
    value: float
    bracket: tuple[float, float]


def spectral_window(lam: float) -> int:
    """Index n >= 1 with lam in [-(2n+2)(2n+3), -2n(2n+1)); raises outside."""
    if not lam < -6.0:
        raise WindowViolationError(
            f"lambda={lam} is not below -6, the top of the n=1 window")
    n = 1
    while n < 10 ** 6:
        if -(2 * n + 2) * (2 * n + 3) <= lam < -(2 * n) * (2 * n + 1):
            return n
        n += 1
    raise WindowViolationError(f"no admissible window found for lambda={lam}")


def _tau_k(profile: ShootProfile, k: int) -> Optional[float]:
    if len(profile.criticals) < k:
        return None
    return profile.criticals[k - 1].tau


def find_alpha_matching_tau(lam: float, k: int, target: float,
                            tol: Tolerances = _TIGHT) -> float:
    """Shooting value whose k-th critical point lands on ``target``.

    tau_k(alpha) tends to the k-th critical point of the linearized mode
    (below pi/4 <= target) as alpha -> 1 and exceeds the target, or ceases to
    exist, for small alpha; bisection on that predicate brackets the match,
    then a brentq polish sharpens it.  For target <= pi/4 the polish runs on
    u'(target), which every shot covers; for later targets it runs on
    tau_k itself.
    """
    if not 0.0 < target < math.pi / 2.0:
        raise ValueError(f"target must be in (0, pi/2), got {target}")

    cache: dict[float, ShootProfile] = {}

    def profile_at(alpha: float) -> ShootProfile:
        if alpha not in cache:
            cache[alpha] = shoot(Params.from_lambda(alpha, lam), tol)
        return cache[alpha]

    def predicate(alpha: float) -> bool:
        tau = _tau_k(profile_at(alpha), k)
        return tau is not None and tau < target

    if not predicate(_ALPHA_NEAR_ONE):
        raise NoSignChangeError(
            f"tau_{k} is not below target={target:.6f} even at alpha ~ 1 "
            f"(lambda={lam}); samples: "
            + ", ".join(f"alpha={a:g} tau={_tau_k(profile_at(a), k)}"
                        for a in (_ALPHA_NEAR_ONE, 0.5, 0.1)))
    hi = _ALPHA_NEAR_ONE
    lo = None
    for a in _PROBE_LADDER:
        if predicate(a):
            hi = a
        else:
            lo = a
            break
    if lo is None:
        raise NoSignChangeError(
            f"tau_{k} stays below target={target:.6f} down to "
            f"alpha={_PROBE_LADDER[-1]:g} (lambda={lam})")

    while hi - lo > 1e-4:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid

    if target <= math.pi / 4.0 + 1e-12:
        def g(alpha: float) -> float:
            return float(profile_at(alpha).trajectory.eval(target)[1])
    else:
        def g(alpha: float) -> float:
            tau = _tau_k(profile_at(alpha), k)
            if tau is None:
                return math.pi  # past every admissible value of the residual
            return tau - target

    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if g_lo * g_hi < 0.0:
        return float(brentq(g, lo, hi, xtol=1e-15))
    # polish surrogate is one-signed across the bracket: fall back to the
    # predicate bisection at full depth
    while hi - lo > 1e-15:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def find_ground_state(lam: float, k: int, tol: Tolerances = _TIGHT,
                      grid_size: int = 1024) -> GroundState:
    """Ground state with k maxima for lam in the n-th window, 1 <= k <= n."""
    n = spectral_window(lam)
    if not 1 <= k <= n:
        raise WindowViolationError(
            f"k={k} outside 1..{n} supported by the window of lambda={lam}")
    alpha0 = find_alpha_matching_tau(lam, k, math.pi / 4.0, tol)
    full = integrate_ivp(Params.from_lambda(alpha0, lam), tol, stop_on_zero=True)
    half = integrate_ivp(Params.from_lambda(alpha0, lam, theta_end=math.pi / 4.0),
                         tol)
    crits = critical_points(full, tol.event_tol)
    maxima = sum(1 for c in crits if c.kind is PointKind.MAX)
    gs = GroundState(n=n, k=k, alpha0=alpha0, lam=lam, half=half,
                     trajectory=full, symmetry_residual=math.nan, maxima=maxima)
    gs.symmetry_residual = symmetry_residual(gs, grid_size)
    return gs


def symmetry_residual(gs: GroundState, grid_size: int = 1024) -> float:
    """sup |u(pi/2 - theta) - u(theta)| over a uniform grid.

    Both arguments are evaluated on the continued integration past pi/4, not
    on a reflected copy, so this measures how well the shot extends to the
    symmetric solution.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    traj = gs.trajectory
    hi = traj.span[1]
    lo = math.pi / 2.0 - hi  # mirror of the cap
    grid = np.linspace(lo, math.pi / 4.0, grid_size)
    left = traj.eval(grid)[0]
    right = traj.eval(math.pi / 2.0 - grid)[0]
    return float(np.max(np.abs(right - left)))


def alpha_star(lam: float, k: int, bracket_width: float = 1e-4,
               tol: Tolerances = Tolerances()) -> AlphaStar:
    """Threshold below which shots stop exhibiting k critical points.

    Bisects the predicate "the shot at alpha has at least k critical points
    before its first zero or the cap"; the bracket pins the infimum to
    ``bracket_width``.
    """

    def predicate(alpha: float) -> bool:
        profile = shoot(Params.from_lambda(alpha, lam), tol)
        return len(profile.criticals) >= k

    if not predicate(_ALPHA_NEAR_ONE):
        if any(predicate(a) for a in _PROBE_LADDER):
            raise NoSignChangeError(
                f"criticals >= {k} holds somewhere below alpha ~ 1 but not "
                f"at it (lambda={lam}); the threshold is not monotone here")
        raise PredicateAlwaysFalse(
            f"no sampled alpha gives {k} critical points at lambda={lam}")
    hi = _ALPHA_NEAR_ONE
    lo = None
    for a in _PROBE_LADDER:
        if predicate(a):
            hi = a
        else:
            lo = a
            break
    if lo is None:
        raise PredicateAlwaysTrue(
            f"every sampled alpha down to {_PROBE_LADDER[-1]:g} gives {k} "
            f"critical points (lambda={lam})")
    while hi - lo > bracket_width:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return AlphaStar(k=k, lam=lam, value=0.5 * (lo + hi), bracket=(lo, hi))
