"""Core equation, energy structure, and the singular-start initial value integrator.

The equation family solved here is

    u''(theta) + 2*cot(2*theta)*u'(theta) = f(u)

on (0, pi/2), with f(u) = lam*(u^5 - u) for the shooting problem and
f(w) = 4*lam*w for its linearization at the constant solution u = 1.

Both endpoints are regular singular points of the coefficient cot(2*theta).
Integration starts from an even Taylor series at theta = 0.  Internally the
independent variable is substituted by x = log(tan(theta)), under which the
first-derivative term cancels exactly and the equation becomes the globally
smooth

    u_xx = (1/4) * sech(x)^2 * f(u),   -inf < x < inf,

so the adaptive stepper needs no special treatment near either endpoint.
The public surface (parameters, nodes, dense evaluation) stays in theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "SIGMA",
    "DEFAULT_THETA_END",
    "OVERFLOW_GUARD_U",
    "IntegrationError",
    "TerminalReason",
    "Params",
    "Tolerances",
    "State",
    "SeriesStart",
    "Trajectory",
    "potential_F",
    "energy",
    "rhs",
    "taylor_start",
    "integrate_ivp",
    "integrate_linearized",
    "cot_weighted_integral",
]

#: Unique positive zero of the potential F(u) = u^6/6 - u^2/2.
SIGMA = 3.0 ** 0.25

#: Integration cap: a run reaching this point with u > 0 "does not vanish
#: before pi/2".  Matches the default ``end_guard``.
DEFAULT_THETA_END = math.pi / 2.0 - 1e-9 * math.pi

#: |u| beyond this is outside the validated regime (solutions of interest
#: stay below SIGMA with margin).
OVERFLOW_GUARD_U = 50.0

# In x-space u_x stays bounded even where u'(theta) grows like 1/(pi/2 -
# theta); this only catches genuine blowups.
_OVERFLOW_GUARD_UX = 1e8

# Gauss-Legendre panel rule used on solver steps (steps are capped at
# _MAX_STEP_X so the 10-point rule resolves the integrands to ~1e-15).
_GLX, _GLW = np.polynomial.legendre.leggauss(10)
_MAX_STEP_X = 1.0


class IntegrationError(RuntimeError):
    """Adaptive integration failed (step-size underflow or solver error)."""


class TerminalReason(Enum):
    REACHED_END = "ReachedEnd"
    HIT_ZERO = "HitZero"
    BLOWUP = "Blowup"


def _x_of_theta(theta):
    return np.log(np.tan(theta))


def _theta_of_x(x):
    x = np.asarray(x, dtype=float)
    # split at 0 keeps full precision at both ends
    return np.where(x <= 0.0, np.arctan(np.exp(-np.abs(x))),
                    math.pi / 2.0 - np.arctan(np.exp(-np.abs(x))))


@dataclass(frozen=True)
class Params:
    """Shot parameters: initial value, scale, and integration cap.

    ``lam`` and ``epsilon`` are tied by lam * epsilon^2 = -1; construct via
    :meth:`from_lambda` or :meth:`from_epsilon` to derive one from the other.
    """

    alpha: float
    lam: float
    epsilon: float
    theta_end: float = DEFAULT_THETA_END

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.lam < 0.0:
            raise ValueError(f"lambda must be negative, got {self.lam}")
        if abs(self.lam * self.epsilon ** 2 + 1.0) > 1e-12:
            raise ValueError(
                f"lambda={self.lam} and epsilon={self.epsilon} violate "
                "lam * epsilon^2 = -1"
            )
        if not (0.0 < self.theta_end < math.pi / 2.0):
            raise ValueError(f"theta_end must be in (0, pi/2), got {self.theta_end}")

    @classmethod
    def from_lambda(cls, alpha: float, lam: float,
                    theta_end: float = DEFAULT_THETA_END) -> "Params":
        if not lam < 0.0:
            raise ValueError(f"lambda must be negative, got {lam}")
        return cls(alpha=alpha, lam=lam, epsilon=1.0 / math.sqrt(-lam),
                   theta_end=theta_end)

    @classmethod
    def from_epsilon(cls, alpha: float, epsilon: float,
                     theta_end: float = DEFAULT_THETA_END) -> "Params":
        if not epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        return cls(alpha=alpha, lam=-1.0 / epsilon ** 2, epsilon=epsilon,
                   theta_end=theta_end)


@dataclass(frozen=True)
class Tolerances:
    """Integrator and event tolerances.

    ``theta0`` is the series-start radius and ``end_guard`` the stop offset
    before pi/2 where the trajectory is truncated.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    event_tol: float = 1e-12
    theta0: float = 1e-3
    end_guard: float = 1e-9 * math.pi

    def __post_init__(self) -> None:
        for name in ("rel_tol", "abs_tol", "event_tol", "theta0", "end_guard"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.theta0 < 1e-2:
            raise ValueError(f"theta0 must be below 1e-2, got {self.theta0}")
        if not self.end_guard <= 1e-6 * math.pi:
            raise ValueError(f"end_guard must be <= 1e-6*pi, got {self.end_guard}")

    def with_(self, **changes) -> "Tolerances":
        return replace(self, **changes)


@dataclass(frozen=True)
class State:
    theta: float
    u: float
    du: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta) and 0.0 < self.theta < math.pi / 2.0):
            raise ValueError(f"theta must be finite in (0, pi/2), got {self.theta}")
        if not (math.isfinite(self.u) and math.isfinite(self.du)):
            raise ValueError("u and du must be finite")


@dataclass(frozen=True)
class SeriesStart:
    """Even Taylor start u = y0 + a2*theta^2 + a4*theta^4 on [0, theta0]."""

    y0: float
    a2: float
    a4: float
    theta0: float

    def value(self, theta):
        t2 = np.square(theta)
        return self.y0 + t2 * (self.a2 + t2 * self.a4)

    def derivative(self, theta):
        t2 = np.square(theta)
        return theta * (2.0 * self.a2 + 4.0 * self.a4 * t2)


@dataclass
class Trajectory:
    """Dense numerical solution of one initial value run.

    ``thetas``/``us``/``dus`` are the accepted solver steps.  :meth:`eval`
    evaluates (u, du) anywhere in [0, thetas[-1]]: the Taylor series covers
    [0, theta0] and the dense interpolant the rest.
    """

    thetas: np.ndarray
    us: np.ndarray
    dus: np.ndarray
    terminal_reason: TerminalReason
    series: Optional[SeriesStart] = None
    # equation parameters (set by the integrator; None for synthetic data)
    lam: Optional[float] = None
    linear: bool = False
    # x-space internals (set by the integrator)
    xs: Optional[np.ndarray] = None
    xsol: Optional[Callable] = None
    # direct theta-space interpolant: theta -> (u, du); used by synthetic
    # trajectories built from samples
    theta_dense: Optional[Callable] = None

    @property
    def nodes(self) -> list[State]:
        return [State(float(t), float(u), float(du))
                for t, u, du in zip(self.thetas, self.us, self.dus)]

    @property
    def span(self) -> tuple[float, float]:
        lo = 0.0 if self.series is not None else float(self.thetas[0])
        return (lo, float(self.thetas[-1]))

    @property
    def terminal_theta(self) -> float:
        return float(self.thetas[-1])

    def eval(self, theta):
        """Evaluate (u, du) at scalar or array theta within the span."""
        th = np.asarray(theta, dtype=float)
        scalar = th.ndim == 0
        th = np.atleast_1d(th).copy()
        lo, hi = self.span
        if np.any(th < lo - 1e-15) or np.any(th > hi * (1.0 + 1e-15)):
            raise ValueError(f"theta out of trajectory span [{lo:.6g}, {hi:.6g}]")
        np.clip(th, lo, hi, out=th)
        u = np.empty_like(th)
        du = np.empty_like(th)
        cut = float(self.thetas[0])
        head = th < cut
        if np.any(head):
            if self.series is None:
                raise ValueError("trajectory has no series start below its nodes")
            u[head] = self.series.value(th[head])
            du[head] = self.series.derivative(th[head])
        tail = ~head
        if np.any(tail):
            tt = th[tail]
            if self.xsol is not None:
                x = _x_of_theta(tt)
                y = self.xsol(x)
                u[tail] = y[0]
                du[tail] = 2.0 * np.cosh(x) * y[1]
            elif self.theta_dense is not None:
                vals = self.theta_dense(tt)
                u[tail] = vals[0]
                du[tail] = vals[1]
            else:
                raise ValueError("trajectory has no dense interpolant")
        if scalar:
            return float(u[0]), float(du[0])
        return u, du


def potential_F(u):
    """F(u) = u^6/6 - u^2/2, the primitive of u^5 - u vanishing at 0.

    Strictly negative on (0, SIGMA), zero at 0 and SIGMA, increasing past 1.
    """
    u = np.asarray(u, dtype=float)
    val = u ** 6 / 6.0 - u ** 2 / 2.0
    return float(val) if val.ndim == 0 else val


def energy(state: State, lam: float) -> float:
    """E(theta) = u'^2/2 - lam*F(u); equals -lam*F(alpha) at theta = 0."""
    if not lam < 0.0:
        raise ValueError(f"lambda must be negative, got {lam}")
    return 0.5 * state.du ** 2 - lam * potential_F(state.u)


def energy_values(us, dus, lam: float):
    """Vectorized energy along sampled (u, du) pairs."""
    return 0.5 * np.square(dus) - lam * potential_F(us)


def rhs(theta: float, u: float, du: float, lam: float) -> float:
    """u'' = lam*(u^5 - u) - 2*cot(2*theta)*u'; theta must lie in (0, pi/2)."""
    if not 0.0 < theta < math.pi / 2.0:
        raise ValueError(f"theta must be in (0, pi/2), got {theta}")
    cot2 = math.cos(2.0 * theta) / math.sin(2.0 * theta)
    return lam * (u ** 5 - u) - 2.0 * cot2 * du


def _series_coeffs(y0: float, f0: float, fp0: float) -> tuple[float, float]:
    """Even-series coefficients at the singular origin.

    With u = y0 + a2*t^2 + a4*t^4 and u'' + u'/t -> 4*a2 as t -> 0, matching
    u'' + 2*cot(2t)*u' = f(u) order by order (the -(4/3)*t correction of
    2*cot(2t) enters at t^2) gives a2 = f(y0)/4 and a4 = a2*(f'(y0) + 8/3)/16.
    """
    a2 = f0 / 4.0
    a4 = a2 * (fp0 + 8.0 / 3.0) / 16.0
    return a2, a4


def _quintic_series(alpha: float, lam: float) -> SeriesStart:
    f0 = lam * (alpha ** 5 - alpha)
    fp0 = lam * (5.0 * alpha ** 4 - 1.0)
    a2, a4 = _series_coeffs(alpha, f0, fp0)
    return SeriesStart(alpha, a2, a4, 0.0)


def _linear_series(lam: float) -> SeriesStart:
    a2, a4 = _series_coeffs(1.0, 4.0 * lam, 4.0 * lam)
    return SeriesStart(1.0, a2, a4, 0.0)


def taylor_start(params: Params, theta0: float) -> State:
    """Series state at theta0 > 0 continuing u(0) = alpha, u'(0) = 0."""
    if not theta0 > 0.0:
        raise ValueError("theta0 must be positive (coefficient is singular at 0)")
    if theta0 > 1e-2:
        raise ValueError(f"theta0 too large for the truncated series: {theta0}")
    s = _quintic_series(params.alpha, params.lam)
    return State(theta0, float(s.value(theta0)), float(s.derivative(theta0)))


def _integrate(series: SeriesStart, lam: float, theta_end: float,
               tol: Tolerances, stop_on_zero: bool, linear: bool) -> Trajectory:
    theta0 = tol.theta0
    cap = min(theta_end, math.pi / 2.0 - tol.end_guard)
    if cap <= theta0:
        raise ValueError(f"integration cap {cap} does not exceed theta0 {theta0}")
    series = replace(series, theta0=theta0)
    u0 = float(series.value(theta0))
    du0 = float(series.derivative(theta0))

    x0 = float(_x_of_theta(theta0))
    x_end = float(_x_of_theta(cap))
    # u_x = u' * dtheta/dx = u' * sin(2*theta)/2
    v0 = du0 * math.sin(2.0 * theta0) / 2.0

    lam4 = lam / 4.0
    if linear:
        def fun(x, y):
            s = 1.0 / math.cosh(x)
            return (y[1], 4.0 * lam4 * s * s * y[0])
    else:
        def fun(x, y):
            u = y[0]
            u2 = u * u
            s = 1.0 / math.cosh(x)
            return (y[1], lam4 * s * s * (u2 * u2 * u - u))

    events = []

    def ev_zero(x, y):
        return y[0]

    ev_zero.terminal = True
    ev_zero.direction = -1.0
    if stop_on_zero:
        events.append(ev_zero)

    def ev_blow(x, y):
        return min(OVERFLOW_GUARD_U - abs(y[0]), _OVERFLOW_GUARD_UX - abs(y[1]))

    ev_blow.terminal = True
    ev_blow.direction = -1.0
    events.append(ev_blow)

    sol = solve_ivp(
        fun,
        (x0, x_end),
        (u0, v0),
        method="DOP853",
        dense_output=True,
        events=events,
        rtol=tol.rel_tol,
        atol=tol.abs_tol,
        max_step=_MAX_STEP_X,
    )
    if sol.status == -1:
        raise IntegrationError(f"integration failed: {sol.message}")

    if sol.status == 1:
        blew = len(sol.t_events[-1]) > 0
        reason = TerminalReason.BLOWUP if blew else TerminalReason.HIT_ZERO
    else:
        reason = TerminalReason.REACHED_END

    xs = sol.t
    thetas = np.asarray(_theta_of_x(xs))
    return Trajectory(
        thetas=thetas,
        us=sol.y[0],
        dus=2.0 * np.cosh(xs) * sol.y[1],
        terminal_reason=reason,
        series=series,
        lam=lam,
        linear=linear,
        xs=xs,
        xsol=sol.sol,
    )


def integrate_ivp(params: Params, tol: Tolerances = Tolerances(),
                  stop_on_zero: bool = False) -> Trajectory:
    """Integrate the quintic shot from the series start to the cap.

    With ``stop_on_zero`` the run halts at the first downward crossing of
    u = 0 (localized by the solver's event refinement); otherwise it runs to
    min(theta_end, pi/2 - end_guard) unless the overflow guard trips.
    """
    series = _quintic_series(params.alpha, params.lam)
    return _integrate(series, params.lam, params.theta_end, tol,
                      stop_on_zero, linear=False)


def integrate_linearized(lam: float, tol: Tolerances = Tolerances(),
                         theta_end: float = DEFAULT_THETA_END) -> Trajectory:
    """Integrate w'' + 2*cot(2t)*w' = 4*lam*w, w(0) = 1, w'(0) = 0."""
    if not lam < 0.0:
        raise ValueError(f"lambda must be negative, got {lam}")
    return _integrate(_linear_series(lam), lam, theta_end, tol,
                      stop_on_zero=False, linear=True)


def _snap_to_node_x(traj: Trajectory, theta: float) -> float:
    i = int(np.searchsorted(traj.thetas, theta))
    for j in (i - 1, i):
        if 0 <= j < len(traj.thetas) and traj.thetas[j] == theta:
            return float(traj.xs[j])
    return float(_x_of_theta(theta))


def _gl_panels(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mids = 0.5 * (edges[1:] + edges[:-1])
    halfs = 0.5 * (edges[1:] - edges[:-1])
    xs = (mids[:, None] + halfs[:, None] * _GLX[None, :]).ravel()
    ws = (halfs[:, None] * _GLW[None, :]).ravel()
    return xs, ws


def cot_weighted_integral(traj: Trajectory, a: float, b: float) -> float:
    """Integral of cot(2*theta) * u'(theta)^2 over [a, b] along a trajectory.

    Panels follow the solver's own steps, with fixed Gauss-Legendre nodes per
    panel, so the quadrature error tracks the dense-output error.  Below the
    series radius the integrand is formed from the Taylor start (it behaves
    like theta there; no singularity survives).
    """
    lo, hi = traj.span
    if not (lo <= a <= b <= hi * (1.0 + 1e-15)):
        raise ValueError(f"[{a}, {b}] outside trajectory span [{lo}, {hi}]")
    b = min(b, hi)
    if a == b:
        return 0.0
    total = 0.0
    cut = float(traj.thetas[0])
    if a < cut:
        s = traj.series
        t_hi = min(b, cut)
        t, w = _gl_panels(np.array([a, t_hi]))
        up = s.derivative(t)
        total += float(np.sum(w * np.cos(2.0 * t) / np.sin(2.0 * t) * up ** 2))
        a = t_hi
        if a >= b:
            return total
    if traj.xsol is not None:
        # dtheta = sech(x)/2 dx, cot(2*theta) = -tanh(x)/sech(x),
        # u' = 2*cosh(x)*u_x: integrand -> -2*tanh(x)*cosh(x)^2*u_x^2 dx
        # Limits matching a stored node reuse its exact x: the theta float of
        # a near-cap node carries only ~1e-16 absolute precision, which is a
        # large relative error in pi/2 - theta and would shift the limit.
        xa = _snap_to_node_x(traj, a)
        xb = _snap_to_node_x(traj, b)
        ix = np.searchsorted(traj.xs, (xa, xb))
        inner = traj.xs[ix[0]:ix[1]]
        edges = np.unique(np.concatenate(([xa], inner, [xb])))
        x, w = _gl_panels(edges)
        v = traj.xsol(x)[1]
        total += float(np.sum(w * (-2.0) * np.tanh(x) * np.cosh(x) ** 2 * v ** 2))
        return total
    # synthetic trajectory: theta-space panels over the sample nodes
    ts = traj.thetas
    it = np.searchsorted(ts, (a, b))
    inner = ts[it[0]:it[1]]
    edges = np.unique(np.concatenate(([a], inner, [b])))
    t, w = _gl_panels(edges)
    up = traj.eval(t)[1]
    total += float(np.sum(w * np.cos(2.0 * t) / np.sin(2.0 * t) * up ** 2))
    return total
