"""Linearization at the constant solution: eigen-polynomials and mode counting.

The linearized equation w'' + 2*cot(2*theta)*w' = 4*lam*w with w(0) = 1,
w'(0) = 0 has polynomial solutions in t = cos(2*theta) exactly at
lam_n = -n*(n+1).  The operator identity

    L_c(t^k) = (4*lam_k - c) * t^k + 4*k*(k-1) * t^(k-2),
    L_c(p) = p'' + 2*cot(2*theta)*p' - c*p,  lam_k = -k*(k+1),

turns L_{4*lam_n}(w) = 0 into a two-term downward recursion on the
coefficients of t^(n-2j), solved here in exact rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .ode_core import (
    DEFAULT_THETA_END,
    Tolerances,
    Trajectory,
    integrate_linearized,
    _theta_of_x,
)
from .shooting import critical_points

__all__ = [
    "CosPoly",
    "SpectralIndex",
    "StructureCounts",
    "lambda_n",
    "eigen_poly",
    "eval_cospoly",
    "eval_cospoly_dtheta",
    "operator_residual_exact",
    "operator_residual",
    "endpoint_value_exact",
    "solve_linearized",
    "count_structure",
]

#: Refined zeros closer than this (radians) count once; guards against
#: double-counting tangential near-zeros.
_MIN_ZERO_SEPARATION = 1e-6


def lambda_n(n: int) -> int:
    """Eigenvalue ladder lam_n = -n*(n+1)."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    return -n * (n + 1)


@dataclass(frozen=True)
class SpectralIndex:
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"n must be non-negative, got {self.n}")

    @property
    def lam(self) -> int:
        return lambda_n(self.n)


@dataclass(frozen=True)
class CosPoly:
    """Sum_j coeffs[j] * cos(2*theta)^(n-2j), normalized to value 1 at 0.

    ``exact`` carries the rational coefficients the float ``coeffs`` were
    rounded from.
    """

    n: int
    coeffs: tuple[float, ...]
    exact: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.coeffs) != self.n // 2 + 1:
            raise ValueError("need one coefficient per power n-2j, 0 <= 2j <= n")


@dataclass(frozen=True)
class StructureCounts:
    zeros: int
    criticals: int
    criticals_before_quarter: int


def eigen_poly(n: int) -> CosPoly:
    """Polynomial mode at lam_n = -n*(n+1), in exact rational arithmetic.

    Seeded at the leading power t^n, the operator identity forces

        a_{j+1} = -(n-2j)*(n-2j-1) * a_j / (lam_{n-2j-2} - lam_n),

    and the result is rescaled so the coefficients sum to 1 (value 1 at
    theta = 0).
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    coeffs = [Fraction(1)]
    for j in range(n // 2):
        m = n - 2 * j
        denom = lambda_n(m - 2) - lambda_n(n)
        coeffs.append(Fraction(-m * (m - 1), denom) * coeffs[j])
    total = sum(coeffs)
    coeffs = [c / total for c in coeffs]
    return CosPoly(n=n, coeffs=tuple(float(c) for c in coeffs),
                   exact=tuple(coeffs))


def eval_cospoly(p: CosPoly, theta):
    """Evaluate at theta in [0, pi/2] via t = cos(2*theta) and Horner in t^2."""
    theta = np.asarray(theta, dtype=float)
    t = np.cos(2.0 * theta)
    t2 = t * t
    acc = np.zeros_like(t)
    for c in p.coeffs:
        acc = acc * t2 + c
    if p.n % 2 == 1:
        acc = acc * t
    return float(acc) if acc.ndim == 0 else acc


def eval_cospoly_dtheta(p: CosPoly, theta):
    """d/dtheta of the polynomial mode: -2*sin(2*theta) * dP/dt."""
    theta = np.asarray(theta, dtype=float)
    t = np.cos(2.0 * theta)
    t2 = t * t
    acc = np.zeros_like(t)
    for j, c in enumerate(p.coeffs):
        power = p.n - 2 * j
        if power == 0:
            continue
        acc = acc + c * power * t ** (power - 1)
    out = -2.0 * np.sin(2.0 * theta) * acc
    return float(out) if out.ndim == 0 else out


def operator_residual_exact(p: CosPoly) -> tuple[Fraction, ...]:
    """Coefficients of L_{4*lam_n}(p) on the powers t^(n-2j), exact.

    Zero for an eigen-polynomial: the diagonal term of each power cancels
    against the lowering term of the power two above it.
    """
    lam4 = 4 * lambda_n(p.n)
    out = [Fraction(0)] * (p.n // 2 + 2)  # powers n, n-2, ..., down to n-2*(J+1)
    for j, a in enumerate(p.exact):
        m = p.n - 2 * j
        out[j] += a * (4 * lambda_n(m) - lam4)
        out[j + 1] += a * 4 * m * (m - 1)
    return tuple(out)


def operator_residual(p: CosPoly) -> float:
    """Max |coefficient| of the operator applied to p, in floating point."""
    lam4 = 4.0 * lambda_n(p.n)
    out = [0.0] * (p.n // 2 + 2)
    for j, a in enumerate(p.coeffs):
        m = p.n - 2 * j
        out[j] += a * (4.0 * lambda_n(m) - lam4)
        out[j + 1] += a * 4.0 * m * (m - 1)
    return max(abs(v) for v in out)


def endpoint_value_exact(p: CosPoly) -> Fraction:
    """Value at theta = pi/2 (t = -1) in exact arithmetic; equals (-1)^n."""
    return sum(a * Fraction(-1) ** (p.n - 2 * j) for j, a in enumerate(p.exact))


def solve_linearized(lam: float, tol: Tolerances = Tolerances(),
                     theta_end: float = DEFAULT_THETA_END) -> Trajectory:
    """Numeric w_lam via the same singular-start machinery as the shots."""
    if not lam < 0.0:
        raise ValueError(f"lambda must be negative, got {lam}")
    return integrate_linearized(lam, tol, theta_end)


def _refined_zeros(traj: Trajectory) -> list[float]:
    us = traj.us
    zeros: list[float] = []
    for i in range(len(us) - 1):
        if us[i] == 0.0:
            zeros.append(float(traj.thetas[i]))
        elif us[i] * us[i + 1] < 0.0:
            if traj.xsol is not None:
                g = lambda x: float(traj.xsol(x)[0])
                x_root = brentq(g, traj.xs[i], traj.xs[i + 1], xtol=1e-14)
                zeros.append(float(_theta_of_x(x_root)))
            else:
                g = lambda t: traj.eval(t)[0]
                zeros.append(float(brentq(g, traj.thetas[i], traj.thetas[i + 1],
                                          xtol=1e-14)))
    dedup: list[float] = []
    for z in zeros:
        if not dedup or z - dedup[-1] > _MIN_ZERO_SEPARATION:
            dedup.append(z)
    return dedup


def count_structure(lam: float, tol: Tolerances = Tolerances()) -> StructureCounts:
    """Zero and critical-point counts of the numeric w_lam.

    Returns counts over (0, pi/2) and the critical count over (0, pi/4).
    """
    traj = solve_linearized(lam, tol)
    zeros = _refined_zeros(traj)
    crits = critical_points(traj, tol.event_tol)
    quarter = math.pi / 4.0
    return StructureCounts(
        zeros=len(zeros),
        criticals=len(crits),
        criticals_before_quarter=sum(1 for c in crits if c.tau < quarter),
    )
