"""Scans over the shooting value: branch structure and boundary-value roots.

The set of shooting values whose solutions vanish before pi/2 splits into
connected components on which the spike count is constant.  The first-zero
map alpha -> Theta(alpha) dips below pi/2 inside a component and climbs back
to pi/2 at its endpoints, so prescribing a zero at theta_1 gives (at least)
two roots per component that dips below theta_1.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .ode_core import Params, Tolerances
from .shooting import shoot, zero_energy_identity_residual

__all__ = [
    "ScanSample",
    "ThetaCurve",
    "Branch",
    "DirichletSolution",
    "NonexistenceReport",
    "NotReachableError",
    "NoBranchError",
    "uniform_alpha_grid",
    "scan",
    "components",
    "solve_dirichlet",
    "theta_min",
    "verify_nonexistence",
]

#: Neighbouring samples that disagree are bisected until their gap drops
#: below half of this floor, so component endpoints are pinned to the floor.
DEFAULT_ALPHA_RESOLUTION = 1e-6

_POLISH_TOL = Tolerances(rel_tol=1e-12, abs_tol=1e-12)


class NotReachableError(RuntimeError):
    """No spike branch dips below the requested zero location."""


class NoBranchError(RuntimeError):
    """No branch with the requested spike count at this epsilon."""


@dataclass(frozen=True)
class ScanSample:
    alpha: float
    theta_zero: Optional[float]
    spikes: int
    error: Optional[str] = None

    @property
    def vanishes(self) -> bool:
        return self.error is None and self.theta_zero is not None


@dataclass
class ThetaCurve:
    epsilon: float
    samples: list[ScanSample]

    def alphas(self) -> np.ndarray:
        return np.array([s.alpha for s in self.samples])


@dataclass
class Branch:
    """One connected component of vanishing samples with a fixed spike count."""

    k: int
    alpha_lo: float
    alpha_hi: float
    theta_min: float
    alpha_at_min: float
    narrow: bool = False
    samples: list[tuple[float, float]] = field(default_factory=list)


@dataclass(frozen=True)
class DirichletSolution:
    alpha: float
    theta1: float
    k: int
    residual: float


@dataclass
class NonexistenceReport:
    epsilon: float
    theta1: float
    n_samples: int
    n_vanishing: int
    counterexamples: list[float]
    min_theta_zero: Optional[float]
    max_identity_residual: float

    @property
    def passed(self) -> bool:
        return not self.counterexamples


def uniform_alpha_grid(n: int) -> np.ndarray:
    """n interior points of a uniform partition of (0, 1)."""
    if n < 2:
        raise ValueError(f"grid needs at least 2 points, got {n}")
    return np.linspace(0.0, 1.0, n + 2)[1:-1]


def _n_workers() -> int:
    env = os.environ.get("SPIKE_SHOOTER_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _sample_one(args: tuple[float, float, Tolerances, bool]) -> tuple:
    alpha, epsilon, tol, want_residual = args
    try:
        profile = shoot(Params.from_epsilon(alpha, epsilon), tol)
    except Exception as exc:  # recorded per-sample, scan continues
        return (alpha, None, 0, f"{type(exc).__name__}: {exc}", None)
    residual = zero_energy_identity_residual(profile) if want_residual else None
    return (alpha, profile.theta_zero, profile.spikes, None, residual)


def _sample_many(alphas: Sequence[float], epsilon: float, tol: Tolerances,
                 want_residual: bool = False) -> list[tuple]:
    tasks = [(float(a), epsilon, tol, want_residual) for a in alphas]
    workers = min(_n_workers(), len(tasks))
    if workers <= 1 or len(tasks) < 4:
        return [_sample_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(tasks) // (4 * workers))
        return list(pool.map(_sample_one, tasks, chunksize=chunk))


def _differs(a: ScanSample, b: ScanSample) -> bool:
    if a.error or b.error:
        return False
    if a.vanishes != b.vanishes:
        return True
    return a.vanishes and a.spikes != b.spikes


def scan(epsilon: float, grid: Sequence[float], tol: Tolerances = Tolerances(),
         resolution: float = DEFAULT_ALPHA_RESOLUTION) -> ThetaCurve:
    """One shot per grid point, plus adaptive bisection where behaviour flips.

    Wherever neighbouring samples differ in vanishing or in spike count, a
    midpoint sample is inserted, round by round, until the disagreeing gap is
    below the resolution floor.  Failed shots are recorded on their sample and
    skipped by the refinement.
    """
    alphas = np.asarray(sorted(float(a) for a in grid), dtype=float)
    if len(alphas) < 16:
        raise ValueError(f"grid needs at least 16 points, got {len(alphas)}")
    if alphas[0] <= 0.0 or alphas[-1] >= 1.0:
        raise ValueError("grid must lie strictly inside (0, 1)")
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")

    by_alpha: dict[float, ScanSample] = {}
    for alpha, tz, spikes, err, _ in _sample_many(alphas, epsilon, tol):
        by_alpha[alpha] = ScanSample(alpha, tz, spikes, err)

    while True:
        ordered = sorted(by_alpha)
        new_points = []
        for a, b in zip(ordered, ordered[1:]):
            if b - a > 0.5 * resolution and _differs(by_alpha[a], by_alpha[b]):
                new_points.append(0.5 * (a + b))
        if not new_points:
            break
        for alpha, tz, spikes, err, _ in _sample_many(new_points, epsilon, tol):
            by_alpha[alpha] = ScanSample(alpha, tz, spikes, err)

    samples = [by_alpha[a] for a in sorted(by_alpha)]
    return ThetaCurve(epsilon=epsilon, samples=samples)


def _theta_eval(epsilon: float, alpha: float, tol: Tolerances) -> float:
    """Theta(alpha), with the cap standing in when the shot stays positive."""
    profile = shoot(Params.from_epsilon(alpha, epsilon), tol)
    if profile.theta_zero is not None:
        return profile.theta_zero
    return math.pi / 2.0


def components(curve: ThetaCurve, tol: Tolerances = _POLISH_TOL) -> list[Branch]:
    """Maximal runs of vanishing samples with equal spike count.

    A spike-count change splits branches even without an intervening
    non-vanishing sample.  The in-branch minimum of Theta is polished by
    golden-section refinement seeded at the sampled minimum.
    """
    eps = curve.epsilon
    branches: list[Branch] = []
    run: list[ScanSample] = []

    def close_run() -> None:
        if not run:
            return
        pairs = [(s.alpha, s.theta_zero) for s in run]
        i_min = min(range(len(pairs)), key=lambda i: pairs[i][1])
        a_min, t_min = pairs[i_min]
        lo = pairs[max(i_min - 1, 0)][0]
        hi = pairs[min(i_min + 1, len(pairs) - 1)][0]
        if lo < a_min < hi:
            res = minimize_scalar(
                lambda a: _theta_eval(eps, a, tol),
                bracket=(lo, a_min, hi), method="golden",
                options={"xtol": 1e-10})
            if res.fun < t_min:
                a_min, t_min = float(res.x), float(res.fun)
        branches.append(Branch(
            k=run[0].spikes,
            alpha_lo=pairs[0][0],
            alpha_hi=pairs[-1][0],
            theta_min=t_min,
            alpha_at_min=a_min,
            narrow=len(run) < 3,
            samples=pairs,
        ))
        run.clear()

    for s in curve.samples:
        if s.vanishes and (not run or run[-1].spikes == s.spikes):
            run.append(s)
        else:
            close_run()
            if s.vanishes:
                run.append(s)
    close_run()
    return branches


def _bracket_outward(epsilon: float, theta1: float, a_inside: float,
                     step: float, direction: int,
                     tol: Tolerances) -> tuple[float, float]:
    """Walk from inside the branch toward its endpoint until Theta > theta1."""
    a = a_inside
    for _ in range(80):
        a_next = a + direction * step
        if not 0.0 < a_next < 1.0:
            break
        f = _theta_eval(epsilon, a_next, tol) - theta1
        if f > 0.0:
            return a_next, a
        a = a_next
        step *= 2.0
    raise NotReachableError(
        f"could not bracket Theta = {theta1} beyond alpha={a_inside}")


def solve_dirichlet(epsilon: float, theta1: float, k: int,
                    grid: Optional[Sequence[float]] = None,
                    branches: Optional[list[Branch]] = None,
                    tol: Tolerances = Tolerances()) -> list[DirichletSolution]:
    """Shooting values whose first zero lands exactly on theta1, per k-branch.

    Each branch with theta_min < theta1 yields one root of
    Theta(alpha) - theta1 on each side of the minimum.  Every root is
    confirmed by an independent re-shoot at default tolerances.
    """
    if not 0.0 < theta1 < math.pi / 2.0:
        raise ValueError(f"theta1 must be in (0, pi/2), got {theta1}")
    if branches is None:
        if grid is None:
            grid = uniform_alpha_grid(384)
        branches = components(scan(epsilon, grid))
    qualifying = [b for b in branches if b.k == k and b.theta_min < theta1]
    if not qualifying:
        raise NotReachableError(
            f"no {k}-spike branch dips below theta1={theta1} at "
            f"epsilon={epsilon} (lambda may not be negative enough)")

    out: list[DirichletSolution] = []
    for b in qualifying:
        f = lambda a: _theta_eval(epsilon, a, _POLISH_TOL) - theta1
        if f(b.alpha_at_min) >= 0.0:
            continue  # minimum only grazes theta1 at this tolerance
        for direction, edge in ((-1, b.alpha_lo), (1, b.alpha_hi)):
            f_edge = f(edge)
            if f_edge > 0.0:
                bracket = (edge, b.alpha_at_min)
            else:
                step = max(abs(edge - b.alpha_at_min) * 1e-3,
                           DEFAULT_ALPHA_RESOLUTION)
                bracket = _bracket_outward(
                    epsilon, theta1, edge, step, direction, _POLISH_TOL)
            a_root = brentq(f, min(bracket), max(bracket), xtol=1e-14)
            confirm = shoot(Params.from_epsilon(float(a_root), epsilon))
            theta_conf = confirm.theta_zero if confirm.theta_zero is not None \
                else math.pi / 2.0
            out.append(DirichletSolution(
                alpha=float(a_root), theta1=theta1, k=confirm.spikes,
                residual=abs(theta_conf - theta1)))
    if not out:
        raise NotReachableError(
            f"no {k}-spike branch dips below theta1={theta1} at "
            f"epsilon={epsilon} at the polishing tolerance")
    return out


def theta_min(epsilon: float, k: int,
              grid: Optional[Sequence[float]] = None,
              branches: Optional[list[Branch]] = None,
              tol: Tolerances = Tolerances()) -> float:
    """Smallest first zero over all k-spike branches at this epsilon."""
    if branches is None:
        if grid is None:
            grid = uniform_alpha_grid(384)
        branches = components(scan(epsilon, grid, tol))
    ks = [b.theta_min for b in branches if b.k == k]
    if not ks:
        raise NoBranchError(f"no {k}-spike branch at epsilon={epsilon}")
    return min(ks)


def verify_nonexistence(epsilon: float, theta1: float,
                        grid: Sequence[float],
                        tol: Tolerances = _POLISH_TOL) -> NonexistenceReport:
    """Check that no shot vanishes at or before theta1 < pi/4.

    Also evaluates the first-zero energy identity at every detected zero
    (they all occur past pi/4); the worst normalized residual is reported.
    """
    quarter = math.pi / 4.0
    if not 0.0 < theta1 < quarter:
        raise ValueError(f"theta1 must lie in (0, pi/4), got {theta1}")
    alphas = np.asarray(sorted(float(a) for a in grid), dtype=float)
    results = _sample_many(alphas, epsilon, tol, want_residual=True)
    counterexamples = []
    zeros = []
    worst = 0.0
    n_vanishing = 0
    for alpha, tz, _, err, residual in results:
        if err is not None:
            raise RuntimeError(f"shot failed at alpha={alpha}: {err}")
        if tz is None:
            continue
        n_vanishing += 1
        zeros.append(tz)
        if tz <= theta1:
            counterexamples.append(alpha)
        if residual is not None:
            worst = max(worst, residual)
    return NonexistenceReport(
        epsilon=epsilon,
        theta1=theta1,
        n_samples=len(alphas),
        n_vanishing=n_vanishing,
        counterexamples=counterexamples,
        min_theta_zero=min(zeros) if zeros else None,
        max_identity_residual=worst,
    )
