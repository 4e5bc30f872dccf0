"""Shooting-method toolkit for u'' + 2*cot(2*theta)*u' = lambda*(u^5 - u).

Solves, classifies, and verifies spike solutions of the singular initial
value problem on (0, pi/2): single shots and their first zeros, branch
diagrams over the initial value, symmetric ground states, the linearized
spectrum, and the quintic soliton limit of narrow spikes.
"""

from .ode_core import (
    SIGMA,
    IntegrationError,
    Params,
    State,
    Tolerances,
    Trajectory,
    TerminalReason,
    energy,
    integrate_ivp,
    potential_F,
    rhs,
    taylor_start,
)

__version__ = "0.1.0"
