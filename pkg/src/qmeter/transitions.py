"""Transition probabilities and Heisenberg-picture quantities."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .couplings import CouplingConstants, _points, _quad, first_moment, scalar_fn
from .model import PhysicalParams, TimeFunction

RESPONSE_TOL = 1e-10


def green_function(t, t_prime, params: PhysicalParams) -> float:
    """Retarded Green's function of m(d^2/dt^2 + w^2): theta(t - t') sin w(t - t') / (m w)."""
    tau = t - t_prime
    if tau <= 0.0:
        return 0.0
    if params.omega == 0.0:
        return tau / params.m
    return math.sin(params.omega * tau) / (params.m * params.omega)


def drive_response_F(params: PhysicalParams, f_D: TimeFunction) -> float:
    """F_D(T) = int_0^T G(T, t') f_D(t') dt' (forced displacement of x at T)."""
    if f_D.is_zero:
        return 0.0
    fd = scalar_fn(f_D)
    T = params.T
    return _quad(lambda s: green_function(T, s, params) * fd(s), 0.0, T, _points(f_D), RESPONSE_TOL, "F_D")


def drive_response_G(params: PhysicalParams, f_D: TimeFunction) -> float:
    """G_D(T) = int_0^T dt' int_0^t' dt'' G(t', t'') f_D(t'')."""
    if f_D.is_zero:
        return 0.0
    fd = scalar_fn(f_D)
    pts = _points(f_D)

    def inner(t1):
        return _quad(lambda s: green_function(t1, s, params) * fd(s), 0.0, t1, pts, RESPONSE_TOL * 1e-2, "G_D")

    return _quad(inner, 0.0, params.T, pts, RESPONSE_TOL, "G_D")


@dataclass(frozen=True)
class TransitionReport:
    p_position: float
    p_average: float
    path_average_factor: float
    p_path_average: float
    p_pointer: float
    p_sharp_pointer: float
    p_sharp_pointer_free: Optional[float]
    F_D: float
    G_D: float
    nonphysical_regime: bool

    def to_dict(self):
        return asdict(self)


def _path_average_factor(wT: float) -> float:
    if wT == 0.0:
        return 2.0
    return wT / math.tan(0.5 * wT)


def transition_probabilities(params: PhysicalParams, constants: CouplingConstants,
                             f: Optional[TimeFunction] = None,
                             f_D: Optional[TimeFunction] = None) -> TransitionReport:
    """Closed-form densities; ``f`` enables the free-particle sharp-pointer level, ``f_D`` the drive response."""
    m, w, T = params.m, params.omega, params.T
    wT = w * T
    if w == 0.0:
        p_pos = m / (2.0 * math.pi * T)
        p_sharp = m / (constants.g_eff * math.pi * T) if constants.g_eff else math.inf
    else:
        sn = math.sin(wT)
        p_pos = m * w / (2.0 * math.pi * sn)
        p_sharp = m * w / (constants.g_eff * math.pi * sn) if constants.g_eff else math.inf
    p_free = None
    if f is not None:
        gT = 2.0 / T**2 * first_moment(f, T)
        p_free = m / (gT * math.pi * T) if gT else math.inf
    factor = _path_average_factor(wT)
    return TransitionReport(
        p_position=p_pos,
        p_average=2.0 * p_pos,
        path_average_factor=factor,
        p_path_average=factor * p_pos,
        p_pointer=math.inf if params.pointer_infinite else params.M / (2.0 * math.pi * T),
        p_sharp_pointer=p_sharp,
        p_sharp_pointer_free=p_free,
        F_D=drive_response_F(params, f_D) if f_D is not None else 0.0,
        G_D=drive_response_G(params, f_D) if f_D is not None else 0.0,
        nonphysical_regime=not (0.0 <= wT < math.pi),
    )


def pointer_final_mean(params: PhysicalParams, f: TimeFunction, f_D: TimeFunction,
                       x0: float, p0: float, X0: float = 0.0, P0: float = 0.0) -> float:
    """<X(T)> for a constant coupling f = g0, from the Heisenberg solution.

    x0, p0, X0, P0 are initial expectation values.
    """
    if f.family not in ("constant", "zero"):
        raise ValueError("pointer_final_mean requires a constant coupling function")
    g0 = f.amplitude if f.family == "constant" else 0.0
    m, w, T = params.m, params.omega, params.T
    if w == 0.0:
        osc = p0 * T**2 / (2.0 * m) + x0 * T
    else:
        osc = 2.0 * p0 * math.sin(0.5 * w * T) ** 2 / (m * w**2) + x0 * math.sin(w * T) / w
    return X0 + P0 * T * params.inv_M + g0 / T * (osc + drive_response_G(params, f_D))
