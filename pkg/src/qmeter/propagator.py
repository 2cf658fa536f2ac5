"""Closed-form kernels: free-oscillator propagator, shift function, pointer Fresnel kernel.

Square roots of the complex prefactors take the principal branch, so
(1/i)^(1/2) = exp(-i pi/4) while sin(omega T) > 0 and M_eff > 0. No Maslov
bookkeeping is done past the first caustic (omega T > pi); only moduli are
meaningful there.
"""

from __future__ import annotations

import math

import numpy as np

from .couplings import CouplingConstants
from .errors import SingularDuration
from .model import SIN_GUARD, PhysicalParams


def _check_duration(params: PhysicalParams):
    if params.omega > 0 and abs(math.sin(params.omega_T)) <= SIN_GUARD:
        raise SingularDuration(f"omega*T = {params.omega_T!r} is within the sin guard of n*pi")


def k0_prefactor(params: PhysicalParams) -> complex:
    _check_duration(params)
    m, w, T = params.m, params.omega, params.T
    if w == 0.0:
        return complex(np.sqrt(m / (2j * np.pi * T)))
    return complex(np.sqrt(m * w / (2j * np.pi * math.sin(w * T))))


def k0_phase(x, x_prime, params: PhysicalParams):
    """Exponent (real) of the free harmonic-oscillator propagator."""
    m, w, T = params.m, params.omega, params.T
    x = np.asarray(x, dtype=float)
    xp = np.asarray(x_prime, dtype=float)
    if w == 0.0:
        return m * (x - xp) ** 2 / (2.0 * T)
    sn, cs = math.sin(w * T), math.cos(w * T)
    return m * w / (2.0 * sn) * ((x**2 + xp**2) * cs - 2.0 * x * xp)


def k0(x, x_prime, params: PhysicalParams):
    """K0(x, T; x', 0) for the undriven, uncoupled oscillator (omega = 0: free particle)."""
    return k0_prefactor(params) * np.exp(1j * k0_phase(x, x_prime, params))


def shift(x, x_prime, constants: CouplingConstants):
    """Pointer displacement g_eff (x + x')/2 + d."""
    return constants.g_eff * 0.5 * (np.asarray(x) + np.asarray(x_prime)) + constants.d


def drive_phase(x_bar, constants: CouplingConstants):
    return constants.phase_c1 * np.asarray(x_bar) + constants.phase_c0


def pointer_prefactor(constants: CouplingConstants) -> complex:
    if constants.M_eff_divergent:
        raise ValueError("effective mass is divergent; the pointer kernel is a delta function")
    return complex(np.sqrt(constants.M_eff / (2j * np.pi * constants.T)))


def pointer_kernel(X, X_prime, shift_value, constants: CouplingConstants):
    """(M_eff / 2 pi i T)^(1/2) exp{i M_eff (X - X' - s)^2 / 2T}."""
    u = np.asarray(X) - np.asarray(X_prime) - np.asarray(shift_value)
    return pointer_prefactor(constants) * np.exp(0.5j * constants.M_eff * u**2 / constants.T)


class PropagatorEval:
    """Pointwise evaluation of the factorized oscillator-pointer propagator."""

    def __init__(self, params: PhysicalParams, constants: CouplingConstants):
        _check_duration(params)
        if constants.M_eff_divergent:
            raise ValueError("PropagatorEval needs a finite effective mass")
        self.params = params
        self.constants = constants

    def k0(self, x, x_prime):
        return k0(x, x_prime, self.params)

    def shift(self, x, x_prime):
        return shift(x, x_prime, self.constants)

    def pointer_kernel(self, X, X_prime, shift_value):
        return pointer_kernel(X, X_prime, shift_value, self.constants)

    def phase_factor(self, x, x_prime):
        return np.exp(1j * drive_phase(0.5 * (np.asarray(x) + np.asarray(x_prime)), self.constants))

    def __call__(self, x, X, x_prime, X_prime):
        return (self.k0(x, x_prime) * self.phase_factor(x, x_prime)
                * self.pointer_kernel(X, X_prime, self.shift(x, x_prime)))


def system_propagator(x, X, x_prime, X_prime, params: PhysicalParams, constants: CouplingConstants):
    return PropagatorEval(params, constants)(x, X, x_prime, X_prime)
