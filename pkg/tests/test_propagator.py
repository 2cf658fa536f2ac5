import cmath
import math

import numpy as np
import pytest

from qmeter.couplings import derive_constants
from qmeter.errors import SingularDuration
from qmeter.model import PhysicalParams, TimeFunction
from qmeter.propagator import (PropagatorEval, drive_phase, k0, k0_prefactor, pointer_kernel, pointer_prefactor,
                               shift, system_propagator)


def _p(T, omega=1.0, m=1.3):
    return PhysicalParams(m, 2.0, omega, T)


@pytest.mark.parametrize("T", [0.3, 1.0, 2.5, 4.0])
def test_k0_modulus(T):
    p = _p(T)
    x = np.linspace(-3, 3, 7)
    expected = p.m * p.omega / (2 * math.pi * abs(math.sin(p.omega_T)))
    np.testing.assert_allclose(np.abs(k0(x, 0.4, p)) ** 2, expected, rtol=1e-13)


def test_branch_convention():
    assert cmath.phase(k0_prefactor(_p(1.0))) == pytest.approx(-math.pi / 4)
    # past the first caustic sin < 0 and the principal root turns the phase to +pi/4
    assert cmath.phase(k0_prefactor(_p(4.0))) == pytest.approx(math.pi / 4)
    assert cmath.phase(k0_prefactor(PhysicalParams(1.0, 1.0, 0.0, 1.0))) == pytest.approx(-math.pi / 4)


def test_singular_duration_guard():
    with pytest.raises(SingularDuration):
        k0_prefactor(_p(math.pi))


def test_free_particle_limit():
    x, xp = 0.7, -0.2
    free = k0(x, xp, PhysicalParams(1.3, 2.0, 0.0, 1.1))
    near = k0(x, xp, PhysicalParams(1.3, 2.0, 1e-5, 1.1))
    assert abs(near - free) < 1e-9


@pytest.mark.parametrize("omega", [0.0, 0.8])
def test_k0_solves_schroedinger_equation(omega):
    m, T, h = 1.3, 0.9, 1e-4
    x, xp = 0.45, -0.3

    def K(x_, T_):
        return k0(x_, xp, PhysicalParams(m, 1.0, omega, T_))

    dT = (K(x, T + h) - K(x, T - h)) / (2 * h)
    dxx = (K(x + h, T) - 2 * K(x, T) + K(x - h, T)) / h**2
    lhs = 1j * dT
    rhs = -dxx / (2 * m) + 0.5 * m * omega**2 * x**2 * K(x, T)
    assert abs(lhs - rhs) < 1e-5 * abs(K(x, T))


@pytest.fixture
def consts(params, coupling, drive):
    return derive_constants(params, coupling, drive)


def test_factorization(params, consts):
    x, X, xp, Xp = 0.3, -0.4, 1.1, 0.2
    s = consts.g_eff * (x + xp) / 2 + consts.d
    expected = (k0(x, xp, params) * np.exp(1j * (consts.phase_c1 * (x + xp) / 2 + consts.phase_c0))
                * np.sqrt(consts.M_eff / (2j * math.pi * params.T))
                * np.exp(1j * consts.M_eff * (X - Xp - s) ** 2 / (2 * params.T)))
    assert system_propagator(x, X, xp, Xp, params, consts) == pytest.approx(expected, rel=1e-14)
    assert shift(x, xp, consts) == pytest.approx(s)


def test_pointer_kernel_translation_covariance(consts):
    X = np.linspace(-2, 2, 9)
    for a in (0.37, -5.0):
        np.testing.assert_allclose(pointer_kernel(X + a, 0.1 + a, 0.25, consts), pointer_kernel(X, 0.1, 0.25, consts),
                                   rtol=1e-12)
    mod = abs(pointer_prefactor(consts))
    assert mod == pytest.approx(math.sqrt(consts.M_eff / (2 * math.pi * consts.T)))


def test_phase_is_affine_in_average_position(consts):
    a, b = np.array([0.2, -1.0, 3.0]), np.array([1.5, 0.4, -2.0])
    lin = drive_phase(a, consts) + drive_phase(b, consts) - 2 * drive_phase((a + b) / 2, consts)
    np.testing.assert_allclose(lin, 0.0, atol=1e-15)
    ev = PropagatorEval(_p(1.0, m=1.0), consts)
    assert abs(ev.phase_factor(0.3, 0.9)) == pytest.approx(1.0)


def test_propagator_rejects_divergent_mass():
    p = PhysicalParams(1.0, math.inf, 1.0, 1.0)
    c = derive_constants(p, TimeFunction.zero(1.0), TimeFunction.zero(1.0))
    with pytest.raises(ValueError):
        PropagatorEval(p, c)
    with pytest.raises(ValueError):
        pointer_prefactor(c)


def test_uncoupled_propagator_is_product_of_free_kernels():
    p = PhysicalParams(1.0, 2.5, 1.0, 1.0)
    c = derive_constants(p, TimeFunction.zero(1.0), TimeFunction.zero(1.0))
    x, X, xp, Xp = 0.2, 0.5, -0.3, 0.1
    free_pointer = np.sqrt(p.M / (2j * math.pi * p.T)) * np.exp(1j * p.M * (X - Xp) ** 2 / (2 * p.T))
    assert system_propagator(x, X, xp, Xp, p, c) == pytest.approx(k0(x, xp, p) * free_pointer, rel=1e-14)
