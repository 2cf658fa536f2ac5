"""Coupling integrals A, B, A_D, B_D, C_D and the measurement constants built from them.

All single integrals go through adaptive Gauss-Kronrod quadrature (QUADPACK via
scipy); the triangle integrals over 0 <= s <= t <= T are nested adaptive
quadratures of a separable kernel.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

from scipy import integrate

from .errors import AsymmetricInput, QuadratureError, SingularDuration
from .model import SIN_GUARD, PhysicalParams, TimeFunction, is_midpoint_symmetric

ABS_TOL_1D = 1e-12
ABS_TOL_2D = 1e-10
_EPSREL = 1e-13
_LIMIT = 200


def scalar_fn(tf: TimeFunction):
    """Fast scalar closure for ``tf`` (quadrature calls it point by point)."""
    T = tf.duration
    a = tf.amplitude
    fam = tf.family
    if fam == "zero":
        return lambda t: 0.0
    if fam == "constant":
        return lambda t: a if 0.0 <= t <= T else 0.0
    if fam == "half_sine":
        k = math.pi / T
        return lambda t: a * math.sin(k * t) if 0.0 <= t <= T else 0.0
    if fam == "gaussian_window":
        c = 0.5 * T if tf.center is None else tf.center
        w2 = 2.0 * tf.width**2
        return lambda t: a * math.exp(-((t - c) ** 2) / w2) if 0.0 <= t <= T else 0.0
    if fam == "raised_cosine":
        k = 2.0 * math.pi / T
        return lambda t: a * 0.5 * (1.0 - math.cos(k * t)) if 0.0 <= t <= T else 0.0
    s = tf.samples
    n = len(s) - 1
    h = T / n

    def tab(t):
        if t < 0.0 or t > T:
            return 0.0
        u = t / h
        i = min(int(u), n - 1)
        r = u - i
        return s[i] * (1.0 - r) + s[i + 1] * r

    return tab


def _quad(func, a, b, points=(), tol=ABS_TOL_1D, what="integral"):
    if b <= a:
        return 0.0
    pts = [p for p in points if a < p < b] or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, *rest = integrate.quad(func, a, b, epsabs=min(tol, 1e-15), epsrel=_EPSREL,
                                         limit=_LIMIT, points=pts, full_output=1)
    warned = len(rest) > 1
    if warned and err > max(tol, 1e-9 * abs(val)):
        raise QuadratureError(f"{what} did not converge: error estimate {err:.3g} > tolerance {tol:g}",
                              achieved=err)
    return val


def single_integral(kernel, T, points=(), tol=ABS_TOL_1D, what="integral"):
    return _quad(kernel, 0.0, T, points, tol, what)


def triangle_integral(outer, inner, T, points=(), tol=ABS_TOL_2D, what="double integral"):
    """int_0^T dt outer(t) int_0^t ds inner(s)."""

    def integrand(t):
        o = outer(t)
        if o == 0.0:
            return 0.0
        return o * _quad(inner, 0.0, t, points, tol * 1e-2, what)

    return _quad(integrand, 0.0, T, points, tol, what)


def _points(*tfs):
    pts = set()
    for tf in tfs:
        pts.update(tf.breakpoints())
    return tuple(sorted(pts))


def integral_B(f: TimeFunction, omega: float, T: float) -> float:
    """2 int_0^T f(t) sin(omega t) dt."""
    if f.is_zero or omega == 0.0:
        return 0.0
    fn = scalar_fn(f)
    return 2.0 * single_integral(lambda t: fn(t) * math.sin(omega * t), T, _points(f), what="B")


def integral_BD(f_D: TimeFunction, omega: float, T: float) -> float:
    return integral_B(f_D, omega, T)


def _sin_triangle(a: TimeFunction, b: TimeFunction, omega, T, what):
    fa, fb = scalar_fn(a), scalar_fn(b)
    return triangle_integral(lambda t: fa(t) * math.sin(omega * (T - t)),
                             lambda s: fb(s) * math.sin(omega * s),
                             T, _points(a, b), what=what)


def integral_A(f: TimeFunction, omega: float, T: float) -> float:
    """int_0^T dt int_0^t ds f(t) f(s) sin omega(T-t) sin omega s."""
    if f.is_zero or omega == 0.0:
        return 0.0
    return _sin_triangle(f, f, omega, T, "A")


def integral_AD(f_D: TimeFunction, omega: float, T: float) -> float:
    return integral_A(f_D, omega, T)


def integral_CD(f: TimeFunction, f_D: TimeFunction, omega: float, T: float) -> float:
    """Triangle integral of the symmetrized kernel f_D(t) f(s) + f(t) f_D(s)."""
    if f.is_zero or f_D.is_zero or omega == 0.0:
        return 0.0
    return _sin_triangle(f_D, f, omega, T, "C_D") + _sin_triangle(f, f_D, omega, T, "C_D")


def _ramp_triangle(a: TimeFunction, b: TimeFunction, T, what):
    """int int_{s<t} a(t) b(s) (T - t) s."""
    fa, fb = scalar_fn(a), scalar_fn(b)
    return triangle_integral(lambda t: fa(t) * (T - t), lambda s: fb(s) * s, T, _points(a, b), what=what)


def first_moment(tf: TimeFunction, T: float) -> float:
    """int_0^T t tf(t) dt."""
    if tf.is_zero:
        return 0.0
    fn = scalar_fn(tf)
    return single_integral(lambda t: t * fn(t), T, _points(tf), what="first moment")


@dataclass(frozen=True)
class CouplingConstants:
    """Evaluated coupling integrals and the derived measurement constants.

    phi(xbar) = phase_c1 * xbar + phase_c0 and s(x, x') = g_eff * xbar + d.
    ``inv_M_eff`` is kept alongside ``M_eff`` so that an infinite effective
    mass (no pointer spreading) is representable exactly.
    """

    omega: float
    T: float
    A: float
    B: float
    A_D: float
    B_D: float
    C_D: float
    g_eff: float
    d: float
    M_eff: float
    inv_M_eff: float
    M_eff_divergent: bool
    phase_c1: float
    phase_c0: float
    free_particle: bool = False

    def to_dict(self):
        return asdict(self)


def _effective_mass(params: PhysicalParams, coupling_term: float):
    """Combine 1/M with the oscillator-induced term; flag a vanishing bracket."""
    inv = params.inv_M + coupling_term
    scale = max(params.inv_M, abs(coupling_term))
    divergent = abs(inv) <= 1e-12 * scale if scale > 0 else True
    if divergent:
        return math.inf, 0.0, True
    return 1.0 / inv, inv, False


def _check_symmetric(f, f_D):
    for label, tf in (("coupling f", f), ("drive f_D", f_D)):
        if not is_midpoint_symmetric(tf):
            raise AsymmetricInput(
                f"{label} is not symmetric about T/2; the pointer tracks a general linear "
                "combination of initial and final positions; use the oracle engine")


def derive_constants(params: PhysicalParams, f: TimeFunction, f_D: TimeFunction) -> CouplingConstants:
    """All measurement constants for symmetric f, f_D. omega == 0 uses the free-particle limits."""
    _check_symmetric(f, f_D)
    if params.omega == 0.0:
        return derive_constants_free_particle(params, f, f_D)
    m, w, T = params.m, params.omega, params.T
    sn = math.sin(w * T)
    if abs(sn) <= SIN_GUARD:
        raise SingularDuration(f"|sin(omega T)| = {abs(sn):.3g} <= {SIN_GUARD:g} at omega*T = {w * T!r}; "
                               "perturb omega or T away from n*pi")
    A = integral_A(f, w, T)
    B = integral_B(f, w, T)
    A_D = integral_AD(f_D, w, T)
    B_D = integral_BD(f_D, w, T)
    C_D = integral_CD(f, f_D, w, T)
    M_eff, inv, div = _effective_mass(params, 2.0 * A / (m * w * T**3 * sn))
    return CouplingConstants(
        omega=w, T=T, A=A, B=B, A_D=A_D, B_D=B_D, C_D=C_D,
        g_eff=B / (T * sn),
        d=-C_D / (m * w * T * sn),
        M_eff=M_eff, inv_M_eff=inv, M_eff_divergent=div,
        phase_c1=B_D / sn,
        phase_c0=-A_D / (m * w * sn),
    )


def derive_constants_free_particle(params: PhysicalParams, f: TimeFunction, f_D: TimeFunction) -> CouplingConstants:
    """omega -> 0 limits: (T - t) s kernels replace sin omega(T - t) sin omega s."""
    if params.omega != 0.0:
        raise ValueError("derive_constants_free_particle requires omega == 0")
    _check_symmetric(f, f_D)
    m, T = params.m, params.T
    I_A = 0.0 if f.is_zero else _ramp_triangle(f, f, T, "A (omega=0)")
    I_C = 0.0
    if not (f.is_zero or f_D.is_zero):
        I_C = _ramp_triangle(f_D, f, T, "C_D (omega=0)") + _ramp_triangle(f, f_D, T, "C_D (omega=0)")
    I_AD = 0.0 if f_D.is_zero else _ramp_triangle(f_D, f_D, T, "A_D (omega=0)")
    M_eff, inv, div = _effective_mass(params, 2.0 * I_A / (m * T**4))
    return CouplingConstants(
        omega=0.0, T=T, A=0.0, B=0.0, A_D=0.0, B_D=0.0, C_D=0.0,
        g_eff=2.0 / T**2 * first_moment(f, T),
        d=-I_C / (m * T**2),
        M_eff=M_eff, inv_M_eff=inv, M_eff_divergent=div,
        phase_c1=2.0 / T * first_moment(f_D, T),
        phase_c0=-I_AD / (m * T),
        free_particle=True,
    )
