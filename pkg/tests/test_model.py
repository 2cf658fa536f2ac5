import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmeter.errors import GridError
from qmeter.model import (GaussianState, Grid1D, Grid2D, PhysicalParams, QuasiDelta, TimeFunction,
                          WaveFunction1D, WaveFunction2D, build_state, eval_time_function, is_midpoint_symmetric,
                          make_gaussian_packet, quasi_delta_weight, tail_probability)

from conftest import small_scenario


@pytest.mark.parametrize("kw", [dict(m=0.0), dict(m=-1.0), dict(M=0.0), dict(T=0.0), dict(omega=-1.0),
                                dict(T=math.inf), dict(m=math.nan)])
def test_params_reject_invalid(kw):
    base = dict(m=1.0, M=1.0, omega=1.0, T=1.0)
    base.update(kw)
    with pytest.raises(ValueError):
        PhysicalParams(**base)


def test_infinite_pointer_mass():
    p = PhysicalParams(1.0, math.inf, 1.0, 1.0)
    assert p.pointer_infinite and p.inv_M == 0.0


def test_singular_duration_flag():
    assert PhysicalParams(1.0, 1.0, 1.0, math.pi).is_singular()
    assert not PhysicalParams(1.0, 1.0, 1.0, 1.0).is_singular()
    assert not PhysicalParams(1.0, 1.0, 0.0, math.pi).is_singular()


def test_time_function_values():
    T = 2.0
    t = np.array([-0.1, 0.0, 0.5, 1.0, 2.0, 2.1])
    np.testing.assert_allclose(TimeFunction.half_sine(3.0, T)(t), 3.0 * np.sin(np.pi * t / T) * (t >= 0) * (t <= T))
    np.testing.assert_array_equal(TimeFunction.constant(2.0, T)(t), [0, 2, 2, 2, 2, 0])
    rc = TimeFunction.raised_cosine(1.0, T)
    assert rc(1.0) == pytest.approx(1.0) and rc(0.0) == 0.0
    gw = TimeFunction.gaussian_window(1.0, 0.3, T)
    assert gw(1.0) == 1.0
    assert gw(1.3) == pytest.approx(math.exp(-0.5))
    tab = TimeFunction.tabulated([0.0, 1.0, 0.0], T)
    assert tab(0.5) == pytest.approx(0.5) and tab(1.0) == 1.0 and tab(1.5) == pytest.approx(0.5)
    assert isinstance(tab(0.25), float)


def test_time_function_validation():
    with pytest.raises(ValueError):
        TimeFunction("square", 1.0)
    with pytest.raises(ValueError):
        TimeFunction.gaussian_window(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        TimeFunction.tabulated([1.0], 1.0)
    with pytest.raises(ValueError):
        TimeFunction.tabulated([0.0, math.inf], 1.0)
    with pytest.raises(ValueError):
        TimeFunction.constant(1.0, 1.0, role="pump")


def test_symmetry_detection():
    T = 1.0
    for tf in (TimeFunction.half_sine(1.0, T), TimeFunction.constant(2.0, T), TimeFunction.raised_cosine(1.0, T),
               TimeFunction.gaussian_window(1.0, 0.2, T), TimeFunction.tabulated([0.0, 1.0, 1.0, 0.0], T)):
        assert is_midpoint_symmetric(tf)
    for tf in (TimeFunction.tabulated([0.0, 1.0], T), TimeFunction.gaussian_window(1.0, 0.2, T, center=0.3)):
        assert not is_midpoint_symmetric(tf)


def test_scaled_and_zero():
    tf = TimeFunction.tabulated([0.0, 2.0, 0.0], 1.0)
    assert tf.scaled(0.5)(0.5) == pytest.approx(1.0)
    assert tf.scaled(0.0).is_zero
    assert TimeFunction.half_sine(0.0, 1.0).is_zero
    assert TimeFunction.zero(1.0).breakpoints() == ()
    assert tf.breakpoints() == (0.5,)


def test_grid_shape_rules():
    g = Grid1D(-4.0, 4.0, 64)
    assert g.spacing == 0.125 and g.length == 8.0
    assert g.points[0] == -4.0 and g.points[-1] == 4.0 - 0.125
    np.testing.assert_allclose(g.wavenumbers, 2 * np.pi * np.fft.fftfreq(64, 0.125))
    for n in (8, 100):
        with pytest.raises(ValueError):
            Grid1D(0.0, 1.0, n)
    with pytest.raises(ValueError):
        Grid1D(1.0, 1.0, 64)


@settings(max_examples=40, deadline=None)
@given(center=st.floats(-2.0, 2.0), width=st.floats(0.3, 1.5), k=st.floats(-3.0, 3.0))
def test_gaussian_packet_moments(center, width, k):
    g = Grid1D(-12.0, 12.0, 512)
    w = make_gaussian_packet(g, center, width, k)
    assert w.norm == pytest.approx(1.0, abs=1e-12)
    assert w.mean() == pytest.approx(center, abs=1e-10)
    assert w.variance() == pytest.approx(width**2, rel=1e-9)
    assert w.mean_momentum() == pytest.approx(k, abs=1e-8)


def test_packet_guards():
    g = Grid1D(-1.0, 1.0, 64)
    with pytest.raises(GridError, match="under-resolved"):
        make_gaussian_packet(g, 0.0, 0.04)
    with pytest.raises(GridError, match="does not fit"):
        make_gaussian_packet(g, 0.9, 0.2)
    assert tail_probability(g, 0.0, 0.1) < 1e-20


def test_quasi_delta_weight_is_amplitude_integral():
    g = Grid1D(-2.0, 2.0, 512)
    spec = QuasiDelta(0.3)
    psi = build_state(spec, g)
    assert spec.resolved_width(g) == 4 * g.spacing
    assert psi.psi.sum().real * g.spacing == pytest.approx(quasi_delta_weight(spec, g), rel=1e-12)


def test_wavefunction_arrays_are_read_only():
    g = Grid1D(-1.0, 1.0, 16)
    w = WaveFunction1D(g, np.ones(16))
    with pytest.raises(ValueError):
        w.psi[0] = 2.0
    with pytest.raises(ValueError):
        WaveFunction1D(g, np.full(16, np.nan))
    with pytest.raises(ValueError):
        WaveFunction1D(g, np.ones(8))


def test_product_state_norm_and_edges():
    gx, gX = Grid1D(-8.0, 8.0, 128), Grid1D(-10.0, 10.0, 64)
    a, b = make_gaussian_packet(gx, 1.0, 0.7), make_gaussian_packet(gX, 0.0, 1.0)
    w = WaveFunction2D.product(a, b)
    assert w.grid == Grid2D(gx, gX)
    assert w.norm == pytest.approx(1.0, abs=1e-12)
    assert w.edge_probability() < 1e-12


def test_scenario_checks():
    sc = small_scenario()
    sc.check_fits()
    assert sc.is_symmetric and not sc.has_sharp_state
    with pytest.raises(GridError):
        sc.with_(phi0=GaussianState(7.5, 0.7)).check_fits()
    assert sc.with_(Phi0=QuasiDelta(0.0)).has_sharp_state
    with pytest.raises(ValueError):
        sc.with_(engine="magic")
    with pytest.raises(ValueError):
        sc.with_(f=TimeFunction.half_sine(1.0, 2.0))
    asym = sc.with_(f=TimeFunction.tabulated([0.0, 1.0], 1.0))
    assert not asym.is_symmetric


def test_eval_outside_support_is_zero():
    tf = TimeFunction.tabulated([1.0, 1.0], 1.0)
    assert eval_time_function(tf, -1e-9) == 0.0 and eval_time_function(tf, 1.0 + 1e-9) == 0.0
