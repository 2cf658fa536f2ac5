import math

import numpy as np
import pytest

from qmeter.model import (GaussianState, Grid1D, Grid2D, OracleSettings, PhysicalParams, Scenario,
                          TimeFunction)


@pytest.fixture
def params():
    return PhysicalParams(m=1.0, M=2.0, omega=1.0, T=1.0)


@pytest.fixture
def coupling():
    return TimeFunction.half_sine(1.0, 1.0)


@pytest.fixture
def drive():
    return TimeFunction.half_sine(0.5, 1.0, role="drive")


def small_scenario(f=None, f_D=None, params=None, phi0=None, Phi0=None, n=128, dt=1e-3, **kw):
    params = params or PhysicalParams(1.0, 2.0, 1.0, 1.0)
    T = params.T
    return Scenario(
        params,
        f if f is not None else TimeFunction.half_sine(1.0, T),
        f_D if f_D is not None else TimeFunction.half_sine(0.5, T, role="drive"),
        phi0 or GaussianState(1.0, 0.7),
        Phi0 or GaussianState(0.0, 1.0),
        Grid2D(Grid1D(-8.0, 8.0, n), Grid1D(-10.0, 10.0, n)),
        OracleSettings(dt),
        **kw,
    )


@pytest.fixture
def scenario():
    return small_scenario()


def richardson_cumtrapz(g, T, n):
    """Cumulative integral of samples on n+1 and 2n+1 points, Richardson-combined to O(h^4).

    ``g`` is a callable of an array of times; returns (t, cumulative) on the coarse grid.
    """
    def cum(m):
        t = np.linspace(0.0, T, m + 1)
        y = g(t)
        c = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * (t[1] - t[0]))])
        return t, c

    t1, c1 = cum(n)
    _, c2 = cum(2 * n)
    return t1, (4.0 * c2[::2] - c1) / 3.0


def dense_triangle(outer, inner, T, n=2000):
    """int_0^T dt outer(t) int_0^t ds inner(s): Richardson-trapezoid inner sums on the
    2n grid feed a Richardson-trapezoid outer sum, O(h^4) overall."""
    t_fine, cin = richardson_cumtrapz(inner, T, 2 * n)
    y = outer(t_fine) * cin

    def trap(step):
        v = y[::step]
        h = T / (len(v) - 1)
        return h * (v.sum() - 0.5 * (v[0] + v[-1]))

    return (4.0 * trap(1) - trap(2)) / 3.0


def dense_single(g, T, n=4000):
    return richardson_cumtrapz(g, T, n)[1][-1]


def gaussian_overlap_exact(shift, sigma):
    """<Phi0(. + a) | Phi0> for a real Gaussian of std sigma."""
    return math.exp(-shift**2 / (8.0 * sigma**2))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n].line())
