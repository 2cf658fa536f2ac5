"""Domain types: physical parameters, time functions, grids, wavefunctions, scenarios.

Natural units with hbar = 1. Everything here is an immutable value object;
array payloads are flagged read-only on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import erfc

from .errors import GridError

SIN_GUARD = 1e-9
SYMMETRY_TOL = 1e-12

FAMILIES = ("zero", "constant", "half_sine", "gaussian_window", "raised_cosine", "tabulated")


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PhysicalParams:
    """Masses, oscillator frequency and measurement duration.

    ``M = math.inf`` marks an infinitely heavy pointer (1/M = 0).
    """

    m: float
    M: float
    omega: float
    T: float

    def __post_init__(self):
        if not self.m > 0 or not math.isfinite(self.m):
            raise ValueError(f"oscillator mass must be positive and finite, got {self.m}")
        if not self.M > 0:
            raise ValueError(f"pointer mass must be positive, got {self.M}")
        if not self.T > 0 or not math.isfinite(self.T):
            raise ValueError(f"duration must be positive and finite, got {self.T}")
        if not self.omega >= 0 or not math.isfinite(self.omega):
            raise ValueError(f"omega must be non-negative, got {self.omega}")

    @property
    def pointer_infinite(self) -> bool:
        return math.isinf(self.M)

    @property
    def inv_M(self) -> float:
        return 0.0 if self.pointer_infinite else 1.0 / self.M

    @property
    def omega_T(self) -> float:
        return self.omega * self.T

    def is_singular(self, guard: float = SIN_GUARD) -> bool:
        return self.omega > 0 and abs(math.sin(self.omega_T)) <= guard


@dataclass(frozen=True)
class TimeFunction:
    """A coupling f(t) or drive f_D(t) with compact support on [0, duration].

    Families and their parameters::

        zero
        constant        amplitude
        half_sine       amplitude * sin(pi t / T)
        gaussian_window amplitude * exp(-(t - center)^2 / (2 width^2)), center defaults to T/2
        raised_cosine   amplitude * (1 - cos(2 pi t / T)) / 2
        tabulated       samples equally spaced on [0, T], linear interpolation
    """

    family: str
    duration: float
    amplitude: float = 0.0
    width: Optional[float] = None
    center: Optional[float] = None
    samples: tuple = ()
    role: str = "coupling"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown time-function family {self.family!r}; expected one of {FAMILIES}")
        if self.role not in ("coupling", "drive"):
            raise ValueError(f"role must be 'coupling' or 'drive', got {self.role!r}")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.family == "gaussian_window":
            if self.width is None or not self.width > 0:
                raise ValueError("gaussian_window needs a positive width")
        if self.family == "tabulated":
            s = np.asarray(self.samples, dtype=float)
            if s.ndim != 1 or s.size < 2:
                raise ValueError("tabulated family needs at least two samples")
            if not np.all(np.isfinite(s)):
                raise ValueError("tabulated samples must be finite")
            object.__setattr__(self, "samples", tuple(float(v) for v in s))
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, T, role="coupling"):
        return cls("zero", T, role=role)

    @classmethod
    def constant(cls, c, T, role="coupling"):
        return cls("constant", T, amplitude=c, role=role)

    @classmethod
    def half_sine(cls, a, T, role="coupling"):
        return cls("half_sine", T, amplitude=a, role=role)

    @classmethod
    def gaussian_window(cls, a, width, T, center=None, role="coupling"):
        return cls("gaussian_window", T, amplitude=a, width=width, center=center, role=role)

    @classmethod
    def raised_cosine(cls, a, T, role="coupling"):
        return cls("raised_cosine", T, amplitude=a, role=role)

    @classmethod
    def tabulated(cls, samples, T, role="coupling"):
        return cls("tabulated", T, samples=tuple(samples), role=role)

    # evaluation -----------------------------------------------------------
    def __call__(self, t):
        return eval_time_function(self, t)

    @property
    def is_zero(self) -> bool:
        if self.family == "zero":
            return True
        if self.family == "tabulated":
            return all(v == 0.0 for v in self.samples)
        return self.amplitude == 0.0

    def breakpoints(self):
        """Interior kinks (tabulated knots) for quadrature routines."""
        if self.family != "tabulated":
            return ()
        n = len(self.samples)
        return tuple(self.duration * i / (n - 1) for i in range(1, n - 1))

    def scaled(self, c: float) -> "TimeFunction":
        if self.family == "tabulated":
            return TimeFunction.tabulated([c * v for v in self.samples], self.duration, role=self.role)
        return TimeFunction(self.family, self.duration, amplitude=c * self.amplitude,
                            width=self.width, center=self.center, role=self.role)


def eval_time_function(tf: TimeFunction, t):
    """Value of ``tf`` at time(s) ``t``; zero outside [0, T]."""
    t_arr = np.asarray(t, dtype=float)
    T = tf.duration
    inside = (t_arr >= 0.0) & (t_arr <= T)
    fam = tf.family
    if fam == "zero":
        out = np.zeros_like(t_arr)
    elif fam == "constant":
        out = np.full_like(t_arr, tf.amplitude)
    elif fam == "half_sine":
        out = tf.amplitude * np.sin(np.pi * t_arr / T)
    elif fam == "gaussian_window":
        c = 0.5 * T if tf.center is None else tf.center
        out = tf.amplitude * np.exp(-((t_arr - c) ** 2) / (2.0 * tf.width**2))
    elif fam == "raised_cosine":
        out = tf.amplitude * 0.5 * (1.0 - np.cos(2.0 * np.pi * t_arr / T))
    else:
        s = np.asarray(tf.samples)
        knots = np.linspace(0.0, T, s.size)
        out = np.interp(t_arr, knots, s)
    out = np.where(inside, out, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def is_midpoint_symmetric(tf: TimeFunction, n_samples: int = 1001, tol: float = SYMMETRY_TOL) -> bool:
    """True when f(t) == f(T - t) on a sample set (plus tabulated knots) to ``tol``."""
    T = tf.duration
    t = np.linspace(0.0, T, n_samples)
    if tf.family == "tabulated":
        t = np.union1d(t, np.linspace(0.0, T, len(tf.samples)))
    return bool(np.max(np.abs(eval_time_function(tf, t) - eval_time_function(tf, T - t))) <= tol)


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid: ``min + k*spacing`` for k = 0..n-1 (``max`` excluded)."""

    min: float
    max: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16:
            raise ValueError(f"grid needs n >= 16 points, got {self.n}")
        if self.n & (self.n - 1):
            raise ValueError(f"grid point count must be a power of two, got {self.n}")
        if not self.max > self.min:
            raise ValueError("grid max must exceed min")

    @property
    def spacing(self) -> float:
        return (self.max - self.min) / self.n

    @property
    def length(self) -> float:
        return self.max - self.min

    @property
    def points(self) -> np.ndarray:
        return self.min + self.spacing * np.arange(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        """FFT-ordered angular wavenumbers conjugate to ``points``."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)


@dataclass(frozen=True)
class Grid2D:
    x: Grid1D
    X: Grid1D

    @property
    def shape(self):
        return (self.x.n, self.X.n)


@dataclass(frozen=True, eq=False)
class WaveFunction1D:
    grid: Grid1D
    psi: np.ndarray

    def __post_init__(self):
        a = _frozen(self.psi, complex)
        if a.shape != (self.grid.n,):
            raise ValueError(f"amplitude shape {a.shape} does not match grid ({self.grid.n},)")
        if not np.all(np.isfinite(a)):
            raise ValueError("wavefunction amplitudes must be finite")
        object.__setattr__(self, "psi", a)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.density) * self.grid.spacing)

    def mean(self) -> float:
        return float(np.sum(self.grid.points * self.density) * self.grid.spacing / self.norm)

    def variance(self) -> float:
        mu = self.mean()
        return float(np.sum((self.grid.points - mu) ** 2 * self.density) * self.grid.spacing / self.norm)

    def mean_momentum(self) -> float:
        """<p> from the discrete Fourier transform of the amplitudes."""
        phik = np.fft.fft(self.psi)
        w = np.abs(phik) ** 2
        return float(np.sum(self.grid.wavenumbers * w) / np.sum(w))

    def edge_probability(self, fraction: float = 1.0 / 32) -> float:
        """Probability within ``fraction`` of the grid length from either edge."""
        k = max(1, int(round(fraction * self.grid.n)))
        d = self.density
        return float((d[:k].sum() + d[-k:].sum()) * self.grid.spacing)


@dataclass(frozen=True, eq=False)
class WaveFunction2D:
    """Joint amplitude psi[ix, iX] on the (oscillator x, pointer X) grid."""

    grid: Grid2D
    psi: np.ndarray

    def __post_init__(self):
        a = _frozen(self.psi, complex)
        if a.shape != self.grid.shape:
            raise ValueError(f"amplitude shape {a.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("wavefunction amplitudes must be finite")
        object.__setattr__(self, "psi", a)

    @property
    def cell(self) -> float:
        return self.grid.x.spacing * self.grid.X.spacing

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.density) * self.cell)

    @classmethod
    def product(cls, phi: WaveFunction1D, Phi: WaveFunction1D) -> "WaveFunction2D":
        return cls(Grid2D(phi.grid, Phi.grid), np.outer(phi.psi, Phi.psi))

    def edge_probability(self, fraction: float = 1.0 / 32) -> float:
        d = self.density
        kx = max(1, int(round(fraction * self.grid.x.n)))
        kX = max(1, int(round(fraction * self.grid.X.n)))
        mask = np.zeros(d.shape, dtype=bool)
        mask[:kx, :] = mask[-kx:, :] = True
        mask[:, :kX] = mask[:, -kX:] = True
        return float(d[mask].sum() * self.cell)


def tail_probability(grid: Grid1D, center: float, sigma: float) -> float:
    """Probability mass of a Gaussian density (std ``sigma``) lying outside the grid."""
    lo = (center - grid.min) / (sigma * math.sqrt(2.0))
    hi = (grid.max - center) / (sigma * math.sqrt(2.0))
    return float(0.5 * erfc(lo) + 0.5 * erfc(hi))


def make_gaussian_packet(grid: Grid1D, center: float, width: float, momentum: float = 0.0,
                         tail_tol: float = 1e-8) -> WaveFunction1D:
    """psi(u) = (2 pi sigma^2)^(-1/4) exp(-(u - center)^2 / (4 sigma^2) + i k u).

    ``width`` is the position standard deviation sigma.
    """
    if width < 2.0 * grid.spacing:
        raise GridError(f"under-resolved packet: width {width:g} < 2 x spacing {grid.spacing:g}")
    tail = tail_probability(grid, center, width)
    if tail > tail_tol:
        raise GridError(f"packet does not fit grid: probability {tail:.3g} outside [{grid.min}, {grid.max}]")
    u = grid.points
    psi = (2.0 * np.pi * width**2) ** -0.25 * np.exp(-((u - center) ** 2) / (4.0 * width**2) + 1j * momentum * u)
    return WaveFunction1D(grid, psi)


@dataclass(frozen=True)
class GaussianState:
    center: float = 0.0
    width: float = 1.0
    momentum: float = 0.0

    kind = "gaussian"


@dataclass(frozen=True)
class QuasiDelta:
    """Narrow Gaussian standing in for a position eigenstate; width defaults to 4 x spacing."""

    center: float = 0.0
    width: Optional[float] = None

    kind = "quasi_delta"

    def resolved_width(self, grid: Grid1D) -> float:
        return 4.0 * grid.spacing if self.width is None else self.width


StateSpec = Union[GaussianState, QuasiDelta]


def state_width(spec: StateSpec, grid: Grid1D) -> float:
    return spec.resolved_width(grid) if isinstance(spec, QuasiDelta) else spec.width


def build_state(spec: StateSpec, grid: Grid1D, tail_tol: float = 1e-8) -> WaveFunction1D:
    if isinstance(spec, QuasiDelta):
        return make_gaussian_packet(grid, spec.center, spec.resolved_width(grid), 0.0, tail_tol)
    return make_gaussian_packet(grid, spec.center, spec.width, spec.momentum, tail_tol)


def quasi_delta_weight(spec: StateSpec, grid: Grid1D) -> float:
    """Integral of the (real, normalized) Gaussian amplitude: (8 pi sigma^2)^(1/4).

    A quasi-delta of width sigma acts as ``weight * delta(x - center)``.
    """
    s = state_width(spec, grid)
    return (8.0 * np.pi * s**2) ** 0.25


@dataclass(frozen=True)
class OracleSettings:
    dt: float = 1e-3
    order: int = 2

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("oracle dt must be positive")
        if self.order != 2:
            raise ValueError("only second-order (Strang) splitting is implemented")


@dataclass(frozen=True)
class Scenario:
    """Full experiment description consumed by both engines."""

    params: PhysicalParams
    f: TimeFunction
    f_D: TimeFunction
    phi0: StateSpec
    Phi0: StateSpec
    grid: Grid2D
    oracle: OracleSettings = field(default_factory=OracleSettings)
    engine: str = "analytic"
    name: str = "scenario"

    def __post_init__(self):
        if self.engine not in ("analytic", "oracle", "both"):
            raise ValueError(f"engine must be analytic, oracle or both, got {self.engine!r}")
        for tf in (self.f, self.f_D):
            if abs(tf.duration - self.params.T) > 1e-12 * self.params.T:
                raise ValueError("time-function duration must equal params.T")

    @property
    def is_symmetric(self) -> bool:
        return is_midpoint_symmetric(self.f) and is_midpoint_symmetric(self.f_D)

    @property
    def has_sharp_state(self) -> bool:
        return isinstance(self.phi0, QuasiDelta) or isinstance(self.Phi0, QuasiDelta)

    def initial_states(self):
        return build_state(self.phi0, self.grid.x), build_state(self.Phi0, self.grid.X)

    def check_fits(self, tol: float = 1e-6):
        """Initial states must leave less than ``tol`` probability outside their grids."""
        for label, spec, g in (("phi0", self.phi0, self.grid.x), ("Phi0", self.Phi0, self.grid.X)):
            w = state_width(spec, g)
            if w < 2.0 * g.spacing:
                raise GridError(f"{label}: under-resolved packet (width {w:g}, spacing {g.spacing:g})")
            p = tail_probability(g, spec.center, w)
            if p >= tol:
                raise GridError(f"{label}: edge probability {p:.3g} exceeds {tol:g}")

    def with_(self, **changes) -> "Scenario":
        from dataclasses import replace

        return replace(self, **changes)
