"""Acceptance criteria over the reference scenarios.

Each criterion is a function of a ``SuiteContext`` and returns a
``CriterionResult``. The context loads the scenario files once, memoizes the
expensive runs and collects every final norm for the unitarity criterion, so
``qmeter suite`` and the pytest acceptance module share the same code path.
"""

from __future__ import annotations

import dataclasses
import math
import sys
import time
import traceback
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import oracle
from .couplings import CouplingConstants, derive_constants, derive_constants_free_particle
from .errors import QMeterError
from .evolution import (EDGE_TOL, FinalState, conditional_pointer_mean, conditional_pointer_means, evolve,
                        free_oscillator_evolve, marginal_x)
from .model import GaussianState, Grid1D, Grid2D, Scenario, TimeFunction, quasi_delta_weight
from .scenario_io import load_scenario
from .transitions import transition_probabilities

SCENARIO_NAMES = (
    "oracle_equivalence", "self_convergence", "von_neumann", "narrow_pointer", "sharp_oscillator",
    "drive_displacement", "drive_phase", "constant_coupling", "sharp_pointer", "asymmetric",
)

# sweep for the narrow-pointer criterion, widest first
NARROW_SIGMAS = (1e-2, 5e-3, 2e-3, 1e-3)
CONVERGENCE_DTS = (2.4e-3, 1.2e-3, 6e-4, 3e-4)
ASYMMETRIC_CENTERS = (-1.0, 0.0, 1.0)

MUTATIONS = {
    "flip_d_sign": lambda c: dataclasses.replace(c, d=-c.d),
}


def reference_dir() -> Path:
    return Path(str(resources.files("qmeter") / "scenarios"))


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str = ""
    values: dict = field(default_factory=dict)
    error: Optional[str] = None
    seconds: float = 0.0

    def __post_init__(self):
        self.passed = bool(self.passed)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = self.error if self.error else self.detail
        return f"[{status}] criterion {self.number:2d} {self.title}: {msg}"


class SuiteContext:
    def __init__(self, path=None, inject: Optional[str] = None):
        root = Path(path) if path is not None else reference_dir()
        missing = [n for n in SCENARIO_NAMES if not (root / f"{n}.yaml").is_file()]
        if missing:
            raise FileNotFoundError(f"missing scenario files in {root}: " + ", ".join(f"{n}.yaml" for n in missing))
        if inject is not None and inject not in MUTATIONS:
            raise ValueError(f"unknown mutation {inject!r}")
        self.root = root
        self.scenarios = {n: load_scenario(root / f"{n}.yaml") for n in SCENARIO_NAMES}
        self._mutate: Optional[Callable] = MUTATIONS.get(inject)
        self._cache = {}
        self.norms = []  # (label, engine, norm, contained)

    def constants(self, sc: Scenario) -> CouplingConstants:
        c = derive_constants(sc.params, sc.f, sc.f_D)
        return self._mutate(c) if self._mutate else c

    def _record(self, label, fs: FinalState):
        contained = fs.psi.edge_probability() <= EDGE_TOL
        self.norms.append((label, fs.engine, fs.norm, contained))

    def analytic(self, sc: Scenario, label: str) -> FinalState:
        key = ("analytic", label)
        if key not in self._cache:
            fs = evolve(sc, strict=False, constants=self.constants(sc))
            self._record(label, fs)
            self._cache[key] = fs
        return self._cache[key]

    def oracle(self, sc: Scenario, label: str, dt: Optional[float] = None) -> FinalState:
        key = ("oracle", label, dt)
        if key not in self._cache:
            fs = oracle.run(sc, dt=dt, strict=False)
            self._record(label, fs)
            self._cache[key] = fs
        return self._cache[key]


def _undriven(sc: Scenario) -> Scenario:
    return sc.with_(f_D=TimeFunction.zero(sc.params.T, role="drive"))


# criteria ---------------------------------------------------------------------

def criterion_oracle_equivalence(ctx: SuiteContext) -> CriterionResult:
    sc = ctx.scenarios["oracle_equivalence"]
    t0 = time.perf_counter()
    a = ctx.analytic(sc, "oracle_equivalence")
    o = ctx.oracle(sc, "oracle_equivalence")
    wall = time.perf_counter() - t0
    cmp = oracle.compare(a, o)
    ok = cmp["fidelity"] > 0.999 and cmp["l2_error"] < 1e-3 and wall < 60.0
    return CriterionResult(1, "oracle equivalence", ok,
                           f"fidelity={cmp['fidelity']:.12f} L2={cmp['l2_error']:.3e} runtime={wall:.1f}s",
                           dict(cmp, runtime=wall))


def criterion_unitarity(ctx: SuiteContext) -> CriterionResult:
    """Norms of every run made by the other criteria; analytic runs only when contained."""
    worst_a = worst_o = 0.0
    bad = []
    skipped = 0
    for label, engine, norm, contained in ctx.norms:
        dev = abs(norm - 1.0)
        if engine == "oracle":
            worst_o = max(worst_o, dev)
            if dev > 1e-10:
                bad.append(f"{label}/oracle {norm:.15f}")
        elif contained:
            worst_a = max(worst_a, dev)
            if dev > 1e-6:
                bad.append(f"{label}/analytic {norm:.10f}")
        else:
            skipped += 1
    ok = not bad and len(ctx.norms) > skipped
    detail = (f"max |norm-1| analytic={worst_a:.2e} oracle={worst_o:.2e} over {len(ctx.norms) - skipped} runs "
              f"({skipped} uncontained quasi-delta runs exempt)")
    if bad:
        detail += "; out of tolerance: " + ", ".join(bad)
    return CriterionResult(2, "unitarity", ok, detail,
                           {"analytic_max_dev": worst_a, "oracle_max_dev": worst_o, "skipped": skipped})


def criterion_von_neumann(ctx: SuiteContext) -> CriterionResult:
    sc = ctx.scenarios["von_neumann"]
    x0 = sc.phi0.center
    target = sc.f.amplitude * x0
    vals = {}
    for engine in ("analytic", "oracle"):
        fs = ctx.analytic(sc, "von_neumann") if engine == "analytic" else ctx.oracle(sc, "von_neumann")
        vals[engine] = conditional_pointer_mean(fs, x0)
    rel = {k: abs(v - target) / abs(target) for k, v in vals.items()}
    ok = all(r < 0.01 for r in rel.values())
    return CriterionResult(3, "von Neumann limit", ok,
                           f"E[X|x=x0] analytic={vals['analytic']:.7f} oracle={vals['oracle']:.7f} "
                           f"target g0*x0={target:g}", {"means": vals, "relative_error": rel})


def total_variation(p, q, dx) -> float:
    """TV distance of two densities on one grid, counting mass missing from the grid."""
    mp, mq = p.sum() * dx, q.sum() * dx
    return 0.5 * (np.abs(p - q).sum() * dx + abs(1.0 - mp) + abs(1.0 - mq))


def narrow_pointer_tv(sc: Scenario, sigma: float) -> float:
    n = sc.grid.X.n
    half = 0.5 * max(sc.grid.X.length, 0.25 * n * sigma)  # spacing at most sigma / 4
    gX = Grid1D(-half, half, n)
    s = sc.with_(Phi0=GaussianState(0.0, sigma), grid=Grid2D(sc.grid.x, gX))
    fs = evolve(s, strict=False)  # pointer wraps periodically; exact for the x marginal
    phi0, _ = s.initial_states()
    free = free_oscillator_evolve(phi0, s.params).density
    return total_variation(marginal_x(fs), free, s.grid.x.spacing)


def criterion_narrow_pointer(ctx: SuiteContext) -> CriterionResult:
    sc = ctx.scenarios["narrow_pointer"]
    tvs = [narrow_pointer_tv(sc, s) for s in NARROW_SIGMAS]
    small = tvs[-1] < 0.01
    monotone = all(b < a for a, b in zip(tvs, tvs[1:]))
    detail = ", ".join(f"TV(sigma_X={s:g})={t:.4g}" for s, t in zip(NARROW_SIGMAS, tvs))
    detail += f"; TV<0.01: {small}; decreasing as sigma_X shrinks: {monotone}"
    return CriterionResult(4, "narrow-pointer marginal", small and monotone, detail,
                           {"sigmas": list(NARROW_SIGMAS), "tv": tvs})


def flat_window(fs: FinalState, halfwidth: float):
    p = marginal_x(fs)
    w = np.abs(fs.x - 0.5 * (fs.grid.x.min + fs.grid.x.max)) <= halfwidth
    mean = float(p[w].mean())
    return mean, float(np.max(np.abs(p[w] / mean - 1.0)))


def criterion_sharp_oscillator(ctx: SuiteContext) -> CriterionResult:
    sc = ctx.scenarios["sharp_oscillator"]
    fs = ctx.analytic(sc, "sharp_oscillator")
    mean, flat = flat_window(fs, 0.25 * sc.grid.x.length)
    p = sc.params
    level = p.m * p.omega / (2 * math.pi * math.sin(p.omega_T)) * quasi_delta_weight(sc.phi0, sc.grid.x) ** 2
    ok = flat <= 0.02 and abs(mean / level - 1.0) <= 0.02
    return CriterionResult(5, "sharp-oscillator flat marginal", ok,
                           f"max deviation from flat={flat:.3%} level ratio-1={mean / level - 1:.3e}",
                           {"flatness": flat, "level": level, "mean": mean})


def _translate_X(fs: FinalState, a: float) -> np.ndarray:
    """psi(x, X - a), spectrally along X."""
    K = fs.grid.X.wavenumbers
    return np.fft.ifft(np.fft.fft(fs.psi.psi, axis=1) * np.exp(-1j * K * a)[None, :], axis=1)


def criterion_drive(ctx: SuiteContext) -> CriterionResult:
    sc = ctx.scenarios["drive_displacement"]
    d_true = derive_constants(sc.params, sc.f, sc.f_D).d
    x_probe = sc.phi0.center
    shifts = {}
    for engine in ("analytic", "oracle"):
        run = ctx.analytic if engine == "analytic" else ctx.oracle
        drv = run(sc, "drive_displacement")
        und = run(_undriven(sc), "drive_displacement/undriven")
        shifts[engine] = conditional_pointer_mean(drv, x_probe) - conditional_pointer_mean(und, x_probe)
    disp_err = {k: abs(v - d_true) for k, v in shifts.items()}

    ps = ctx.scenarios["drive_phase"]
    c = ctx.constants(ps)
    drv = ctx.analytic(ps, "drive_phase")
    und = ctx.analytic(_undriven(ps), "drive_phase/undriven")
    moved = _translate_X(und, c.d)
    a = drv.psi.psi
    mask = np.abs(a) > 1e-2 * np.abs(a).max()
    xbar = 0.5 * (drv.x[:, None] + ps.phi0.center) + np.zeros_like(a.real)
    resid = np.angle(a * np.conj(moved) * np.exp(-1j * (c.phase_c1 * xbar + c.phase_c0)))
    phase_err = float(np.max(np.abs(resid[mask])))

    ok = all(e <= 1e-3 for e in disp_err.values()) and phase_err <= 1e-3
    return CriterionResult(6, "drive displacement and phase", ok,
                           f"shift-d analytic={shifts['analytic'] - d_true:.2e} oracle={shifts['oracle'] - d_true:.2e} "
                           f"(d={d_true:.6f}); max phase residual={phase_err:.2e} rad",
                           {"d": d_true, "shift": shifts, "phase_residual": phase_err})


def criterion_constants(ctx: SuiteContext) -> CriterionResult:
    sc = ctx.scenarios["constant_coupling"]
    g0 = sc.f.amplitude
    T = sc.params.T
    g_err = 0.0
    for wT in (sc.params.omega_T, 0.3, 2.5):
        p = dataclasses.replace(sc.params, omega=wT / T)
        c = derive_constants(p, sc.f, sc.f_D)
        g_err = max(g_err, abs(c.g_eff - 2 * g0 / wT * math.tan(0.5 * wT)))
    small = derive_constants(dataclasses.replace(sc.params, omega=1e-4 / T), sc.f, sc.f_D)
    free = derive_constants_free_particle(dataclasses.replace(sc.params, omega=0.0), sc.f, sc.f_D)
    rel = {k: abs(getattr(small, k) / getattr(free, k) - 1.0)
           for k in ("g_eff", "d", "inv_M_eff", "phase_c1", "phase_c0")}
    worst = max(rel.values())
    ok = g_err <= 1e-10 and worst <= 1e-6
    return CriterionResult(7, "closed-form constants", ok,
                           f"max |g_eff - closed form|={g_err:.2e}; omega->0 max relative gap={worst:.2e}",
                           {"g_eff_error": g_err, "small_omega_relative": rel})


def criterion_transitions(ctx: SuiteContext) -> CriterionResult:
    sc = ctx.scenarios["sharp_pointer"]
    c = ctx.constants(sc)
    rep = transition_probabilities(sc.params, c)
    exact_avg = rep.p_average == 2.0 * rep.p_position
    small = transition_probabilities(dataclasses.replace(sc.params, omega=1e-4 / sc.params.T),
                                     derive_constants(dataclasses.replace(sc.params, omega=1e-4 / sc.params.T),
                                                      sc.f, sc.f_D))
    factor_gap = abs(small.path_average_factor - 2.0)
    p_ptr_ok = sc.params.pointer_infinite or math.isclose(rep.p_pointer, sc.params.M / (2 * math.pi * sc.params.T),
                                                          rel_tol=1e-15)
    fs = ctx.analytic(sc, "sharp_pointer")
    mean, flat = flat_window(fs, 0.25 * sc.grid.x.length)
    level = rep.p_sharp_pointer * quasi_delta_weight(sc.Phi0, sc.grid.X) ** 2
    lvl_err = abs(mean / level - 1.0)
    ok = exact_avg and factor_gap <= 1e-8 and p_ptr_ok and flat <= 0.02 and lvl_err <= 0.02
    return CriterionResult(8, "transition-probability identities", ok,
                           f"p_average==2p_position: {exact_avg}; |factor-2| at wT=1e-4: {factor_gap:.1e}; "
                           f"sharp-pointer flatness={flat:.2%} level error={lvl_err:.2%}",
                           {"path_factor_gap": factor_gap, "flatness": flat, "level_error": lvl_err})


def criterion_convergence(ctx: SuiteContext) -> CriterionResult:
    sc = ctx.scenarios["self_convergence"]
    a = ctx.analytic(sc, "self_convergence")
    errs = [oracle.compare(a, ctx.oracle(sc, "self_convergence", dt))["l2_error"] for dt in CONVERGENCE_DTS]
    ratios = [e0 / e1 for e0, e1 in zip(errs, errs[1:])]
    # dt-dominated pairs: the finer error still far above the analytic floor
    floor = 1e-10
    dom = [r for r, e1 in zip(ratios, errs[1:]) if e1 > 100 * floor]
    decreasing = all(e1 < e0 for e0, e1 in zip(errs, errs[1:]) if e0 > 100 * floor)
    ok = decreasing and len(dom) >= 2 and all(3.2 <= r <= 4.8 for r in dom)
    return CriterionResult(9, "oracle self-convergence", ok,
                           "L2=" + ", ".join(f"{e:.3e}" for e in errs) + "; ratios=" + ", ".join(f"{r:.3f}" for r in ratios),
                           {"dt": list(CONVERGENCE_DTS), "l2": errs, "ratios": ratios})


def asymmetric_fit(ctx: SuiteContext):
    """Least-squares fit E[X | x] = a x0 + b x + c over oracle runs at several x0."""
    sc = ctx.scenarios["asymmetric"]
    rows, rhs = [], []
    for x0 in ASYMMETRIC_CENTERS:
        s = sc.with_(phi0=dataclasses.replace(sc.phi0, center=x0))
        fs = ctx.oracle(s, f"asymmetric/x0={x0:g}")
        w = marginal_x(fs)
        sel = (w > 1e-3 * w.max()) & (np.abs(fs.x) <= 0.25 * sc.grid.x.length)
        cm = conditional_pointer_means(fs)
        for x, y in zip(fs.x[sel], cm[sel]):
            rows.append((x0, x, 1.0))
            rhs.append(y)
    A = np.array(rows)
    y = np.array(rhs)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(1, len(y) - 3)
    cov = (resid @ resid / dof) * np.linalg.inv(A.T @ A)
    se = np.sqrt(np.diag(cov))
    return coef, se


def criterion_asymmetric(ctx: SuiteContext) -> CriterionResult:
    (a, b, c0), (sa, sb, _) = asymmetric_fit(ctx)
    se = math.hypot(sa, sb)
    ok = abs(a - b) > 5 * se
    return CriterionResult(10, "asymmetric coupling coefficients", ok,
                           f"a={a:.6f} b={b:.6f} |a-b|={abs(a - b):.3e} fit SE={se:.2e}",
                           {"a": a, "b": b, "c": c0, "se": se})


CRITERIA = {
    1: criterion_oracle_equivalence,
    3: criterion_von_neumann,
    4: criterion_narrow_pointer,
    5: criterion_sharp_oscillator,
    6: criterion_drive,
    7: criterion_constants,
    8: criterion_transitions,
    9: criterion_convergence,
    10: criterion_asymmetric,
    2: criterion_unitarity,  # last: it audits the runs made above
}

TITLES = {
    1: "oracle equivalence", 2: "unitarity", 3: "von Neumann limit", 4: "narrow-pointer marginal",
    5: "sharp-oscillator flat marginal", 6: "drive displacement and phase", 7: "closed-form constants",
    8: "transition-probability identities", 9: "oracle self-convergence", 10: "asymmetric coupling coefficients",
}


def evaluate(ctx: SuiteContext, only=None, progress=None) -> list:
    results = []
    for n, fn in CRITERIA.items():
        if only is not None and n not in only:
            continue
        t0 = time.perf_counter()
        try:
            r = fn(ctx)
        except QMeterError as e:
            # e.g. a phase-bound violation aborts this case only
            r = CriterionResult(n, TITLES[n], False, error=f"{type(e).__name__}: {e}")
        except Exception as e:  # noqa: BLE001 - a crashing criterion is a failing criterion
            r = CriterionResult(n, TITLES[n], False, error=f"{type(e).__name__}: {e}",
                                values={"traceback": traceback.format_exc()})
        r.seconds = time.perf_counter() - t0
        results.append(r)
        if progress:
            progress(r)
    return sorted(results, key=lambda r: r.number)


def format_table(results) -> str:
    head = f"{'#':>3}  {'status':6}  {'time':>7}  criterion"
    lines = [head, "-" * len(head)]
    for r in results:
        lines.append(f"{r.number:>3}  {'PASS' if r.passed else 'FAIL':6}  {r.seconds:6.1f}s  {r.title}")
        lines.append(f"{'':>3}  {'':6}  {'':>7}  {r.error or r.detail}")
    n_ok = sum(r.passed for r in results)
    lines.append(f"{n_ok}/{len(results)} criteria passed")
    return "\n".join(lines)


def run_suite(path=None, inject: Optional[str] = None, only=None, stream=None) -> int:
    """Run the acceptance criteria, print a table, return a process exit code."""
    stream = stream or sys.stdout
    ctx = SuiteContext(path, inject=inject)
    results = evaluate(ctx, only=only)
    print(format_table(results), file=stream)
    return 0 if all(r.passed for r in results) else 1
