"""Scenario documents: YAML key/value with nested sections.

Schema (``*`` marks required keys)::

    name: str                       # defaults to the file stem
    engine: analytic | oracle | both  (default analytic)
    params*:  {m*, M*, omega*, T*}  # M: .inf for an infinitely heavy pointer
    coupling*: {family*, amplitude, width, center, samples}
    drive:     same keys as coupling (default: family zero)
    oscillator_state*: {kind*: gaussian | quasi_delta, center, width, momentum}
    pointer_state:     same keys (default: gaussian, center 0, width 1)
    grid*: {x*: {min*, max*, n*}, X*: {min*, max*, n*}}
    oracle: {dt: 1e-3, order: 2}

Floats are written with ``repr`` precision, so dump -> load round-trips bit-exactly.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

import yaml

from .couplings import derive_constants
from .errors import ScenarioError
from .model import (FAMILIES, GaussianState, Grid1D, Grid2D, OracleSettings, PhysicalParams, QuasiDelta,
                    Scenario, TimeFunction)

_TF_KEYS = {"family", "amplitude", "width", "center", "samples"}
_STATE_KEYS = {"kind", "center", "width", "momentum"}
_TOP_KEYS = {"name", "engine", "params", "coupling", "drive", "oscillator_state", "pointer_state", "grid", "oracle"}


def _section(doc, key, where, required=True):
    path = f"{where}.{key}" if where else key
    if key not in doc or doc[key] is None:
        if required:
            raise ScenarioError(path, "missing required section")
        return None, path
    val = doc[key]
    if not isinstance(val, dict):
        raise ScenarioError(path, f"expected a mapping, got {type(val).__name__}")
    return val, path


def _unknown(sec, allowed, path):
    extra = set(sec) - allowed
    if extra:
        raise ScenarioError(f"{path}.{sorted(extra)[0]}", "unknown key")


def _num(sec, key, path, default=None, required=False, integer=False):
    if key not in sec or sec[key] is None:
        if required:
            raise ScenarioError(f"{path}.{key}", "missing required value")
        return default
    v = sec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{path}.{key}", f"expected a number, got {v!r}")
    if integer:
        if int(v) != v:
            raise ScenarioError(f"{path}.{key}", f"expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _time_function(sec, path, T, role):
    _unknown(sec, _TF_KEYS, path)
    fam = sec.get("family")
    if fam not in FAMILIES:
        raise ScenarioError(f"{path}.family", f"expected one of {', '.join(FAMILIES)}, got {fam!r}")
    kw = {"amplitude": _num(sec, "amplitude", path, 0.0, required=fam not in ("zero", "tabulated"))}
    if fam == "gaussian_window":
        kw["width"] = _num(sec, "width", path, required=True)
        kw["center"] = _num(sec, "center", path)
    if fam == "tabulated":
        s = sec.get("samples")
        if not isinstance(s, list) or len(s) < 2:
            raise ScenarioError(f"{path}.samples", "tabulated family needs a list of at least two samples")
        try:
            kw["samples"] = tuple(float(v) for v in s)
        except (TypeError, ValueError):
            raise ScenarioError(f"{path}.samples", "samples must be numbers") from None
        if not all(math.isfinite(v) for v in kw["samples"]):
            raise ScenarioError(f"{path}.samples", "samples must be finite")
    try:
        return TimeFunction(fam, T, role=role, **kw)
    except ValueError as e:
        raise ScenarioError(path, str(e)) from None


def _state(sec, path):
    _unknown(sec, _STATE_KEYS, path)
    kind = sec.get("kind")
    if kind == "gaussian":
        return GaussianState(_num(sec, "center", path, 0.0), _num(sec, "width", path, required=True),
                             _num(sec, "momentum", path, 0.0))
    if kind == "quasi_delta":
        if "momentum" in sec:
            raise ScenarioError(f"{path}.momentum", "quasi_delta states carry no momentum")
        return QuasiDelta(_num(sec, "center", path, 0.0), _num(sec, "width", path))
    raise ScenarioError(f"{path}.kind", f"expected gaussian or quasi_delta, got {kind!r}")


def _grid(sec, path):
    _unknown(sec, {"min", "max", "n"}, path)
    try:
        return Grid1D(_num(sec, "min", path, required=True), _num(sec, "max", path, required=True),
                      _num(sec, "n", path, required=True, integer=True))
    except ValueError as e:
        raise ScenarioError(path, str(e)) from None


def scenario_from_dict(doc: dict, name: str = "scenario", validate: bool = True) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("<root>", "scenario document must be a mapping")
    _unknown(doc, _TOP_KEYS, "<root>")
    p, pp = _section(doc, "params", "")
    _unknown(p, {"m", "M", "omega", "T"}, pp)
    try:
        params = PhysicalParams(*(_num(p, k, pp, required=True) for k in ("m", "M", "omega", "T")))
    except ValueError as e:
        raise ScenarioError(pp, str(e)) from None
    T = params.T
    c, cp = _section(doc, "coupling", "")
    f = _time_function(c, cp, T, "coupling")
    dsec, dp = _section(doc, "drive", "", required=False)
    f_D = _time_function(dsec, dp, T, "drive") if dsec is not None else TimeFunction.zero(T, role="drive")
    o, op = _section(doc, "oscillator_state", "")
    phi0 = _state(o, op)
    ps, pp2 = _section(doc, "pointer_state", "", required=False)
    Phi0 = _state(ps, pp2) if ps is not None else GaussianState(0.0, 1.0, 0.0)
    g, gp = _section(doc, "grid", "")
    _unknown(g, {"x", "X"}, gp)
    gx, gxp = _section(g, "x", gp)
    gX, gXp = _section(g, "X", gp)
    grid = Grid2D(_grid(gx, gxp), _grid(gX, gXp))
    osec, opath = _section(doc, "oracle", "", required=False)
    oracle = OracleSettings()
    if osec is not None:
        _unknown(osec, {"dt", "order"}, opath)
        try:
            oracle = OracleSettings(_num(osec, "dt", opath, 1e-3), _num(osec, "order", opath, 2, integer=True))
        except ValueError as e:
            raise ScenarioError(opath, str(e)) from None
    engine = doc.get("engine", "analytic")
    if engine not in ("analytic", "oracle", "both"):
        raise ScenarioError("engine", f"expected analytic, oracle or both, got {engine!r}")
    nm = doc.get("name", name)
    if not isinstance(nm, str):
        raise ScenarioError("name", "expected a string")
    sc = Scenario(params, f, f_D, phi0, Phi0, grid, oracle, engine, nm)
    if validate:
        validate_scenario(sc)
    return sc


def validate_scenario(sc: Scenario):
    """Grid fit checks always; for analytic engines also the symmetry and sin(omega T) guards."""
    sc.check_fits()
    if sc.engine in ("analytic", "both"):
        derive_constants(sc.params, sc.f, sc.f_D)


def load_scenario(path, validate: bool = True) -> Scenario:
    path = Path(path)
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ScenarioError("<root>", f"invalid YAML: {e}") from None
    return scenario_from_dict(doc, name=path.stem, validate=validate)


def _tf_dict(tf: TimeFunction):
    d = {"family": tf.family}
    if tf.family in ("constant", "half_sine", "gaussian_window", "raised_cosine"):
        d["amplitude"] = tf.amplitude
    if tf.family == "gaussian_window":
        d["width"] = tf.width
        if tf.center is not None:
            d["center"] = tf.center
    if tf.family == "tabulated":
        d["samples"] = list(tf.samples)
    return d


def _state_dict(s):
    if isinstance(s, QuasiDelta):
        d = {"kind": "quasi_delta", "center": s.center}
        if s.width is not None:
            d["width"] = s.width
        return d
    return {"kind": "gaussian", "center": s.center, "width": s.width, "momentum": s.momentum}


def scenario_to_dict(sc: Scenario) -> dict:
    p = sc.params
    return {
        "name": sc.name,
        "engine": sc.engine,
        "params": {"m": p.m, "M": p.M, "omega": p.omega, "T": p.T},
        "coupling": _tf_dict(sc.f),
        "drive": _tf_dict(sc.f_D),
        "oscillator_state": _state_dict(sc.phi0),
        "pointer_state": _state_dict(sc.Phi0),
        "grid": {ax: {"min": g.min, "max": g.max, "n": g.n} for ax, g in (("x", sc.grid.x), ("X", sc.grid.X))},
        "oracle": {"dt": sc.oracle.dt, "order": sc.oracle.order},
    }


def dumps_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None)


def save_scenario(sc: Scenario, path):
    Path(path).write_text(dumps_scenario(sc))


def scenario_hash(sc: Scenario) -> str:
    return hashlib.sha256(dumps_scenario(sc).encode()).hexdigest()[:16]
