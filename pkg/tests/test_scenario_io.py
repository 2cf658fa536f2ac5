import math

import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from qmeter.errors import AsymmetricInput, GridError, ScenarioError, SingularDuration
from qmeter.model import GaussianState, OracleSettings, PhysicalParams, QuasiDelta, TimeFunction
from qmeter.scenario_io import (dumps_scenario, load_scenario, save_scenario, scenario_from_dict, scenario_hash,
                                scenario_to_dict)
from qmeter.suite import SCENARIO_NAMES, reference_dir

from conftest import small_scenario

MINIMAL = """
params: {m: 1, M: 2, omega: 1, T: 1}
coupling: {family: half_sine, amplitude: 1}
oscillator_state: {kind: gaussian, width: 0.7}
grid:
  x: {min: -8, max: 8, n: 128}
  X: {min: -10, max: 10, n: 128}
"""


def _doc(**patch):
    d = yaml.safe_load(MINIMAL)
    for dotted, value in patch.items():
        node = d
        keys = dotted.split("__")
        for k in keys[:-1]:
            node = node[k]
        if value is None:
            node.pop(keys[-1], None)
        else:
            node[keys[-1]] = value
    return d


def test_minimal_file_gets_defaults(tmp_path):
    p = tmp_path / "tiny.yaml"
    p.write_text(MINIMAL)
    sc = load_scenario(p)
    assert sc.name == "tiny" and sc.engine == "analytic"
    assert sc.f_D.is_zero and sc.f_D.role == "drive"
    assert sc.Phi0 == GaussianState(0.0, 1.0, 0.0)
    assert sc.phi0 == GaussianState(0.0, 0.7, 0.0)
    assert sc.oracle == OracleSettings()
    assert isinstance(sc.params.m, float)


@pytest.mark.parametrize("name", SCENARIO_NAMES)
def test_reference_files_round_trip(name, tmp_path):
    sc = load_scenario(reference_dir() / f"{name}.yaml")
    out = tmp_path / "copy.yaml"
    save_scenario(sc, out)
    again = load_scenario(out)
    assert again == sc
    assert out.read_text() == (reference_dir() / f"{name}.yaml").read_text()


_floats = st.floats(1e-6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(m=_floats, M=st.one_of(_floats, st.just(math.inf)), a=st.floats(-1e3, 1e3), w=_floats,
       samples=st.lists(st.floats(-10, 10), min_size=2, max_size=6), family=st.sampled_from(
           ["zero", "constant", "half_sine", "raised_cosine", "gaussian_window", "tabulated"]))
def test_round_trip_is_bit_exact(m, M, a, w, samples, family):
    T = 1.0
    if family == "tabulated":
        f = TimeFunction.tabulated(samples, T)
    elif family == "gaussian_window":
        f = TimeFunction.gaussian_window(a, w, T, center=0.3)
    elif family == "zero":
        f = TimeFunction.zero(T)
    else:
        f = TimeFunction(family, T, amplitude=a)
    sc = small_scenario(f=f, params=PhysicalParams(m, M, 1.0, T), phi0=QuasiDelta(0.1 * a % 1.0),
                        engine="oracle", name="prop")
    back = scenario_from_dict(yaml.safe_load(dumps_scenario(sc)), validate=False)
    assert back == sc
    assert dumps_scenario(back) == dumps_scenario(sc)


@pytest.mark.parametrize("patch,field", [
    (dict(params__m=None), "params.m"),
    (dict(params__m="heavy"), "params.m"),
    (dict(params__m=-1.0), "params"),
    (dict(params__spin=1), "params.spin"),
    (dict(coupling__family="square"), "coupling.family"),
    (dict(coupling__amplitude=None), "coupling.amplitude"),
    (dict(oscillator_state__kind="cat"), "oscillator_state.kind"),
    (dict(oscillator_state__width=None), "oscillator_state.width"),
    (dict(grid__x__n=100), "grid.x"),
    (dict(grid__x__n=64.5), "grid.x.n"),
    (dict(grid__X=None), "grid.X"),
    (dict(engine="quantum"), "engine"),
    (dict(coupling=[1, 2]), "coupling"),
    (dict(oracle={"dt": -1.0}), "oracle"),
    (dict(extra=1), "<root>.extra"),
])
def test_schema_errors_name_the_field(patch, field):
    with pytest.raises(ScenarioError) as info:
        scenario_from_dict(_doc(**patch))
    assert info.value.field == field


def test_tabulated_needs_samples():
    with pytest.raises(ScenarioError, match="coupling.samples"):
        scenario_from_dict(_doc(coupling={"family": "tabulated", "samples": [1.0]}))


def test_load_time_physics_guards():
    with pytest.raises(SingularDuration):
        scenario_from_dict(_doc(params__T=math.pi))
    asym = {"family": "tabulated", "samples": [0.0, 1.0]}
    with pytest.raises(AsymmetricInput):
        scenario_from_dict(_doc(coupling=asym))
    sc = scenario_from_dict(_doc(coupling=asym, engine="oracle"))
    assert not sc.is_symmetric
    with pytest.raises(GridError):
        scenario_from_dict(_doc(oscillator_state={"kind": "gaussian", "center": 7.9, "width": 0.7}))


def test_invalid_yaml(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("params: [unclosed")
    with pytest.raises(ScenarioError, match="invalid YAML"):
        load_scenario(p)


def test_hash_tracks_content():
    sc = small_scenario()
    assert scenario_hash(sc) == scenario_hash(small_scenario())
    assert scenario_hash(sc) != scenario_hash(sc.with_(oracle=OracleSettings(2e-3)))
    assert scenario_to_dict(sc)["params"]["M"] == 2.0
